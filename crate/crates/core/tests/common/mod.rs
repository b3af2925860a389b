#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const COUNTRIES: [&str; 10] = ["AUS", "BRA", "DEU", "EGY", "FRA", "IND", "JPN", "KEN", "NGA", "USA"];
pub const AGES: [&str; 6] = ["18-25", "26-35", "36-45", "46-55", "56-65", "65+"];
pub const RELIGIONS: [&str; 3] = ["Christian", "Muslim", "Unaffiliated"];

pub fn write(path: &Path, body: &str) -> PathBuf {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).unwrap();
    }
    std::fs::write(path, body).unwrap();
    path.to_path_buf()
}

fn population(i: usize, j: usize) -> u64 {
    1_000 + ((i * 7919 + j * 104_729) % 9_000) as u64
}

/// Ten-country benchmark directory with all three tables.
pub fn world(dir: &Path) -> PathBuf {
    let bench = dir.join("benchmarks");
    let mut cga = String::from("# source: test_wpp\n# vintage: 2023\ncountry,gender,age_group,population\n");
    let mut rel = String::from("# source: test_pew\n# vintage: 2020\ncountry,religion,population\n");
    let mut env = String::from("# source: test_wup\n# vintage: 2018\ncountry,environment,population\n");
    for (i, c) in COUNTRIES.iter().enumerate() {
        for (g, gender) in ["Female", "Male"].iter().enumerate() {
            for (a, age) in AGES.iter().enumerate() {
                let _ = writeln!(cga, "{c},{gender},{age},{}", population(i, g * 6 + a));
            }
        }
        for (r, religion) in RELIGIONS.iter().enumerate() {
            let _ = writeln!(rel, "{c},{religion},{}", population(i, 20 + r));
        }
        let _ = writeln!(env, "{c},Urban,{}", population(i, 30));
        let _ = writeln!(env, "{c},Rural,{}", population(i, 31));
    }
    write(&bench.join("country_gender_age.csv"), &cga);
    write(&bench.join("country_religion.csv"), &rel);
    write(&bench.join("country_environment.csv"), &env);
    bench
}

/// Survey over the ten countries; `religion` toggles the religion column.
pub fn survey(dir: &Path, n: usize, religion: bool) -> PathBuf {
    let mut body = String::from(if religion { "id,country,sex,age,religion,area\n" } else { "id,country,sex,age,area\n" });
    for r in 0..n {
        let country = COUNTRIES[(r * 3 + r / 7) % 4 + (r % 11 == 0) as usize * 5];
        let sex = if r % 5 < 3 { "M" } else { "F" };
        let age = 18 + (r * 13) % 40;
        let area = if r % 10 < 8 { "Urban" } else { "Rural" };
        let _ = write!(body, "{r},{country},{sex},{age},");
        if religion {
            let _ = write!(body, "{},", RELIGIONS[r % 3]);
        }
        let _ = writeln!(body, "{area}");
    }
    write(&dir.join("survey.csv"), &body)
}
