"""Generate the synthetic demo benchmarks and survey waves under data/demo/.

The numbers are invented. They only have the shape of real UN/Pew tables
(same axes, similar stratum counts) so the CLI can be exercised end to end.

Usage: python scripts/make_demo.py
"""
import csv
import pathlib

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parent.parent
OUT = ROOT / "data" / "demo"
AGES = ["18-25", "26-35", "36-45", "46-55", "56-65", "65+"]
RELIGIONS = ["Buddhist", "Christian", "Hindu", "Jewish", "Muslim", "Other", "Unaffiliated"]
RAW_RELIGION = {"Unaffiliated": "No religion", "Christian": "Christianity", "Muslim": "Islam"}


def rollup():
    rows = []
    with open(ROOT / "data" / "geo_rollup.csv", encoding="utf-8") as f:
        body = [line for line in f if not line.startswith("#")]
    for r in csv.DictReader(body):
        rows.append(r)
    return rows


def write_table(path, source, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(f"# source: {source}\n# vintage: 2024\n")
        f.write("# provenance: synthetic demo data from scripts/make_demo.py\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main():
    rng = np.random.default_rng(20240601)
    geo = rollup()
    order = rng.permutation(len(geo))
    countries = [geo[i] for i in sorted(order[:230])]
    size = {c["country"]: float(rng.lognormal(15.5, 1.6)) for c in countries}
    youth = {c["country"]: float(rng.uniform(0.6, 1.5)) for c in countries}

    bench = OUT / "benchmarks"
    bench.mkdir(parents=True, exist_ok=True)

    # 225 countries × 2 × 6 = 2,700 strata.
    cga = []
    age_share = {}
    for c in countries[:225]:
        code = c["country"]
        w = np.array([youth[code] ** (-i) for i in range(len(AGES))])
        w /= w.sum()
        age_share[code] = w
        for g, gshare in (("Female", 0.505), ("Male", 0.495)):
            for a, s in zip(AGES, w):
                cga.append([code, g, a, round(size[code] * gshare * s)])
    write_table(bench / "country_gender_age.csv", "demo_wpp", ["country", "gender", "age_group", "population"], cga)

    # 230 countries × 7 = 1,610 strata.
    religion_share = {}
    rel = []
    for c in countries:
        code = c["country"]
        alpha = np.full(len(RELIGIONS), 0.3)
        alpha[rng.integers(len(RELIGIONS))] = 6.0
        share = rng.dirichlet(alpha)
        religion_share[code] = share
        for r, s in zip(RELIGIONS, share):
            rel.append([code, r, round(size[code] * s)])
    write_table(bench / "country_religion.csv", "demo_pew", ["country", "religion", "population"], rel)

    # 225 countries × 2 = 450 strata.
    urban_share = {}
    env = []
    for c in countries[:225]:
        code = c["country"]
        u = float(rng.beta(3, 2.5))
        urban_share[code] = u
        env.append([code, "Urban", round(size[code] * u)])
        env.append([code, "Rural", round(size[code] * (1 - u))])
    write_table(bench / "country_environment.csv", "demo_wup", ["country", "environment", "population"], env)

    # Online-panel style waves: a few dozen large countries, young, urban.
    names = {c["country"]: c["name"] for c in countries}
    panel = sorted(countries[:225], key=lambda c: -size[c["country"]])[:60]
    codes = [c["country"] for c in panel]
    base = np.array([size[c] ** 0.6 for c in codes])
    for wave, n in ((1, 3000), (2, 3200)):
        wrng = np.random.default_rng(1000 + wave)
        pick = base * wrng.uniform(0.8, 1.25, len(base))
        pick /= pick.sum()
        rows = []
        for rid in range(1, n + 1):
            code = codes[wrng.choice(len(codes), p=pick)]
            country = names[code] if wrng.random() < 0.15 else code
            sex = wrng.choice(["F", "M", "Female", "Male"], p=[0.3, 0.4, 0.1, 0.2])
            bracket = wrng.choice(len(AGES), p=[0.3, 0.3, 0.18, 0.12, 0.07, 0.03])
            lo = [18, 26, 36, 46, 56, 66][bracket]
            age = str(int(lo + wrng.integers(0, 8 if bracket < 5 else 15)))
            if wrng.random() < 0.01:
                age = str(int(wrng.integers(14, 18)))
            if wrng.random() < 0.01:
                age = ""
            share = religion_share[code] * np.array([1, 1, 1, 1, 1, 1, 2.5])
            religion = RELIGIONS[wrng.choice(len(RELIGIONS), p=share / share.sum())]
            religion = RAW_RELIGION.get(religion, religion)
            if wrng.random() < 0.04:
                religion = "NA"
            urban = wrng.random() < min(0.97, urban_share[code] + 0.35)
            area = "urban" if urban else "rural"
            rows.append([f"W{wave}-{rid:05d}", country, sex, age, religion, area])
        with open(OUT / f"wave{wave}.csv", "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["respondent_id", "country", "sex", "age", "religion", "area"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
