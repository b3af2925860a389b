"""Regenerate data/geo_rollup.csv from country_converter's country table.

Usage: pip download --no-deps country_converter && python scripts/make_rollup.py <country_data.tsv>
"""
import csv
import sys

CONTINENT = {
    "Eastern Africa": "Africa", "Middle Africa": "Africa", "Northern Africa": "Africa",
    "Southern Africa": "Africa", "Western Africa": "Africa",
    "Central Asia": "Asia", "Eastern Asia": "Asia", "South-Eastern Asia": "Asia",
    "Southern Asia": "Asia", "Western Asia": "Asia",
    "Eastern Europe": "Europe", "Northern Europe": "Europe", "Southern Europe": "Europe",
    "Western Europe": "Europe",
    "Caribbean": "Latin America and the Caribbean",
    "Central America": "Latin America and the Caribbean",
    "South America": "Latin America and the Caribbean",
    "Northern America": "Northern America",
    "Australia and New Zealand": "Oceania", "Melanesia": "Oceania",
    "Micronesia": "Oceania", "Polynesia": "Oceania",
}
# M49 places Nauru in Micronesia.
REGION_FIXES = {"NRU": "Micronesia"}


def main(path):
    rows = list(csv.DictReader(open(path, encoding="utf-8"), delimiter="\t"))
    out = []
    for r in rows:
        region = r["UNregion"].strip()
        if r["obsolete"].strip() or not region or region == "Antarctica":
            continue
        region = region.replace("South-eastern Asia", "South-Eastern Asia")
        region = REGION_FIXES.get(r["ISO3"], region)
        out.append((r["ISO3"], region, CONTINENT[region], r["name_short"]))
    out.sort()
    w = csv.writer(sys.stdout, lineterminator="\n")
    print("# source: UN M49 geographic regions (via country_converter 1.3.2)")
    print("# vintage: 2024")
    w.writerow(["country", "region", "continent", "name"])
    w.writerows(out)


if __name__ == "__main__":
    main(sys.argv[1])
