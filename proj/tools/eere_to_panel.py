#!/usr/bin/env python3
"""Reshape EERE commercial/residential hourly load profiles into the panel CSVs
read by `sntf fit`.

The EERE files (one CSV per building, "Date/Time" column like " 01/01  01:00:00"
plus one column per end use) are not bundled; download them from OpenEI first.
Daily mean outside temperatures are not part of those files; supply them as a
site,day,temp CSV (e.g. derived from the TMY3 station of each site) or run the
baseline mode without them.

    python3 tools/eere_to_panel.py --out eere/ --temps temps.csv profiles/*.csv
    build/tools/sntf fit --loads eere/loads.csv --temps eere/temps.csv -R 6 --out eere/fit
"""

import argparse
import pathlib
import sys

import pandas as pd

LOAD_COLUMN = "Electricity:Facility [kW](Hourly)"


def reshape(path: pathlib.Path, column: str) -> pd.DataFrame:
    raw = pd.read_csv(path)
    stamp = raw["Date/Time"].str.split(expand=True)
    hour = stamp[1].str.slice(0, 2).astype(int)  # 1..24, end of the hourly interval
    return pd.DataFrame(
        {
            "site": path.stem,
            "day": stamp[0].str.replace("/", "-"),
            "time": (hour - 1).map(lambda h: f"{h:02d}:00"),
            "load": raw[column].astype(float),
        }
    )


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("profiles", nargs="+", type=pathlib.Path, help="EERE building CSV files")
    ap.add_argument("--out", type=pathlib.Path, required=True, help="output directory")
    ap.add_argument("--temps", type=pathlib.Path, help="site,day,temp CSV to copy alongside")
    ap.add_argument("--column", default=LOAD_COLUMN, help="load column to use")
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    loads = pd.concat([reshape(p, args.column) for p in args.profiles], ignore_index=True)
    loads.to_csv(args.out / "loads.csv", index=False)

    if args.temps:
        temps = pd.read_csv(args.temps)
        if list(temps.columns) != ["site", "day", "temp"]:
            print(f"error: {args.temps} must have header site,day,temp", file=sys.stderr)
            return 2
        missing = set(loads["site"]) - set(temps["site"])
        if missing:
            print(f"warning: no temperatures for {len(missing)} sites; their days are masked", file=sys.stderr)
        temps.to_csv(args.out / "temps.csv", index=False)
    print(f"wrote {loads['site'].nunique()} sites x {loads['day'].nunique()} days to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
