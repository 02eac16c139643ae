"""Pivot a sweep's aggregates.json into a text table of mean +- std AUC.

Rows are (generator, M), columns are (detector, rho[, gamma]).

    python3 scripts/summarize.py runs/two_blob_sweep
"""

import argparse
import json
from collections import defaultdict
from pathlib import Path


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("run_dir")
    args = ap.parse_args()
    aggs = json.loads((Path(args.run_dir) / "aggregates.json").read_text())

    multi_gamma = len({a["cell"]["gamma"] for a in aggs}) > 1
    table = defaultdict(dict)
    cols = []
    for a in aggs:
        c = a["cell"]
        col = (c["detector"], c["rho"]) + ((c["gamma"],) if multi_gamma else ())
        if col not in cols:
            cols.append(col)
        table[(c["generator"], c["M"])][col] = f"{a['mean_auc']:.3f}+-{a['std_auc']:.3f}"

    head = ["/".join(str(x) for x in col) for col in cols]
    width = max(13, *(len(h) for h in head))
    rowname = max(len(f"{g} M={m}") for g, m in table)
    print(" " * rowname + "  " + "  ".join(h.rjust(width) for h in head))
    for (g, m), cells in table.items():
        print(f"{g} M={m}".ljust(rowname) + "  " + "  ".join(cells.get(col, "-").rjust(width) for col in cols))


if __name__ == "__main__":
    main()
