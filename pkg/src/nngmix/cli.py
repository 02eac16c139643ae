"""Command-line entry point.

    nngmix synth     --config clusters.json|--preset two_blobs --seed 0 --out data.csv
    nngmix generate  --config exp.json --seed 0 --out dir/
    nngmix evaluate  --config exp.json --seed 0 [--out result.json]
    nngmix sweep     --config exp.json [--out dir/] [--jobs 4]
    nngmix intrusion --config exp.json [--out report.json]
    nngmix grid      --config exp.json --seed 0 --out grid.csv
    nngmix project   --config exp.json --seed 0 --out proj.csv  (or --input data.csv)

Exit codes: 0 success, 1 config error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .dataset import load_cluster_spec, load_csv, make_synthetic_clusters, save_csv
from .detect import fit_detector
from .errors import ConfigError, NNGMixError
from .harness import (PRESETS, ExperimentConfig, Region, export_projection, export_score_grid,
                      generated_for, measure_intrusion, run_experiment, run_sweep)
from .randgen import RngStream

log = logging.getLogger("nngmix")


def _config(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError(f"'{args.command}' needs --config")
    return ExperimentConfig.from_json(args.config)


def _emit(obj, out):
    text = json.dumps(obj, indent=1)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    print(text)


def cmd_synth(args):
    if args.preset:
        clusters = PRESETS.get(args.preset)
        if clusters is None:
            raise ConfigError(f"unknown preset {args.preset!r}; have {sorted(PRESETS)}")
    elif args.config:
        clusters = load_cluster_spec(args.config)
    else:
        raise ConfigError("synth needs --config (cluster JSON array) or --preset")
    data = make_synthetic_clusters(clusters, args.seed)
    out = args.out or "synthetic.csv"
    save_csv(out, data.features, data.labels)
    print(f"wrote {data.n} rows ({data.n_anomalies} anomalies, d={data.d}) to {out}")


def cmd_generate(args):
    cfg = _config(args)
    plan, gen = generated_for(cfg, args.seed)
    out = Path(args.out or "generated")
    gen.to_csv(out / "pseudo_anomalies.csv")
    gen.write_provenance(out / "provenance.json")
    save_csv(out / "labeled_anomalies.csv", plan.labeled_anomalies, np.ones(plan.n_labeled))
    print(f"generated {gen.n} rows from |A|={plan.n_labeled}, |H|={plan.n_unlabeled} into {out}")


def cmd_evaluate(args):
    cfg = _config(args)
    res = run_experiment(cfg.cells()[0], args.seed)
    _emit(res.to_dict(), args.out)


def cmd_sweep(args):
    cfg = _config(args)
    if args.seed is not None:
        cfg.seeds = [args.seed]
    sw = run_sweep(cfg, args.out, jobs=args.jobs)
    print(f"{len(sw.results)} results ({sw.n_computed} computed), {len(sw.aggregates)} aggregates "
          f"in {sw.out_dir}")
    gw = max([10] + [len(a.cell["generator"]) for a in sw.aggregates])
    dw = max([9] + [len(a.cell["detector"]) for a in sw.aggregates])
    for a in sw.aggregates:
        c = a.cell
        print(f"  {c['generator']:>{gw}} {c['detector']:>{dw}} rho={c['rho']:<5} gamma={c['gamma']:<4} "
              f"M={c['M']:<3} auc={a.mean_auc:.4f} +- {a.std_auc:.4f}")


def cmd_intrusion(args):
    cfg = _config(args)
    seeds = [args.seed] if args.seed is not None else cfg.seeds
    region = Region.from_dict(cfg.region) if cfg.region else None
    gens = [g if g.kind != "none" else None for g in cfg.generators]
    rep = measure_intrusion([g for g in gens if g], cfg.dataset.clusters, region,
                            cfg.intrusion_samples, seeds)
    _emit(rep.to_dict(), args.out)


def cmd_grid(args):
    cfg = _config(args)
    cell = cfg.cells()[0]
    plan, gen = generated_for(cfg, args.seed)
    model = fit_detector(cell.detector, plan.labeled_anomalies, gen.samples, plan.unlabeled_pool,
                         RngStream(args.seed, "detector"))
    if cfg.grid_bounds:
        bounds = cfg.grid_bounds
    else:
        pts = np.vstack([plan.labeled_anomalies, plan.unlabeled_pool])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        pad = 0.1 * (hi - lo)
        bounds = (lo[0] - pad[0], hi[0] + pad[0], lo[1] - pad[1], hi[1] + pad[1])
    out = args.out or "grid.csv"
    export_score_grid(model, bounds, cfg.grid_resolution, out)
    print(f"wrote {cfg.grid_resolution[0] * cfg.grid_resolution[1]} grid points to {out}")


def cmd_project(args):
    if args.input:
        data = load_csv(args.input)
        X, y = data.features, data.labels
    else:
        cfg = _config(args)
        plan, gen = generated_for(cfg, args.seed)
        # 0 unlabeled, 1 labeled anomaly, 2 pseudo-anomaly
        X = np.vstack([plan.unlabeled_pool, plan.labeled_anomalies, gen.samples])
        y = np.concatenate([np.zeros(plan.n_unlabeled), np.ones(plan.n_labeled), np.full(gen.n, 2)])
    out = args.out or "projection.csv"
    _, vals = export_projection(X, y, out)
    print(f"wrote {len(X)} projected rows to {out}; leading eigenvalues {vals[:2].round(4).tolist()}")


COMMANDS = {
    "synth": cmd_synth,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "intrusion": cmd_intrusion,
    "grid": cmd_grid,
    "project": cmd_project,
}


class _Parser(argparse.ArgumentParser):
    # usage errors are config errors (exit 1); argparse would exit 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nngmix", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="experiment JSON (cluster JSON array for synth)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", help="output file or directory")
        sp.add_argument("--jobs", type=int, default=1)
        if name == "synth":
            sp.add_argument("--preset", choices=sorted(PRESETS))
        if name == "project":
            sp.add_argument("--input", help="CSV to project instead of a config-driven split")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is None and args.command not in ("sweep", "intrusion"):
        args.seed = 0
    try:
        COMMANDS[args.command](args)
    except NNGMixError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
