"""Command line interface.

Exit status: 0 on success with all invariants satisfied, 2 when a run
finished but violated an invariant, 1 on any error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .experiments import PRESETS, ConvergenceStudy, run_experiment, sweep
from .io import snapshot_read

log = logging.getLogger("vchr")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def cmd_run(args) -> int:
    cfg = cfgmod.load(args.config)
    res = run_experiment(cfg, args.out)
    last = res.records[-1]
    print(f"steps={last.step} t={last.t:g} E_discrete={last.E_discrete:.10g} "
          f"max_identity_residual={max(r.identity_residual for r in res.records):.3e}")
    print(f"energy log: {res.csv_path}")
    for v in res.violations:
        print(f"VIOLATION {v}", file=sys.stderr)
    return res.status


def cmd_converge(args) -> int:
    cfg = cfgmod.load(args.config)
    study = ConvergenceStudy(cfg, args.dt0)
    table = study.table(args.kmax)
    text = table.as_csv()
    print(text, end="")
    print(f"order_phi={table.order_phi:.4f} order_U={table.order_U:.4f}")
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    errs = [r.err_phi for r in table.rows]
    if any(b > a for a, b in zip(errs, errs[1:])):
        print("VIOLATION Cauchy errors are not decreasing", file=sys.stderr)
        return 2
    return 0


def cmd_sweep(args) -> int:
    cfg = cfgmod.load(args.config)
    entries = sweep(cfg, args.alpha, args.beta, args.out)
    for e in entries:
        print(f"alpha={e.alpha:g} beta={e.beta:g} status={e.status} "
              f"final_E_transformed={e.final_energy:.10g} log={e.csv_path}")
    return 2 if any(e.status for e in entries) else 0


def cmd_inspect(args) -> int:
    grid, phi = snapshot_read(args.snapshot)
    print(f"grid: n={grid.n} length={grid.length} bc={grid.bc.value}")
    print(f"min={phi.min():.10g} max={phi.max():.10g} mean={grid.mean(phi):.17g}")
    print(f"integral={grid.integral(phi):.17g} finite={bool(np.all(np.isfinite(phi)))}")
    return 0


def cmd_config(args) -> int:
    text = cfgmod.dumps(PRESETS[args.preset]())
    if args.output:
        Path(args.output).write_text(text)
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vchr", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one simulation and audit its energy log")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default: output.dir from the config)")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("converge", help="time-step refinement study")
    c.add_argument("config")
    c.add_argument("--kmax", type=int, required=True)
    c.add_argument("--dt0", type=float, help="coarsest step (default: scheme.dt)")
    c.add_argument("--out", help="write the table as CSV to this path")
    c.set_defaults(func=cmd_converge)

    s = sub.add_parser("sweep", help="run every (alpha, beta) combination")
    s.add_argument("config")
    s.add_argument("--alpha", type=_floats, required=True)
    s.add_argument("--beta", type=_floats, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    i = sub.add_parser("inspect", help="summarise a snapshot file")
    i.add_argument("snapshot")
    i.set_defaults(func=cmd_inspect)

    k = sub.add_parser("config", help="print a preset configuration")
    k.add_argument("preset", choices=sorted(PRESETS))
    k.add_argument("-o", "--output")
    k.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001
        if args.verbose:
            log.exception("failed")
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
