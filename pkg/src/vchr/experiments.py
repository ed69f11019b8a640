"""Experiment drivers: single runs with logging, time-step refinement studies
and (alpha, beta) sweeps."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import RunConfig
from .diagnostics import EnergyRecord, initial_record
from .elliptic import SpectralPlan
from .grid import GridSpec
from .ic import InitialCondition, make_ic
from .io import EnergyCsvWriter, snapshot_write
from .potential import PotentialSpec
from .stepper import ModelParams, Scheme, SchemeConfig, StepperState, init_state, run

log = logging.getLogger(__name__)

ENERGY_SLACK = 1e-10
CONSERVATION_TOL = 1e-9


def identity_tolerance(scheme: SchemeConfig) -> float:
    """Bound on the relative energy-balance residual of one step."""
    return 100.0 * scheme.cg_tol


def check_invariants(records: list[EnergyRecord], scheme: SchemeConfig,
                     mass0: float) -> list[str]:
    """Audit an energy log; returns human-readable violations (empty if clean)."""
    bad = []
    tol = identity_tolerance(scheme)
    for prev, rec in zip(records, records[1:]):
        # a BDF2 run's first step is a CN2 step, which dissipates the CN2 energy
        key = "E_transformed" if scheme.scheme is Scheme.BDF2 and rec.step == 1 else "E_discrete"
        e0, e1 = getattr(prev, key), getattr(rec, key)
        if e1 > e0 + ENERGY_SLACK * max(1.0, abs(e0)):
            bad.append(f"step {rec.step}: {key} rose by {e1 - e0:.3e}")
    for rec in records:
        if not all(math.isfinite(v) for v in (rec.E_original, rec.E_discrete, rec.U_deviation)):
            bad.append(f"step {rec.step}: non-finite diagnostics")
        if rec.identity_residual > tol:
            bad.append(f"step {rec.step}: energy balance residual {rec.identity_residual:.3e} > {tol:.1e}")
        if abs(rec.mass_drift) > CONSERVATION_TOL * (1.0 + abs(mass0)):
            bad.append(f"step {rec.step}: mass drift {rec.mass_drift:.3e}")
        if abs(rec.psi_mean) > CONSERVATION_TOL:
            bad.append(f"step {rec.step}: mean of psi {rec.psi_mean:.3e}")
    return bad


@dataclass
class Problem:
    grid: GridSpec
    params: ModelParams
    scheme: SchemeConfig
    phi0: np.ndarray
    plan: SpectralPlan

    @classmethod
    def from_config(cls, cfg: RunConfig) -> Problem:
        phi0 = make_ic(cfg.ic, cfg.grid, cfg.model.eps, cfg.rng_seed)
        return cls(cfg.grid, cfg.model, cfg.scheme, phi0, SpectralPlan(cfg.grid))


@dataclass
class ExperimentResult:
    status: int
    records: list[EnergyRecord]
    final: StepperState
    violations: list[str]
    csv_path: Path | None = None
    snapshots: list[Path] = field(default_factory=list)


def simulate(cfg: RunConfig, observer=None, problem: Problem | None = None):
    """Run without touching the file system; returns (records, final state)."""
    pb = problem or Problem.from_config(cfg)
    state = init_state(pb.params, pb.grid, pb.phi0)
    records = [initial_record(pb.params, state, pb.plan)]

    def obs(step, st, rec):
        records.append(rec)
        if observer is not None:
            observer(step, st, rec)

    final = run(state, pb.params, pb.scheme, cfg.steps, obs, pb.plan)
    return records, final


def run_experiment(cfg: RunConfig, outdir=None, prefix: str = "") -> ExperimentResult:
    """Run ``cfg``, writing ``<prefix>energy.csv`` and snapshots to ``outdir``
    (defaults to ``cfg.output.dir``), then audit the full energy log.

    ``status`` is 0 when every invariant held and 2 otherwise.
    """
    out = Path(outdir if outdir is not None else cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{prefix}energy.csv"
    writer = EnergyCsvWriter(csv_path)  # fails on unwritable output before any compute
    pb = Problem.from_config(cfg)
    every, snap_every = cfg.output.every, cfg.output.snapshot_every
    n = cfg.steps
    snaps = [snapshot_write(pb.grid, pb.phi0, out / f"{prefix}phi_{0:07d}.vchr")]

    def observer(step, st, rec):
        if step % every == 0 or step == n:
            writer.write(rec)
        if (snap_every and step % snap_every == 0) or step == n:
            snaps.append(snapshot_write(pb.grid, st.phi, out / f"{prefix}phi_{step:07d}.vchr"))

    try:
        state0 = init_state(pb.params, pb.grid, pb.phi0)
        rec0 = initial_record(pb.params, state0, pb.plan)
        writer.write(rec0)
        records = [rec0]

        def obs(step, st, rec):
            records.append(rec)
            observer(step, st, rec)

        final = run(state0, pb.params, pb.scheme, n, obs, pb.plan)
    finally:
        writer.close()
    snaps.append(snapshot_write(pb.grid, final.U, out / f"{prefix}U_{final.step:07d}.vchr"))
    violations = check_invariants(records, pb.scheme, final.mass0)
    for v in violations:
        log.warning("invariant violated: %s", v)
    return ExperimentResult(2 if violations else 0, records, final, violations, csv_path, snaps)


@dataclass
class ConvergenceRow:
    k: int
    dt: float
    err_phi: float
    err_U: float


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow]
    order_phi: float
    order_U: float

    def as_csv(self) -> str:
        lines = ["k,dt,err_phi,err_U"]
        lines += [f"{r.k},{r.dt:.17g},{r.err_phi:.17g},{r.err_U:.17g}" for r in self.rows]
        return "\n".join(lines) + "\n"


def fitted_order(errors, floor: float = 1e-14) -> float:
    """Minus the least-squares slope of ``log2(error)`` against refinement
    level; NaN when the errors are at round-off level."""
    e = np.asarray(errors, dtype=float)
    if len(e) < 2 or np.any(e <= floor):
        return float("nan")
    k = np.arange(len(e))
    return float(-np.polyfit(k, np.log2(e), 1)[0])


class ConvergenceStudy:
    """Cauchy refinement in time: ``dt_k = dt0 / 2^k``, errors between adjacent
    levels at the common end time.  Finished levels are cached, so raising
    ``k_max`` only computes the new ones."""

    def __init__(self, cfg: RunConfig, dt0: float | None = None):
        if cfg.t_end is None:
            raise ValueError("a convergence study needs t_end, not n_steps")
        self.cfg = cfg
        self.dt0 = dt0 if dt0 is not None else cfg.scheme.dt
        self.problem = Problem.from_config(cfg)
        self._finals: dict[int, StepperState] = {}

    def final(self, k: int) -> StepperState:
        if k not in self._finals:
            dt = self.dt0 / 2**k
            cfg = self.cfg.replace({"scheme.dt": dt, "t_end": self.cfg.t_end})
            pb = Problem(self.problem.grid, self.problem.params, cfg.scheme,
                         self.problem.phi0, self.problem.plan)
            try:
                state = init_state(pb.params, pb.grid, pb.phi0)
                self._finals[k] = run(state, pb.params, pb.scheme, cfg.steps, None, pb.plan,
                                      records=False)
            except Exception as exc:
                raise RuntimeError(f"refinement level k={k} (dt={dt:g}) failed: {exc}") from exc
            log.info("level k=%d dt=%g done", k, dt)
        return self._finals[k]

    def table(self, k_max: int) -> ConvergenceTable:
        if k_max < 1:
            raise ValueError("k_max must be >= 1")
        g = self.problem.grid
        rows = []
        for k in range(k_max):
            a, b = self.final(k), self.final(k + 1)
            rows.append(ConvergenceRow(k, self.dt0 / 2**k, g.norm(a.phi - b.phi), g.norm(a.U - b.U)))
        return ConvergenceTable(rows, fitted_order([r.err_phi for r in rows]),
                                fitted_order([r.err_U for r in rows]))


def convergence_study(cfg: RunConfig, k_max: int, dt0: float | None = None) -> ConvergenceTable:
    """Levels ``k = 0..k_max`` (``k_max`` Cauchy differences)."""
    if k_max < 3:
        raise ValueError("k_max must be >= 3")
    return ConvergenceStudy(cfg, dt0).table(k_max)


@dataclass
class SweepEntry:
    alpha: float
    beta: float
    status: int
    final_energy: float
    csv_path: Path


def sweep(cfg: RunConfig, alphas, betas, outdir=None) -> list[SweepEntry]:
    out = Path(outdir if outdir is not None else cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for a in alphas:
        for b in betas:
            sub = cfg.replace({"model.alpha": float(a), "model.beta": float(b)})
            res = run_experiment(sub, out, prefix=f"a{a:g}_b{b:g}_")
            entries.append(SweepEntry(a, b, res.status, res.records[-1].E_transformed, res.csv_path))
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "beta", "status", "final_E_transformed", "energy_csv"])
        for e in entries:
            w.writerow([f"{e.alpha:g}", f"{e.beta:g}", e.status, f"{e.final_energy:.17g}",
                        e.csv_path.name])
    return entries


def _cfg(grid, model, scheme, ic, **kw) -> RunConfig:
    return RunConfig(grid=grid, model=model, scheme=scheme, ic=ic, **kw)


PRESETS = {
    # time-step refinement, two kissing bubbles
    "convergence": lambda: _cfg(
        GridSpec.square(128), ModelParams(0.01, 0.5, 0.5),
        SchemeConfig("cn2", 0.02, 1e-12), InitialCondition("two_bubbles"),
        t_end=0.4, n_steps=None),
    # coalescence of two bubbles; the full study runs to t = 200
    "coalescence": lambda: _cfg(
        GridSpec.square(128), ModelParams(0.01, 0.0, 1.0),
        SchemeConfig("cn2", 0.01), InitialCondition("two_bubbles"),
        t_end=10.0, n_steps=None, output=cfgmod.OutputSpec(every=10, snapshot_every=200)),
    # large-step energy decay
    "energy": lambda: _cfg(
        GridSpec.square(128), ModelParams(0.01, 0.5, 0.5),
        SchemeConfig("cn2", 1.0), InitialCondition("cos_product"), n_steps=50),
    # 3-D spinodal decomposition, Flory-Huggins
    "spinodal": lambda: _cfg(
        GridSpec.square(48, dim=3, length=2 * np.pi),
        ModelParams(0.01, 0.5, 0.5, PotentialSpec.flory_huggins()),
        SchemeConfig("cn2", 0.01), InitialCondition("random", phibar=0.5),
        n_steps=500, output=cfgmod.OutputSpec(every=10, snapshot_every=100)),
}
