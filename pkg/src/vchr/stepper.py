"""Linear second-order IEQ time stepping for the viscous Cahn-Hilliard
equation with hyperbolic relaxation.

The unknowns are the phase field ``phi``, its rate ``psi = phi_t`` and the
auxiliary variable ``U`` with ``U^2 = F(phi) + B``.  Each step freezes
``H = f / sqrt(F + B)`` at an extrapolated ``phi``, which makes the update
linear; eliminating ``U`` and ``psi`` leaves a single SPD problem for the
zero-mean part of ``phi^{n+1}`` (see :mod:`vchr.elliptic`).

Two schemes are provided:

``cn2``
    Crank-Nicolson, ``H`` at ``3/2 phi^n - 1/2 phi^{n-1}``.
``bdf2``
    Second-order backward differences, ``H`` at ``2 phi^n - phi^{n-1}``.
    Its first step is a ``cn2`` step so that ``psi^1`` has zero mean.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .elliptic import CGFailure, SpdOperator, SpectralPlan, cg_solve
from .grid import GridSpec
from .potential import PotentialSpec

log = logging.getLogger(__name__)


class Scheme(str, enum.Enum):
    CN2 = "cn2"
    BDF2 = "bdf2"


class SchemeConsistencyError(RuntimeError):
    """The computed fields do not satisfy the scheme's equations."""


class StepError(RuntimeError):
    def __init__(self, step, cause):
        super().__init__(f"step {step} failed: {cause}")
        self.step = step
        self.cause = cause


@dataclass(frozen=True)
class ModelParams:
    eps: float = 0.01
    alpha: float = 0.0
    beta: float = 0.0
    potential: PotentialSpec = PotentialSpec()

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")


@dataclass(frozen=True)
class SchemeConfig:
    scheme: Scheme = Scheme.CN2
    dt: float = 0.01
    cg_tol: float = 1e-10
    cg_maxit: int = 500
    self_check: bool = True

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.cg_tol <= 0 or self.cg_maxit < 1:
            raise ValueError("cg_tol must be positive and cg_maxit >= 1")


@dataclass(frozen=True)
class SolveInfo:
    iterations: int
    residual: float
    rhs_norm: float
    scheme: Scheme


@dataclass(frozen=True)
class StepperState:
    """Two time levels of every unknown plus bookkeeping.

    ``mu`` is the chemical potential produced by the step that created this
    state (``None`` for the initial state).
    """

    grid: GridSpec
    phi: np.ndarray
    phi_prev: np.ndarray
    psi: np.ndarray
    psi_prev: np.ndarray
    U: np.ndarray
    U_prev: np.ndarray
    step: int
    t: float
    mass0: float
    mu: np.ndarray | None = None
    solve: SolveInfo | None = None


def init_state(params: ModelParams, grid: GridSpec, phi0: np.ndarray) -> StepperState:
    phi0 = grid.check(phi0).copy()
    U0 = np.asarray(params.potential.U_init(phi0), dtype=float)
    psi0 = np.zeros_like(phi0)
    return StepperState(grid, phi0, phi0.copy(), psi0, psi0.copy(), U0, U0.copy(),
                        step=0, t=0.0, mass0=grid.integral(phi0))


def extrapolate(state: StepperState, scheme: Scheme | str) -> np.ndarray:
    if Scheme(scheme) is Scheme.CN2:
        return 1.5 * state.phi - 0.5 * state.phi_prev
    return 2.0 * state.phi - state.phi_prev


def alpha_hat_cn(alpha: float, dt: float) -> float:
    """Coefficient of ``phi^{n+1}`` in the reduced CN2 momentum equation."""
    return (alpha / dt + 0.5) * 2.0 / dt


def alpha_tilde_bdf(alpha: float, dt: float) -> float:
    """Coefficient of ``phi^{n+1}`` in the reduced BDF2 momentum equation."""
    return (1.5 * alpha / dt + 1.0) * 1.5 / dt


@dataclass
class _Reduced:
    """The step written as ``a phi' = Lap mu + src``, ``mu = P phi' + g``,
    ``P = -c1 eps^2 Lap + hsq + visc``."""

    a: float
    src: np.ndarray
    g: np.ndarray
    c1: float
    hsq: np.ndarray
    visc: float
    guess: np.ndarray


def _solve(red: _Reduced, state: StepperState, params: ModelParams, cfg: SchemeConfig,
           plan: SpectralPlan, scheme: Scheme):
    grid = state.grid
    V = state.mass0 / grid.volume
    op = SpdOperator(plan, red.a, params.eps, red.c1, red.visc, red.hsq)
    # shift out the known mean; the unknown mean of mu drops with the projection
    fsrc = grid.project_zero_mean(red.src - red.a * V)
    gsrc = red.g + (red.hsq + red.visc) * V
    b = grid.project_zero_mean(-plan.inv_laplacian(fsrc, check=False) - gsrc)
    res = cg_solve(op, b, cfg.cg_tol, cfg.cg_maxit, x0=red.guess - V)
    phi_new = res.x + V
    mu = (-red.c1 * params.eps**2 * grid.laplacian(phi_new)
          + (red.hsq + red.visc) * phi_new + red.g)
    if cfg.self_check:
        # the reduced equation in inverse-Laplacian form, rebuilt with the stencil
        lhs = red.a * plan.inv_laplacian(res.x, check=False) - plan.inv_laplacian(fsrc, check=False)
        defect = grid.norm(lhs - grid.project_zero_mean(mu))
        roundoff = 1e-13 * (grid.norm(lhs) + grid.norm(mu) + grid.norm(b))
        if defect > 10 * cfg.cg_tol * res.rhs_norm + roundoff:
            raise SchemeConsistencyError(
                f"momentum equation defect {defect:.3e} exceeds "
                f"{10 * cfg.cg_tol:.1e} x |b| = {10 * cfg.cg_tol * res.rhs_norm:.3e}")
    info = SolveInfo(res.iterations, res.residual, res.rhs_norm, scheme)
    return phi_new, mu, info


def step_cn(state: StepperState, params: ModelParams, cfg: SchemeConfig,
            plan: SpectralPlan) -> StepperState:
    dt, al, be, eps = cfg.dt, params.alpha, params.beta, params.eps
    grid = state.grid
    phi, psi, U = state.phi, state.psi, state.U
    phi_star = extrapolate(state, Scheme.CN2)
    H = params.potential.H(phi_star)

    g1 = U - 0.5 * H * phi
    g2 = -(2.0 / dt) * phi - psi
    k = al / dt + 0.5
    a = alpha_hat_cn(al, dt)
    g3 = -k * g2 + (al / dt - 0.5) * psi
    g4 = -0.5 * eps**2 * grid.laplacian(phi) + 0.5 * H * (g1 + U) - (be / dt) * phi
    red = _Reduced(a, g3, g4, 0.5, 0.25 * H * H, be / dt, phi_star)
    phi_new, mu, info = _solve(red, state, params, cfg, plan, Scheme.CN2)

    psi_new = (2.0 / dt) * phi_new + g2
    U_new = 0.5 * H * phi_new + g1
    if cfg.self_check:
        _check_rate(grid, 0.5 * (psi_new + psi), (phi_new - phi) / dt)
    return StepperState(grid, phi_new, phi, psi_new, psi, U_new, U,
                        state.step + 1, state.t + dt, state.mass0, mu, info)


def step_bdf(state: StepperState, params: ModelParams, cfg: SchemeConfig,
             plan: SpectralPlan) -> StepperState:
    if state.step < 1:
        raise ValueError("the first BDF2 step must be taken with step_cn")
    dt, al, be, eps = cfg.dt, params.alpha, params.beta, params.eps
    grid = state.grid
    phi, psi, U = state.phi, state.psi, state.U
    phi_dag = extrapolate(state, Scheme.BDF2)
    H = params.potential.H(phi_dag)

    phi_pm = (4.0 * phi - state.phi_prev) / 3.0
    U_pm = (4.0 * U - state.U_prev) / 3.0
    psi_pm = (4.0 * psi - state.psi_prev) / 3.0
    c = 1.5 / dt
    h1 = U_pm - 0.5 * H * phi_pm
    h2 = -c * phi_pm
    k = al * c + 1.0
    a = alpha_tilde_bdf(al, dt)
    h3 = -k * h2 + al * c * psi_pm
    h4 = H * h1 - be * c * phi_pm
    red = _Reduced(a, h3, h4, 1.0, 0.5 * H * H, be * c, phi_dag)
    phi_new, mu, info = _solve(red, state, params, cfg, plan, Scheme.BDF2)

    psi_new = c * phi_new + h2
    U_new = 0.5 * H * phi_new + h1
    if cfg.self_check:
        _check_rate(grid, psi_new, (3.0 * phi_new - 4.0 * phi + state.phi_prev) / (2.0 * dt))
    return StepperState(grid, phi_new, phi, psi_new, psi, U_new, U,
                        state.step + 1, state.t + dt, state.mass0, mu, info)


def _check_rate(grid, psi_side, phi_side):
    defect = float(np.max(np.abs(psi_side - phi_side)))
    scale = float(np.max(np.abs(phi_side))) + 1.0
    if defect > 1e-10 * scale:
        raise SchemeConsistencyError(f"psi/phi rate relation defect {defect:.3e}")


def advance(state: StepperState, params: ModelParams, cfg: SchemeConfig,
            plan: SpectralPlan) -> StepperState:
    """One step of the configured scheme (BDF2 starts with a CN2 step)."""
    if cfg.scheme is Scheme.BDF2 and state.step >= 1:
        return step_bdf(state, params, cfg, plan)
    return step_cn(state, params, cfg, plan)


Observer = Callable[[int, StepperState, object], None]


def run(state: StepperState, params: ModelParams, cfg: SchemeConfig, n_steps: int,
        observer: Observer | None = None, plan: SpectralPlan | None = None,
        records: bool = True) -> StepperState:
    """Advance ``n_steps`` steps, calling ``observer(step, state, record)``
    after each one.  ``record`` is a :class:`vchr.diagnostics.EnergyRecord`
    (``None`` when ``records`` is false)."""
    from . import diagnostics

    if n_steps < 1:
        raise ValueError(f"n_steps must be at least 1, got {n_steps}")
    plan = plan or SpectralPlan(state.grid)
    for _ in range(n_steps):
        try:
            new = advance(state, params, cfg, plan)
        except (CGFailure, SchemeConsistencyError) as exc:
            raise StepError(state.step + 1, exc) from exc
        if observer is not None:
            rec = diagnostics.make_record(params, cfg, state, new, plan) if records else None
            observer(new.step, new, rec)
        state = new
    return state


