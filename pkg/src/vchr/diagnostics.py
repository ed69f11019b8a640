"""Energies and discrete energy laws.

Gradient norms are always ``grid.dirichlet_energy`` (``(-Lap f, f)``) and
``p = Lap^{-1} psi``, so the per-step energy balances hold as identities up to
the linear-solver tolerance.  The residual of each balance is reported
relative to ``max(1, |energy change|)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .elliptic import SpectralPlan
from .stepper import ModelParams, Scheme, SchemeConfig, StepperState


def _p(plan: SpectralPlan, psi):
    return plan.inv_laplacian(plan.grid.project_zero_mean(psi), check=False)


def energy_original(params: ModelParams, phi, psi, plan: SpectralPlan) -> float:
    """``eps^2/2 |grad phi|^2 + int F(phi) + alpha/2 |grad Lap^{-1} psi|^2``."""
    g = plan.grid
    e = 0.5 * params.eps**2 * g.dirichlet_energy(phi) + g.integral(params.potential.F(phi))
    if params.alpha:
        e += 0.5 * params.alpha * g.dirichlet_energy(_p(plan, psi))
    return e


def energy_terms_cn(params: ModelParams, phi, U, psi, plan: SpectralPlan) -> tuple[float, float, float]:
    g = plan.grid
    grad = 0.5 * params.eps**2 * g.dirichlet_energy(phi)
    bulk = g.inner(U, U) - params.potential.B * g.volume
    inertia = 0.5 * params.alpha * g.dirichlet_energy(_p(plan, psi)) if params.alpha else 0.0
    return grad, bulk, inertia


def energy_transformed(params: ModelParams, phi, U, psi, plan: SpectralPlan) -> float:
    """Quadratic IEQ energy of one time level, shifted by ``-B |Omega|``."""
    return float(sum(energy_terms_cn(params, phi, U, psi, plan)))


def energy_discrete_cn(params: ModelParams, state: StepperState, plan: SpectralPlan) -> float:
    return energy_transformed(params, state.phi, state.U, state.psi, plan)


def _avg_sq(sq, new, old):
    return 0.5 * (sq(new) + sq(2.0 * new - old))


def energy_discrete_bdf(params: ModelParams, state: StepperState, plan: SpectralPlan) -> float:
    g = plan.grid
    e = 0.5 * params.eps**2 * _avg_sq(g.dirichlet_energy, state.phi, state.phi_prev)
    e += _avg_sq(lambda u: g.inner(u, u), state.U, state.U_prev)
    if params.alpha:
        e += 0.5 * params.alpha * _avg_sq(g.dirichlet_energy, _p(plan, state.psi),
                                          _p(plan, state.psi_prev))
    return e - params.potential.B * g.volume


class Balance(NamedTuple):
    lhs: float
    rhs: float
    residual: float


def _balance(lhs, rhs):
    return Balance(lhs, rhs, abs(lhs - rhs) / max(1.0, abs(lhs)))


def dissipation_identity_cn(params: ModelParams, prev: StepperState, new: StepperState,
                            dt: float, plan: SpectralPlan) -> Balance:
    """Energy change of one CN2 step against its exact dissipation."""
    g = plan.grid
    lhs = energy_discrete_cn(params, new, plan) - energy_discrete_cn(params, prev, plan)
    psum = _p(plan, new.psi + prev.psi)
    rhs = -0.25 * dt * g.dirichlet_energy(psum)
    if params.beta:
        d = new.phi - prev.phi
        rhs -= params.beta / dt * g.inner(d, d)
    return _balance(lhs, rhs)


def dissipation_identity_bdf(params: ModelParams, prev: StepperState, new: StepperState,
                             dt: float, plan: SpectralPlan) -> Balance:
    """Energy change of one BDF2 step, with the second-difference terms that
    the stability estimate drops kept on the left-hand side.

    Uses levels ``n-1, n`` from ``prev`` and ``n, n+1`` from ``new``.
    """
    g = plan.grid
    sq = lambda u: g.inner(u, u)  # noqa: E731
    lhs = energy_discrete_bdf(params, new, plan) - energy_discrete_bdf(params, prev, plan)
    lhs += 0.25 * params.eps**2 * g.dirichlet_energy(new.phi - 2 * prev.phi + prev.phi_prev)
    lhs += 0.5 * sq(new.U - 2 * prev.U + prev.U_prev)
    if params.alpha:
        dd = _p(plan, new.psi - 2 * prev.psi + prev.psi_prev)
        lhs += 0.25 * params.alpha * g.dirichlet_energy(dd)
    rhs = -dt * g.dirichlet_energy(_p(plan, new.psi))
    if params.beta:
        d = 3 * new.phi - 4 * prev.phi + prev.phi_prev
        rhs -= params.beta / (4 * dt) * sq(d)
    return _balance(lhs, rhs)


def scalar_bdf_identity(a, b, c):
    """Both sides of ``(3a - 4b + c) 2a = a^2 - b^2 + (2a-b)^2 - (2b-c)^2 + (a-2b+c)^2``."""
    left = (3 * a - 4 * b + c) * 2 * a
    right = a**2 - b**2 + (2 * a - b) ** 2 - (2 * b - c) ** 2 + (a - 2 * b + c) ** 2
    return left, right


def u_deviation(params: ModelParams, state: StepperState) -> float:
    """``max |U - r(phi)|``: how far U has drifted from its defining relation."""
    return float(np.max(np.abs(state.U - params.potential.r(state.phi))))


@dataclass
class EnergyRecord:
    step: int
    t: float
    E_original: float
    E_transformed: float
    E_discrete: float
    dissipation_lhs: float
    dissipation_rhs: float
    identity_residual: float
    mass_drift: float
    psi_mean: float
    U_deviation: float
    cg_iters: int

    def as_dict(self):
        return asdict(self)


def initial_record(params: ModelParams, state: StepperState, plan: SpectralPlan) -> EnergyRecord:
    e = energy_discrete_cn(params, state, plan)
    return EnergyRecord(
        step=state.step, t=state.t,
        E_original=energy_original(params, state.phi, state.psi, plan),
        E_transformed=e, E_discrete=e,
        dissipation_lhs=0.0, dissipation_rhs=0.0, identity_residual=0.0,
        mass_drift=plan.grid.integral(state.phi) - state.mass0,
        psi_mean=plan.grid.mean(state.psi),
        U_deviation=u_deviation(params, state), cg_iters=0)


def make_record(params: ModelParams, cfg: SchemeConfig, prev: StepperState,
                new: StepperState, plan: SpectralPlan) -> EnergyRecord:
    """Diagnostics of the step ``prev -> new``.

    ``E_discrete`` is the energy the run's scheme dissipates.  The balance is
    the one of the scheme that actually produced ``new`` (a BDF2 run's first
    step is CN2).
    """
    g = plan.grid
    used = new.solve.scheme if new.solve is not None else cfg.scheme
    if used is Scheme.BDF2:
        bal = dissipation_identity_bdf(params, prev, new, cfg.dt, plan)
    else:
        bal = dissipation_identity_cn(params, prev, new, cfg.dt, plan)
    e_tr = energy_discrete_cn(params, new, plan)
    e_disc = energy_discrete_bdf(params, new, plan) if cfg.scheme is Scheme.BDF2 else e_tr
    return EnergyRecord(
        step=new.step, t=new.t,
        E_original=energy_original(params, new.phi, new.psi, plan),
        E_transformed=e_tr, E_discrete=e_disc,
        dissipation_lhs=bal.lhs, dissipation_rhs=bal.rhs,
        identity_residual=bal.residual,
        mass_drift=g.integral(new.phi) - new.mass0,
        psi_mean=g.mean(new.psi),
        U_deviation=u_deviation(params, new),
        cg_iters=new.solve.iterations if new.solve else 0)
