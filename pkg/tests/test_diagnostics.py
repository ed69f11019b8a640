import numpy as np
import pytest

from vchr.diagnostics import (dissipation_identity_bdf, dissipation_identity_cn,
                              energy_discrete_bdf, energy_discrete_cn, energy_original,
                              energy_terms_cn, energy_transformed, initial_record, make_record,
                              scalar_bdf_identity, u_deviation)
from vchr.elliptic import SpectralPlan
from vchr.experiments import fitted_order
from vchr.grid import BC, GridSpec
from vchr.ic import cos_product, random_perturbation
from vchr.potential import PotentialSpec
from vchr.stepper import ModelParams, Scheme, SchemeConfig, StepperState, advance, init_state, run

BCS = [BC.PERIODIC, BC.NOFLUX]
G = GridSpec.square(16)
PLAN = SpectralPlan(G)


def const(v):
    return np.full(G.shape, float(v))


def test_original_energy_examples():
    p = ModelParams(alpha=0.7)
    assert energy_original(p, const(0.5), const(0), PLAN) == pytest.approx(0.0625, rel=1e-14)
    assert energy_original(p, const(0), const(0), PLAN) == 0.0
    assert energy_original(p, const(1), const(0), PLAN) == 0.0
    psi = G.project_zero_mean(np.random.default_rng(0).standard_normal(G.shape))
    phi = const(0.3)
    no_inertia = ModelParams(alpha=0.0)
    assert energy_original(no_inertia, phi, psi, PLAN) == energy_original(no_inertia, phi, 0 * psi, PLAN)
    assert energy_original(p, phi, psi, PLAN) > energy_original(p, phi, 0 * psi, PLAN)


@pytest.mark.parametrize("pot", [PotentialSpec.double_well(), PotentialSpec.double_well(0.4),
                                 PotentialSpec.flory_huggins()], ids=["dw", "dw-B", "fh"])
def test_transformed_energy_equals_original_on_the_constraint(pot):
    p = ModelParams(eps=0.05, alpha=0.3, potential=pot)
    phi = random_perturbation(G, 0.5, amplitude=0.3, seed=1)
    U = pot.r(phi)
    psi = G.project_zero_mean(np.random.default_rng(2).standard_normal(G.shape))
    a = energy_transformed(p, phi, U, psi, PLAN)
    b = energy_original(p, phi, psi, PLAN)
    assert a == pytest.approx(b, rel=1e-13, abs=1e-15)


def test_transformed_energy_examples_and_additivity():
    p = ModelParams(eps=0.1, alpha=0.5)
    assert energy_transformed(p, const(0.5), const(0.25), const(0), PLAN) == pytest.approx(0.0625)
    phi = random_perturbation(G, 0.5, amplitude=0.2, seed=3)
    psi = G.project_zero_mean(phi**2)
    terms = energy_terms_cn(p, phi, phi, psi, PLAN)
    # each term by hand from its definition
    grad = 0.5 * 0.01 * G.inner(-G.laplacian(phi), phi)
    bulk = G.inner(phi, phi)
    pp = PLAN.inv_laplacian(psi)
    inertia = 0.25 * G.inner(-G.laplacian(pp), pp)
    np.testing.assert_allclose(terms, (grad, bulk, inertia), rtol=1e-12)
    assert energy_transformed(p, phi, phi, psi, PLAN) == pytest.approx(sum(terms), rel=1e-13)


def _state(phi, phi_prev, psi, psi_prev, U, U_prev):
    return StepperState(G, phi, phi_prev, psi, psi_prev, U, U_prev, 1, 0.0, G.integral(phi))


def test_bdf_energy_of_a_steady_history():
    p = ModelParams(eps=0.05, alpha=0.5)
    phi = random_perturbation(G, 0.5, amplitude=0.2, seed=4)
    U = p.potential.r(phi)
    s = _state(phi, phi, const(0), const(0), U, U)
    assert energy_discrete_bdf(p, s, PLAN) == pytest.approx(energy_discrete_cn(p, s, PLAN), rel=1e-14)


def test_bdf_energy_of_constant_fields():
    p = ModelParams(eps=0.05, potential=PotentialSpec.double_well(0.2))
    s = _state(const(0.4), const(0.4), const(0), const(0), const(2.0), const(1.0))
    # U levels 2 and 1: 0.5 (4 + 9) on the unit square, minus B
    assert energy_discrete_bdf(p, s, PLAN) == pytest.approx(6.5 - 0.2, rel=1e-14)


def test_bdf_energy_double_entry():
    rng = np.random.default_rng(5)
    p = ModelParams(eps=0.07, alpha=0.9, potential=PotentialSpec.double_well(0.1))
    f = [rng.standard_normal(G.shape) for _ in range(6)]
    f[2], f[3] = G.project_zero_mean(f[2]), G.project_zero_mean(f[3])
    s = _state(*f)
    # straight from the formula, with explicit matrices-free loops
    w = G.h[0] * G.h[1]

    def grad2(u):
        dx = np.roll(u, -1, 0) - u
        dy = np.roll(u, -1, 1) - u
        return w * (np.sum(dx**2) + np.sum(dy**2)) / G.h[0] ** 2

    def inv(u):
        return PLAN.inv_laplacian(u)

    phi, phim, psi, psim, U, Um = f
    ref = (0.5 * p.eps**2 * 0.5 * (grad2(phi) + grad2(2 * phi - phim))
           + 0.5 * (w * np.sum(U**2) + w * np.sum((2 * U - Um) ** 2))
           + 0.5 * p.alpha * 0.5 * (grad2(inv(psi)) + grad2(2 * inv(psi) - inv(psim)))
           - 0.1)
    assert energy_discrete_bdf(p, s, PLAN) == pytest.approx(ref, rel=1e-13)


def test_scalar_identity():
    assert scalar_bdf_identity(1.0, 2.0, 3.0) == (-4.0, -4.0)
    assert scalar_bdf_identity(0.3, 0.3, 0.3) == pytest.approx((0.0, 0.0), abs=1e-15)
    abc = np.random.default_rng(6).uniform(-10, 10, (3, 1000))
    left, right = scalar_bdf_identity(*abc)
    scale = np.max(np.abs(abc), axis=0) ** 2
    assert np.all(np.abs(left - right) <= 1e-12 * scale * 10)


@pytest.mark.parametrize("scheme", list(Scheme))
def test_steady_state_identity_is_trivial(scheme):
    p = ModelParams(eps=0.05, alpha=0.5, beta=0.5)
    cfg = SchemeConfig(scheme, dt=0.1, cg_tol=1e-12)
    s0 = init_state(p, G, const(0.5))
    s1 = advance(s0, p, cfg, PLAN)
    s2 = advance(s1, p, cfg, PLAN)
    for prev, new in ((s0, s1), (s1, s2)):
        rec = make_record(p, cfg, prev, new, PLAN)
        assert abs(rec.dissipation_lhs) <= 1e-13 and abs(rec.dissipation_rhs) <= 1e-13
        assert rec.identity_residual <= 1e-13


@pytest.mark.parametrize("bc", BCS)
@pytest.mark.parametrize("scheme", list(Scheme))
@pytest.mark.parametrize("ab", [(0.5, 0.5), (0.5, 0.0), (0.0, 0.8), (0.0, 0.0)])
def test_identities_hold_on_random_runs(bc, scheme, ab):
    g = GridSpec.square(24, bc=bc)
    plan = SpectralPlan(g)
    p = ModelParams(eps=0.05, alpha=ab[0], beta=ab[1])
    s = init_state(p, g, random_perturbation(g, 0.5, amplitude=0.2, seed=7))
    cfg = SchemeConfig(scheme, dt=0.5, cg_tol=1e-12)
    recs = []
    run(s, p, cfg, 10, lambda step, st_, rec: recs.append(rec), plan)
    for rec in recs:
        assert rec.identity_residual <= 1e-8
        assert rec.dissipation_rhs <= 0
    if ab[1] == 0:
        # only the rate term dissipates
        prev = init_state(p, g, random_perturbation(g, 0.5, amplitude=0.2, seed=7))
        new = advance(prev, p, cfg, plan)
        bal = dissipation_identity_cn(p, prev, new, cfg.dt, plan)
        pp = plan.inv_laplacian(g.project_zero_mean(new.psi + prev.psi), check=False)
        assert bal.rhs == pytest.approx(-0.25 * cfg.dt * g.dirichlet_energy(pp), rel=1e-14)


def test_bdf_balance_is_the_bdf_one():
    p = ModelParams(eps=0.05, alpha=0.5, beta=0.5)
    s0 = init_state(p, G, random_perturbation(G, 0.5, amplitude=0.2, seed=8))
    cfg = SchemeConfig(Scheme.BDF2, dt=0.2, cg_tol=1e-12)
    s1 = advance(s0, p, cfg, PLAN)
    s2 = advance(s1, p, cfg, PLAN)
    assert dissipation_identity_bdf(p, s1, s2, cfg.dt, PLAN).residual <= 1e-10
    # the CN balance does not describe a BDF step
    assert dissipation_identity_cn(p, s1, s2, cfg.dt, PLAN).residual > 1e-6


def test_u_deviation_examples():
    p = ModelParams(eps=0.05)
    s = init_state(p, G, random_perturbation(G, 0.5, amplitude=0.3, seed=9))
    assert u_deviation(p, s) == 0.0
    rec = initial_record(p, s, PLAN)
    assert rec.U_deviation == 0.0 and rec.E_original == pytest.approx(rec.E_transformed, rel=1e-13)
    steady = init_state(p, G, const(0.5))
    cfg = SchemeConfig(dt=0.1, cg_tol=1e-12)
    out = run(steady, p, cfg, 5, records=False)
    assert u_deviation(p, out) <= 1e-12


def test_u_deviation_is_second_order_in_dt():
    g = GridSpec.square(32)
    plan = SpectralPlan(g)
    p = ModelParams(eps=0.05, alpha=0.5, beta=0.5)
    phi0 = 0.5 + 0.4 * (cos_product(g) - 0.5)
    devs = []
    for k in range(5):
        dt = 0.04 / 2**k
        s = run(init_state(p, g, phi0), p, SchemeConfig(dt=dt, cg_tol=1e-13), 5 * 2**k,
                plan=plan, records=False)
        devs.append(u_deviation(p, s))
    assert abs(fitted_order(devs) - 2.0) <= 0.3, devs
