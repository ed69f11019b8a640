"""Spectral inverse Laplacian and the per-step SPD solve.

The discrete Laplacian of :mod:`vchr.grid` is diagonalised exactly by the
real FFT (periodic grids) or by the type-I cosine transform (no-flux grids,
vertex-centred with mirror ghosts).  Both transforms are taken over all axes
with :mod:`scipy.fft`.

The linear problem solved at every time step is, on the zero-mean subspace,

    A x = proj( -a Lap^{-1} x - c eps^2 Lap x + (s(x) + v) x ) = b

with ``a > 0``, ``c in {1/2, 1}``, ``v >= 0`` and a non-negative, spatially
varying ``s``.  It is handled by preconditioned CG; the preconditioner is the
same operator with ``s`` replaced by its mean, which is diagonal in the
spectral basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .grid import GridSpec


class CGFailure(RuntimeError):
    """CG hit its iteration cap before reaching the requested tolerance."""

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SpectralPlan:
    """Forward/inverse transforms and the Laplacian eigenvalues for a grid."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        lam = []
        for ax, (k, hk) in enumerate(zip(grid.n, grid.h)):
            if grid.periodic:
                m = np.arange(k // 2 + 1) if ax == grid.dim - 1 else np.arange(k)
                theta = 2 * np.pi * m / k
            else:
                theta = np.pi * np.arange(k) / (k - 1)
            lam.append(-(2.0 - 2.0 * np.cos(theta)) / hk**2)
        eig = np.zeros([len(v) for v in lam])
        for ax, v in enumerate(lam):
            shape = [1] * grid.dim
            shape[ax] = len(v)
            eig = eig + v.reshape(shape)
        eig.flat[0] = 0.0
        eig.setflags(write=False)
        self.eigenvalues = eig
        inv = np.zeros_like(eig)
        inv.flat[1:] = 1.0 / eig.flat[1:]
        inv.setflags(write=False)
        self._inv_eig = inv

    @property
    def kind(self) -> str:
        return "rfft" if self.grid.periodic else "dct1"

    def forward(self, f: np.ndarray) -> np.ndarray:
        if self.grid.periodic:
            return sfft.rfftn(f)
        return sfft.dctn(f, type=1)

    def inverse(self, fh: np.ndarray) -> np.ndarray:
        if self.grid.periodic:
            return sfft.irfftn(fh, s=self.grid.shape)
        return sfft.idctn(fh, type=1)

    def apply_symbol(self, f: np.ndarray, symbol: np.ndarray) -> np.ndarray:
        """Apply a function of the Laplacian given by its values per mode."""
        return self.inverse(symbol * self.forward(f))

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        return self.apply_symbol(f, self.eigenvalues)

    def inv_laplacian(self, f: np.ndarray, check: bool = True) -> np.ndarray:
        """Zero-mean ``v`` with ``Lap v = f`` for zero-mean ``f``."""
        f = self.grid.check(f)
        if check:
            m = self.grid.mean(f)
            scale = max(1.0, float(np.max(np.abs(f))) if f.size else 0.0)
            if abs(m) > 1e-10 * scale:
                raise ValueError(f"inv_laplacian needs a zero-mean input, mean is {m:.3e}")
        return self.apply_symbol(f, self._inv_eig)


def inv_laplacian(plan: SpectralPlan, f: np.ndarray) -> np.ndarray:
    return plan.inv_laplacian(f)


@dataclass
class SpdOperator:
    """The per-step operator ``A`` restricted to zero-mean fields.

    ``c1`` is 1/2 for the Crank-Nicolson scheme and 1 for BDF2.
    """

    plan: SpectralPlan
    alpha_hat: float
    eps: float
    c1: float
    visc_coeff: float
    hsq_field: np.ndarray
    _symbol: np.ndarray = field(init=False, repr=False)
    _precond: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.alpha_hat <= 0:
            raise ValueError("alpha_hat must be positive")
        if self.visc_coeff < 0:
            raise ValueError("visc_coeff must be non-negative")
        if np.any(self.hsq_field < 0):
            raise ValueError("hsq_field must be non-negative")
        lam = self.plan.eigenvalues
        neg = -lam
        sym = np.zeros_like(lam)
        sym.flat[1:] = self.alpha_hat / neg.flat[1:] + self.c1 * self.eps**2 * neg.flat[1:]
        self._symbol = sym
        pre = np.zeros_like(lam)
        cbar = self.plan.grid.mean(self.hsq_field)
        pre.flat[1:] = 1.0 / (sym.flat[1:] + cbar + self.visc_coeff)
        self._precond = pre

    @property
    def grid(self) -> GridSpec:
        return self.plan.grid

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.apply(x)

    def apply(self, x: np.ndarray) -> np.ndarray:
        y = self.plan.apply_symbol(x, self._symbol)
        y += (self.hsq_field + self.visc_coeff) * x
        return self.grid.project_zero_mean(y)

    def precondition(self, r: np.ndarray) -> np.ndarray:
        return self.plan.apply_symbol(r, self._precond)

    def energy_terms(self, x: np.ndarray) -> dict[str, float]:
        """The four non-negative pieces of ``(A x, x)`` for zero-mean ``x``."""
        g = self.grid
        p = self.plan.inv_laplacian(x, check=False)
        return {
            "inverse": self.alpha_hat * g.dirichlet_energy(p),
            "gradient": self.c1 * self.eps**2 * g.dirichlet_energy(x),
            "potential": g.inner(self.hsq_field * x, x),
            "viscous": self.visc_coeff * g.inner(x, x),
        }


def apply_spd(op: SpdOperator, x: np.ndarray) -> np.ndarray:
    return op.apply(x)


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float
    rhs_norm: float
    history: list[float]


def cg_solve(op: SpdOperator, b: np.ndarray, tol: float = 1e-10, maxit: int = 500,
             x0: np.ndarray | None = None) -> CGResult:
    """Preconditioned CG in the grid's weighted inner product.

    Stops once the true relative residual ``||A x - b|| / ||b||`` is below
    ``tol``; a recursive-residual convergence is confirmed against the true
    residual before returning.  ``history`` holds ``||x - x_k||_A^2`` surrogates
    ``(r_k, M r_k)`` per iteration.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    g = op.grid
    b = g.check(b)
    bnorm = g.norm(b)
    m = g.mean(b)
    if abs(m) > 1e-10 * max(1.0, float(np.max(np.abs(b)))):
        raise ValueError(f"cg_solve needs a zero-mean right-hand side, mean is {m:.3e}")
    if bnorm == 0.0:
        return CGResult(np.zeros_like(b), 0, 0.0, 0.0, [])
    b = g.project_zero_mean(b)

    x = np.zeros_like(b) if x0 is None else g.project_zero_mean(x0)
    r = b - op.apply(x)
    rnorm = g.norm(r)
    history: list[float] = []
    it = 0
    while rnorm > tol * bnorm:
        z = op.precondition(r)
        d = z.copy()
        rz = g.inner(r, z)
        while it < maxit:
            history.append(rz)
            q = op.apply(d)
            step = rz / g.inner(d, q)
            x += step * d
            r -= step * q
            it += 1
            if g.norm(r) <= tol * bnorm:
                break
            z = op.precondition(r)
            rz_new = g.inner(r, z)
            d = z + (rz_new / rz) * d
            rz = rz_new
        r = b - op.apply(x)
        rnorm = g.norm(r)
        if it >= maxit and rnorm > tol * bnorm:
            raise CGFailure(
                f"CG did not converge in {maxit} iterations "
                f"(relative residual {rnorm / bnorm:.3e})", rnorm / bnorm, it)
    return CGResult(g.project_zero_mean(x), it, rnorm / bnorm, bnorm, history)
