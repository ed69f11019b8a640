"""Bulk free-energy densities and the IEQ auxiliary quantities.

Two potentials are available:

* ``double_well``: ``F(x) = x^2 (x - 1)^2`` with minima at 0 and 1.
* ``flory_huggins``: the logarithmic mixing energy
  ``x ln x + (1 - x) ln(1 - x) + theta x (1 - x)``, regularised by replacing
  each logarithmic term with its second-order Taylor model about ``sigma``
  (resp. ``1 - sigma``) outside ``[sigma, 1 - sigma]``.  The result is C^2 and
  defined on the whole real line.

The auxiliary variable is ``U = r(phi)`` with ``r^2 = F + B``.  For the double
well with ``B = 0`` the square root is taken along the smooth signed branch
``r(x) = x (1 - x)``, which avoids the 0/0 in ``f / sqrt(F)`` at the wells.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class PotentialKind(str, enum.Enum):
    DOUBLE_WELL = "double_well"
    FLORY_HUGGINS = "flory_huggins"


@dataclass(frozen=True)
class PotentialSpec:
    kind: PotentialKind = PotentialKind.DOUBLE_WELL
    B: float = 0.0
    theta: float = 2.5
    sigma: float = 0.001

    def __post_init__(self):
        object.__setattr__(self, "kind", PotentialKind(self.kind))
        if self.B < 0:
            raise ValueError(f"B must be non-negative, got {self.B}")
        if self.kind is PotentialKind.FLORY_HUGGINS:
            if self.B < 1:
                raise ValueError("Flory-Huggins needs B >= 1 so that F + B > 0")
            if not 0 < self.sigma < 0.5:
                raise ValueError(f"sigma must lie in (0, 0.5), got {self.sigma}")
            if self.theta <= 0:
                raise ValueError(f"theta must be positive, got {self.theta}")

    @classmethod
    def double_well(cls, B: float = 0.0) -> PotentialSpec:
        return cls(PotentialKind.DOUBLE_WELL, B=B)

    @classmethod
    def flory_huggins(cls, theta: float = 2.5, sigma: float = 0.001,
                      B: float = 1.0) -> PotentialSpec:
        return cls(PotentialKind.FLORY_HUGGINS, B=B, theta=theta, sigma=sigma)

    @property
    def signed_branch(self) -> bool:
        """True when U is the polynomial branch ``x (1 - x)`` instead of a root."""
        return self.kind is PotentialKind.DOUBLE_WELL and self.B == 0

    def F(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is PotentialKind.DOUBLE_WELL:
            return x**2 * (x - 1.0) ** 2
        return _fh_F(x, self.theta, self.sigma)

    def f(self, x):
        """dF/dx."""
        x = np.asarray(x, dtype=float)
        if self.kind is PotentialKind.DOUBLE_WELL:
            return 2.0 * x * (x - 1.0) * (2.0 * x - 1.0)
        return _fh_f(x, self.theta, self.sigma)

    def f_prime(self, x):
        """d^2F/dx^2."""
        x = np.asarray(x, dtype=float)
        if self.kind is PotentialKind.DOUBLE_WELL:
            return 12.0 * x**2 - 12.0 * x + 2.0
        return _fh_f2(x, self.theta, self.sigma)

    def r(self, x):
        """The branch of ``sqrt(F + B)`` used for U."""
        x = np.asarray(x, dtype=float)
        if self.signed_branch:
            return x * (1.0 - x)
        return np.sqrt(self.F(x) + self.B)

    def H(self, x):
        """``H = f / sqrt(F + B)``, i.e. ``2 r'``, so that ``r H = f``."""
        x = np.asarray(x, dtype=float)
        if self.signed_branch:
            return 2.0 * (1.0 - 2.0 * x)
        return self.f(x) / np.sqrt(self.F(x) + self.B)

    def U_init(self, phi0):
        return self.r(phi0)


def _xlogx(x):
    # only ever called on x > 0
    return x * np.log(x)


def _fh_F(x, theta, sigma):
    lo, hi = x < sigma, x > 1.0 - sigma
    mid = ~(lo | hi)
    out = np.empty_like(x)
    ls = np.log(sigma)
    xm = x[mid]
    out[mid] = _xlogx(xm) + _xlogx(1.0 - xm)
    xl = x[lo]
    out[lo] = _xlogx(1.0 - xl) + xl**2 / (2 * sigma) + xl * ls - sigma / 2
    xh = x[hi]
    out[hi] = _xlogx(xh) + (1.0 - xh) ** 2 / (2 * sigma) + (1.0 - xh) * ls - sigma / 2
    return out + theta * x * (1.0 - x)


def _fh_f(x, theta, sigma):
    lo, hi = x < sigma, x > 1.0 - sigma
    mid = ~(lo | hi)
    out = np.empty_like(x)
    ls = np.log(sigma)
    xm = x[mid]
    out[mid] = np.log(xm) - np.log(1.0 - xm)
    xl = x[lo]
    out[lo] = -np.log(1.0 - xl) - 1.0 + xl / sigma + ls
    xh = x[hi]
    out[hi] = np.log(xh) + 1.0 - (1.0 - xh) / sigma - ls
    return out + theta * (1.0 - 2.0 * x)


def _fh_f2(x, theta, sigma):
    lo, hi = x < sigma, x > 1.0 - sigma
    mid = ~(lo | hi)
    out = np.empty_like(x)
    xm = x[mid]
    out[mid] = 1.0 / xm + 1.0 / (1.0 - xm)
    out[lo] = 1.0 / (1.0 - x[lo]) + 1.0 / sigma
    out[hi] = 1.0 / x[hi] + 1.0 / sigma
    return out - 2.0 * theta


def F_val(p: PotentialSpec, x):
    return p.F(x)


def f_val(p: PotentialSpec, x):
    return p.f(x)


def H_val(p: PotentialSpec, x):
    return p.H(x)


def U_init(p: PotentialSpec, phi0):
    return p.U_init(phi0)
