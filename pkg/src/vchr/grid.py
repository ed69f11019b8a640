"""Uniform tensor grids, quadrature and the second-order discrete Laplacian.

Fields are plain ``numpy`` arrays of shape ``grid.shape`` (row-major, last
axis fastest).  Two boundary treatments are supported:

``periodic``
    ``n`` equispaced points per axis at ``x_j = j h`` with ``h = L / n``; the
    stencil wraps around and every point carries the weight ``h``.
``noflux``
    ``n`` vertex-centred points per axis at ``x_j = j h`` with
    ``h = L / (n - 1)``; the stencil uses mirror ghosts ``f[-1] = f[1]`` and
    the quadrature is the trapezoid rule (weight ``h / 2`` on the faces).

With these choices ``W @ Lap`` is a symmetric matrix (``W`` the diagonal
quadrature weights), so ``inner(laplacian(f), g) == inner(f, laplacian(g))``
up to round-off.  The squared gradient norm used by every energy is defined
through that identity, see :func:`dirichlet_energy`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np


class BC(str, enum.Enum):
    PERIODIC = "periodic"
    NOFLUX = "noflux"


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``[0, L1] x ... x [0, Ld]``.

    Parameters
    ----------
    n : tuple of int
        Points per axis (``len(n)`` is the dimension, 1 to 3).
    length : tuple of float
        Domain extent per axis.
    bc : BC
        Boundary treatment shared by all axes.
    """

    n: tuple[int, ...]
    length: tuple[float, ...]
    bc: BC = BC.PERIODIC

    def __post_init__(self):
        n = tuple(int(k) for k in np.atleast_1d(self.n))
        length = tuple(float(v) for v in np.atleast_1d(self.length))
        if len(length) == 1 and len(n) > 1:
            length = length * len(n)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", length)
        object.__setattr__(self, "bc", BC(self.bc))
        if not 1 <= len(n) <= 3:
            raise ValueError(f"grid dimension must be 1, 2 or 3, got {len(n)}")
        if len(length) != len(n):
            raise ValueError("n and length must have the same number of axes")
        if min(n) < 4:
            raise ValueError(f"need at least 4 points per axis, got {n}")
        if min(length) <= 0:
            raise ValueError(f"domain lengths must be positive, got {length}")

    @classmethod
    def square(cls, n: int, dim: int = 2, length: float = 1.0,
               bc: BC | str = BC.PERIODIC) -> GridSpec:
        return cls((n,) * dim, (length,) * dim, BC(bc))

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def periodic(self) -> bool:
        return self.bc is BC.PERIODIC

    @cached_property
    def h(self) -> tuple[float, ...]:
        if self.periodic:
            return tuple(L / k for L, k in zip(self.length, self.n))
        return tuple(L / (k - 1) for L, k in zip(self.length, self.n))

    @property
    def volume(self) -> float:
        return float(np.prod(self.length))

    def coords(self) -> list[np.ndarray]:
        """1-D node coordinates per axis."""
        return [np.arange(k) * hk for k, hk in zip(self.n, self.h)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.coords(), indexing="ij")

    @cached_property
    def weights(self) -> float | np.ndarray:
        """Quadrature weights: a scalar for periodic grids, an array otherwise."""
        cell = float(np.prod(self.h))
        if self.periodic:
            return cell
        axes = []
        for k in self.n:
            w = np.ones(k)
            w[0] = w[-1] = 0.5
            axes.append(w)
        w = reduce(np.multiply.outer, axes) * cell
        w.setflags(write=False)
        return w

    def check(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValueError(f"field shape {f.shape} does not match grid {self.shape}")
        return f

    # quadrature

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        f, g = self.check(f), self.check(g)
        if self.periodic:
            return self.weights * float(np.vdot(f, g))
        return float(np.sum(self.weights * f * g))

    def norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(self.inner(f, f)))

    def integral(self, f: np.ndarray) -> float:
        f = self.check(f)
        if self.periodic:
            return self.weights * float(f.sum())
        return float(np.sum(self.weights * f))

    def mean(self, f: np.ndarray) -> float:
        return self.integral(f) / self.volume

    def project_zero_mean(self, f: np.ndarray) -> np.ndarray:
        return self.check(f) - self.mean(f)

    # stencils

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """Standard ``2 d + 1`` point Laplacian with the grid's boundary rule."""
        f = self.check(f)
        out = np.zeros_like(f)
        for ax, hk in enumerate(self.h):
            if self.periodic:
                d2 = np.roll(f, 1, axis=ax) + np.roll(f, -1, axis=ax) - 2.0 * f
            else:
                pad = [(0, 0)] * self.dim
                pad[ax] = (1, 1)
                fp = np.pad(f, pad, mode="reflect")
                lo = [slice(None)] * self.dim
                hi = [slice(None)] * self.dim
                lo[ax] = slice(0, -2)
                hi[ax] = slice(2, None)
                d2 = fp[tuple(lo)] + fp[tuple(hi)] - 2.0 * f
            out += d2 / hk**2
        return out

    def dirichlet_energy(self, f: np.ndarray) -> float:
        """Discrete ``||grad f||^2``, defined as ``inner(-laplacian(f), f)``."""
        return -self.inner(self.laplacian(f), f)

    def grad_inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """Discrete ``(grad f, grad g)``; symmetric in its arguments."""
        return -self.inner(self.laplacian(f), g)


def inner(grid: GridSpec, f, g) -> float:
    return grid.inner(f, g)


def norm_l2(grid: GridSpec, f) -> float:
    return grid.norm(f)


def mean(grid: GridSpec, f) -> float:
    return grid.mean(f)


def project_zero_mean(grid: GridSpec, f) -> np.ndarray:
    return grid.project_zero_mean(f)


def laplacian(grid: GridSpec, f) -> np.ndarray:
    return grid.laplacian(f)


def dirichlet_energy(grid: GridSpec, f) -> float:
    return grid.dirichlet_energy(f)
