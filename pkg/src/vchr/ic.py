"""Initial conditions."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import GridSpec

KINDS = ("two_bubbles", "random", "cos_product", "file", "constant")


@dataclass(frozen=True)
class InitialCondition:
    """``kind`` is one of :data:`KINDS`.

    ``phibar``/``amplitude`` are used by ``random`` (and ``phibar`` by
    ``constant``), ``radius`` and ``centers`` by ``two_bubbles`` and ``path``
    by ``file``.
    """

    kind: str = "two_bubbles"
    phibar: float = 0.5
    amplitude: float = 0.001
    radius: float = 0.2
    centers: tuple[tuple[float, ...], ...] = ((0.71, 0.5), (0.29, 0.5))
    path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown initial condition {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "centers", tuple(tuple(float(v) for v in c) for c in self.centers))
        if self.kind == "file" and not self.path:
            raise ValueError("initial condition 'file' needs a path")


def two_bubbles(grid: GridSpec, eps: float, radius: float = 0.2,
                centers=((0.71, 0.5), (0.29, 0.5))) -> np.ndarray:
    """``0.5 (1 + max_i tanh((radius - R_i) / eps))``.

    Centres give the leading coordinates; missing trailing ones default to the
    middle of the domain (so the 2-D bubbles become spheres in 3-D).
    """
    X = grid.mesh()
    best = None
    for c in centers:
        c = list(c) + [0.5 * L for L in grid.length[len(c):]]
        R = np.sqrt(sum((x - cx) ** 2 for x, cx in zip(X, c)))
        v = np.tanh((radius - R) / eps)
        best = v if best is None else np.maximum(best, v)
    return 0.5 * (1.0 + best)


def cos_product(grid: GridSpec) -> np.ndarray:
    """``0.5 (1 + cos(2 pi x / Lx) cos(2 pi y / Ly))``."""
    if grid.dim < 2:
        raise ValueError("cos_product needs at least two dimensions")
    X = grid.mesh()
    return 0.5 * (1.0 + np.cos(2 * np.pi * X[0] / grid.length[0])
                  * np.cos(2 * np.pi * X[1] / grid.length[1]))


def random_perturbation(grid: GridSpec, phibar: float, amplitude: float = 0.001,
                        seed: int = 0) -> np.ndarray:
    """``phibar + amplitude * u`` with ``u`` uniform on [0, 1], re-centred so
    that the mean is exactly ``phibar``."""
    u = np.random.default_rng(seed).random(grid.shape)
    return phibar + amplitude * grid.project_zero_mean(u)


def make_ic(ic: InitialCondition, grid: GridSpec, eps: float, seed: int = 0) -> np.ndarray:
    if ic.kind == "two_bubbles":
        return two_bubbles(grid, eps, ic.radius, ic.centers)
    if ic.kind == "cos_product":
        return cos_product(grid)
    if ic.kind == "random":
        return random_perturbation(grid, ic.phibar, ic.amplitude, seed)
    if ic.kind == "constant":
        return np.full(grid.shape, float(ic.phibar))
    from .io import snapshot_read

    loaded_grid, phi = snapshot_read(Path(ic.path))
    if loaded_grid.shape != grid.shape:
        raise OSError(f"snapshot {ic.path} has shape {loaded_grid.shape}, grid is {grid.shape}")
    return phi
