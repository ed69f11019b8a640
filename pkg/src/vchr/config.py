"""Run configuration: JSON files mirroring :class:`RunConfig` field for field.

Missing keys take their defaults, unknown keys are rejected.  ``to_dict``
produces the canonical (fully populated) form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .grid import GridSpec
from .ic import InitialCondition
from .potential import PotentialSpec
from .stepper import ModelParams, SchemeConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    every: int = 1
    snapshot_every: int = 0  # 0: initial and final snapshots only

    def __post_init__(self):
        if self.every < 1:
            raise ValueError("output cadence 'every' must be >= 1")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec = GridSpec.square(128)
    model: ModelParams = ModelParams()
    scheme: SchemeConfig = SchemeConfig()
    ic: InitialCondition = InitialCondition()
    t_end: float | None = None
    n_steps: int | None = 100
    output: OutputSpec = field(default_factory=OutputSpec)
    rng_seed: int = 0

    def __post_init__(self):
        if (self.t_end is None) == (self.n_steps is None):
            raise ValueError("exactly one of t_end and n_steps must be given")
        if self.n_steps is not None and self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.t_end is not None and self.t_end <= 0:
            raise ValueError("t_end must be positive")

    @property
    def steps(self) -> int:
        if self.n_steps is not None:
            return self.n_steps
        n = round(self.t_end / self.scheme.dt)
        if n < 1 or abs(n * self.scheme.dt - self.t_end) > 1e-9 * self.t_end:
            raise ConfigError(f"t_end={self.t_end} is not a multiple of dt={self.scheme.dt}")
        return n

    def replace(self, changes: dict) -> RunConfig:
        """Copy with dotted-path overrides, e.g. ``{"model.alpha": 1.0}``.

        Setting one of ``t_end``/``n_steps`` clears the other.
        """
        d = to_dict(self)
        for key, value in changes.items():
            *path, last = key.split(".")
            sub = d
            for part in path:
                sub = sub[part]
            sub[last] = value
        if "n_steps" in changes and "t_end" not in changes:
            d["t_end"] = None
        if "t_end" in changes and "n_steps" not in changes:
            d["n_steps"] = None
        return from_dict(d)


def to_dict(cfg: RunConfig) -> dict:
    g, m, s, ic, o = cfg.grid, cfg.model, cfg.scheme, cfg.ic, cfg.output
    p = m.potential
    return {
        "grid": {"n": list(g.n), "length": list(g.length), "bc": g.bc.value},
        "model": {"eps": m.eps, "alpha": m.alpha, "beta": m.beta,
                  "potential": {"kind": p.kind.value, "B": p.B, "theta": p.theta,
                                "sigma": p.sigma}},
        "scheme": {"scheme": s.scheme.value, "dt": s.dt, "cg_tol": s.cg_tol,
                   "cg_maxit": s.cg_maxit, "self_check": s.self_check},
        "ic": {"kind": ic.kind, "phibar": ic.phibar, "amplitude": ic.amplitude,
               "radius": ic.radius, "centers": [list(c) for c in ic.centers],
               "path": ic.path},
        "t_end": cfg.t_end,
        "n_steps": cfg.n_steps,
        "output": {"dir": o.dir, "every": o.every, "snapshot_every": o.snapshot_every},
        "rng_seed": cfg.rng_seed,
    }


_SECTIONS = {
    "grid": {"n", "length", "bc"},
    "model": {"eps", "alpha", "beta", "potential"},
    "potential": {"kind", "B", "theta", "sigma"},
    "scheme": {"scheme", "dt", "cg_tol", "cg_maxit", "self_check"},
    "ic": {"kind", "phibar", "amplitude", "radius", "centers", "path"},
    "output": {"dir", "every", "snapshot_every"},
}
_TOP = {"grid", "model", "scheme", "ic", "t_end", "n_steps", "output", "rng_seed"}


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def from_dict(d: dict) -> RunConfig:
    _check_keys(d, _TOP, "config")
    for name in ("grid", "model", "scheme", "ic", "output"):
        _check_keys(d.get(name, {}), _SECTIONS[name], name)
    model = dict(d.get("model", {}))
    pot = model.pop("potential", {})
    _check_keys(pot, _SECTIONS["potential"], "model.potential")
    try:
        grid = d.get("grid", {})
        gridspec = GridSpec(tuple(grid.get("n", (128, 128))),
                            tuple(grid.get("length", (1.0,) * len(grid.get("n", (128, 128))))),
                            grid.get("bc", "periodic"))
        potential = PotentialSpec(**pot) if pot else PotentialSpec()
        ic = dict(d.get("ic", {}))
        if "centers" in ic:
            ic["centers"] = tuple(tuple(c) for c in ic["centers"])
        t_end = d.get("t_end")
        n_steps = d.get("n_steps") if t_end is not None else d.get("n_steps", 100)
        return RunConfig(
            grid=gridspec,
            model=ModelParams(potential=potential, **model),
            scheme=SchemeConfig(**d.get("scheme", {})),
            ic=InitialCondition(**ic),
            t_end=t_end,
            n_steps=n_steps,
            output=OutputSpec(**d.get("output", {})),
            rng_seed=int(d.get("rng_seed", 0)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def dumps(cfg: RunConfig) -> str:
    return json.dumps(to_dict(cfg), indent=2) + "\n"


def loads(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return from_dict(data)


def load(path) -> RunConfig:
    return loads(Path(path).read_text())


def dump(cfg: RunConfig, path) -> Path:
    path = Path(path)
    path.write_text(dumps(cfg))
    return path
