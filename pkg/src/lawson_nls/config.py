"""Run configuration: a nested YAML document mapped onto :class:`RunConfig`.

Example::

    grid:
      dim: 2
      bounds: [[-10, 10], [-10, 10]]
      nodes: [128, 128]
    model:
      equation: superfluid   # i phi_t = -1/2 Lap phi + beta |phi|^2 phi
      beta: 10
      c0: 1.0
    time:
      scheme: li-ei3
      tau: 2.0e-4
      t_end: 0.3
    initial:
      kind: random_phase
      seed: 7
    output:
      directory: out
      cadence: 10
      snapshot_times: [0.0, 0.1, 0.3]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .lawson import SCHEMES
from .sav_core import ModelParams

__all__ = ["ConfigError", "RunConfig", "exact_step_count", "load_config", "parse_config"]

EQUATIONS = ("standard", "superfluid")
INITIAL_KINDS = ("soliton1d", "plane_wave", "random_phase")
# relative slack when checking that t / tau is an integer
STEP_RTOL = 1e-12


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


def exact_step_count(t: float, tau: float) -> int:
    """Number of steps of size ``tau`` reaching ``t``; rejects non-integer ratios."""
    q = t / tau
    n = round(q)
    if abs(q - n) > STEP_RTOL * max(1.0, abs(q)):
        raise ValueError(f"t={t!r} is not an integer multiple of tau={tau!r}")
    return int(n)


@dataclass
class RunConfig:
    dim: int = 1
    bounds: list[list[float]] = field(default_factory=lambda: [[-40.0, 40.0]])
    nodes: list[int] = field(default_factory=lambda: [256])
    equation: str = "standard"
    beta: float = 2.0
    c0: float = 1.0
    scheme: str = "li-ei3"
    tau: float = 0.01
    t_end: float = 1.0
    initial: dict[str, Any] = field(default_factory=lambda: {"kind": "soliton1d"})
    seed: int | None = None
    output_dir: str = "out"
    cadence: int = 1
    snapshot_times: list[float] = field(default_factory=list)

    @property
    def params(self) -> ModelParams:
        if self.equation == "superfluid":
            return ModelParams(alpha=0.5, b=-self.beta, c0=self.c0)
        return ModelParams(alpha=1.0, b=self.beta, c0=self.c0)

    @property
    def n_steps(self) -> int:
        return exact_step_count(self.t_end, self.tau)

    def to_dict(self) -> dict[str, Any]:
        initial = dict(self.initial)
        if self.seed is not None:
            initial["seed"] = self.seed
        return {
            "grid": {"dim": self.dim, "bounds": [list(b) for b in self.bounds], "nodes": list(self.nodes)},
            "model": {"equation": self.equation, "beta": self.beta, "c0": self.c0},
            "time": {"scheme": self.scheme, "tau": self.tau, "t_end": self.t_end},
            "initial": initial,
            "output": {
                "directory": self.output_dir,
                "cadence": self.cadence,
                "snapshot_times": list(self.snapshot_times),
            },
        }

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def validate(self, lines: dict[tuple[str, ...], int] | None = None) -> "RunConfig":
        lines = lines or {}

        def fail(path: tuple[str, ...], msg: str):
            where = ".".join(path)
            line = lines.get(path)
            prefix = f"line {line}: " if line else ""
            raise ConfigError(f"{prefix}{where}: {msg}")

        if self.dim not in (1, 2, 3):
            fail(("grid", "dim"), f"must be 1, 2 or 3, got {self.dim!r}")
        if len(self.bounds) != self.dim or any(len(b) != 2 or not b[1] > b[0] for b in self.bounds):
            fail(("grid", "bounds"), f"need {self.dim} increasing (lower, upper) pairs")
        if len(self.nodes) != self.dim or any(n < 4 or n % 2 for n in self.nodes):
            fail(("grid", "nodes"), f"need {self.dim} even counts >= 4, got {self.nodes!r}")
        if self.equation not in EQUATIONS:
            fail(("model", "equation"), f"must be one of {EQUATIONS}")
        if not math.isfinite(self.beta):
            fail(("model", "beta"), "must be finite")
        if not self.c0 >= 0:
            fail(("model", "c0"), "must be >= 0")
        if self.scheme not in SCHEMES:
            fail(("time", "scheme"), f"must be one of {sorted(SCHEMES)}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            fail(("time", "tau"), "must be positive")
        if not self.t_end >= 0:
            fail(("time", "t_end"), "must be >= 0")
        try:
            self.n_steps
        except ValueError as exc:
            fail(("time", "t_end"), str(exc))
        kind = self.initial.get("kind")
        if kind not in INITIAL_KINDS:
            fail(("initial", "kind"), f"must be one of {INITIAL_KINDS}")
        if kind == "soliton1d" and self.dim != 1:
            fail(("initial", "kind"), "soliton1d needs dim 1")
        if kind == "plane_wave":
            k = self.initial.get("wavevector", [1.0] * self.dim)
            if len(k) != self.dim:
                fail(("initial", "wavevector"), f"needs {self.dim} components")
        if self.cadence < 1:
            fail(("output", "cadence"), "must be >= 1")
        for t in self.snapshot_times:
            if not 0 <= t <= self.t_end:
                fail(("output", "snapshot_times"), f"{t!r} outside [0, t_end]")
            try:
                exact_step_count(t, self.tau)
            except ValueError as exc:
                fail(("output", "snapshot_times"), str(exc))
        return self


def _key_lines(node, prefix=()) -> dict[tuple[str, ...], int]:
    out: dict[tuple[str, ...], int] = {}
    if isinstance(node, yaml.MappingNode):
        for knode, vnode in node.value:
            path = (*prefix, str(knode.value))
            out[path] = knode.start_mark.line + 1
            out.update(_key_lines(vnode, path))
    return out


_SECTIONS = {
    "grid": {"dim", "bounds", "nodes"},
    "model": {"equation", "beta", "c0"},
    "time": {"scheme", "tau", "t_end"},
    "initial": None,
    "output": {"directory", "cadence", "snapshot_times"},
}


def parse_config(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text) or {}
        lines = _key_lines(yaml.compose(text))
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")

    def line_of(path):
        n = lines.get(path)
        return f"line {n}: " if n else ""

    for key, section in data.items():
        if key not in _SECTIONS:
            raise ConfigError(f"{line_of((key,))}unknown section {key!r}")
        if not isinstance(section, dict):
            raise ConfigError(f"{line_of((key,))}section {key!r} must be a mapping")
        allowed = _SECTIONS[key]
        if allowed is not None:
            for sub in section:
                if sub not in allowed:
                    raise ConfigError(f"{line_of((key, sub))}unknown key {key}.{sub}")

    grid = data.get("grid", {})
    model = data.get("model", {})
    time = data.get("time", {})
    initial = dict(data.get("initial", {"kind": "soliton1d"}))
    output = data.get("output", {})
    seed = initial.pop("seed", None)
    try:
        dim = int(grid.get("dim", 1))
        bounds = grid.get("bounds", [[-40.0, 40.0]])
        if bounds and not isinstance(bounds[0], (list, tuple)):
            bounds = [bounds] * dim
        nodes = grid.get("nodes", [256])
        if not isinstance(nodes, (list, tuple)):
            nodes = [nodes] * dim
        cfg = RunConfig(
            dim=dim,
            bounds=[[float(a), float(b)] for a, b in bounds],
            nodes=[int(n) for n in nodes],
            equation=str(model.get("equation", "standard")),
            beta=float(model.get("beta", 2.0)),
            c0=float(model.get("c0", 1.0)),
            scheme=str(time.get("scheme", "li-ei3")),
            tau=float(time.get("tau", 0.01)),
            t_end=float(time.get("t_end", 1.0)),
            initial=initial,
            seed=None if seed is None else int(seed),
            output_dir=str(output.get("directory", "out")),
            cadence=int(output.get("cadence", 1)),
            snapshot_times=[float(t) for t in output.get("snapshot_times", [])],
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value: {exc}") from exc
    return cfg.validate(lines)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
