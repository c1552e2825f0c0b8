"""JSON problem configs.

A config looks like::

    {
      "name": "analytic",
      "dim": 3,
      "gamma": 1.0,
      "f": "inv_quad_sq",
      "P": "inv_quad_sq",
      "q": 3,
      "kernel": {"type": "separable", "q2": {"name": "inv_quad_sq", "power": 0.5}},
      "grid": {"R_max": 200, "M": 2000, "stretch": 20},
      "solver": {"eig_tol": 1e-11, "newton_tol": 1e-11},
      "lambda1_exact": 3.0
    }

A profile is a built-in name, a dict ``{"name", "scale", "amplitude", "power"}``
meaning ``amplitude * base(r / scale) ** power``, or tabulated samples
``{"r": [...], "values": [...]}``.  Kernel types are ``separable`` (``q2``),
``convolution`` (``g``, ``angular_order``) and ``tabulated`` (``file``: .npz
or .csv written by :func:`write_kernel_table`).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import (
    GrowthRate,
    ProblemSpec,
    RadialConvolution,
    RadialProfile,
    Separable,
    Tabulated,
    WeightP,
)
from .problem import DEFAULT_GRID, DiscreteProblem, discretize

OUTDIR_ENV = "NONLOCAL_LOGISTIC_OUTDIR"

BUILTINS = {
    "inv_quad_sq": lambda r: (1.0 + r * r) ** -2,
    "inv_quad": lambda r: 1.0 / (1.0 + r * r),
    "inv_quad_sqrt": lambda r: (1.0 + r * r) ** -0.5,
    "exp": lambda r: np.exp(-r),
    "gaussian": lambda r: np.exp(-r * r),
    "one": lambda r: np.ones_like(r),
}

SOLVER_DEFAULTS = {"eig_tol": 1e-11, "newton_tol": 1e-11, "max_iter": 200}


class ConfigError(ValueError):
    pass


def _tabulated_profile(r, values):
    r = np.asarray(r, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.ndim != 1 or r.shape != v.shape or r.size < 2 or np.any(np.diff(r) <= 0):
        raise ConfigError("tabulated profile needs matching increasing r and values")
    if np.any(v <= 0):
        raise ConfigError("tabulated profile values must be positive")
    lv = np.log(v)
    # power-law continuation beyond the last sample
    slope = (lv[-1] - lv[-2]) / (np.log(r[-1]) - np.log(r[-2])) if r[-2] > 0 else 0.0

    def func(x):
        x = np.asarray(x, dtype=float)
        out = np.exp(np.interp(x, r, lv))
        far = x > r[-1]
        out[far] = v[-1] * (x[far] / r[-1]) ** slope
        return out

    return func


def parse_profile(obj, refs: dict | None = None) -> tuple:
    """Return ``(callable, label)`` for a profile description."""
    refs = refs or {}
    if isinstance(obj, str):
        obj = {"name": obj}
    if not isinstance(obj, dict):
        raise ConfigError(f"cannot parse profile {obj!r}")
    if "r" in obj:
        return _tabulated_profile(obj["r"], obj["values"]), "tabulated"
    name = obj.get("name")
    if name in refs:
        base = refs[name]
    elif name in BUILTINS:
        base = BUILTINS[name]
    else:
        raise ConfigError(f"unknown profile {name!r}; built-ins: {sorted(BUILTINS)}")
    scale = float(obj.get("scale", 1.0))
    amp = float(obj.get("amplitude", 1.0))
    power = float(obj.get("power", 1.0))

    def func(r):
        return amp * np.asarray(base(np.asarray(r, dtype=float) / scale), dtype=float) ** power

    label = name if (scale, amp, power) == (1.0, 1.0, 1.0) else f"{amp:g}*{name}(r/{scale:g})^{power:g}"
    return func, label


def write_kernel_table(path, nodes: np.ndarray, table: np.ndarray) -> None:
    path = Path(path)
    if path.suffix == ".npz":
        np.savez(path, nodes=nodes, table=table)
    elif path.suffix == ".csv":
        with open(path, "w") as fh:
            fh.write("r\\s," + ",".join(f"{s:.17g}" for s in nodes) + "\n")
            for ri, row in zip(nodes, table):
                fh.write(f"{ri:.17g}," + ",".join(f"{x:.17g}" for x in row) + "\n")
    else:
        raise ConfigError("kernel tables are written as .npz or .csv")


def read_kernel_table(path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as data:
            return data["nodes"], data["table"]
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return raw[:, 0], raw[:, 1:]


def parse_kernel(obj: dict, refs: dict, base_dir: Path):
    kind = obj.get("type")
    if kind == "separable":
        func, label = parse_profile(obj.get("q2", "one"), refs)
        return Separable(RadialProfile(func, label))
    if kind == "convolution":
        func, label = parse_profile(obj["g"], refs)
        return RadialConvolution(RadialProfile(func, label), int(obj.get("angular_order", 32)))
    if kind == "tabulated":
        nodes, table = read_kernel_table(base_dir / obj["file"])
        return Tabulated(table, nodes)
    raise ConfigError(f"unknown kernel type {kind!r}")


def spec_from_dict(cfg: dict, base_dir: Path | str = ".") -> ProblemSpec:
    try:
        dim = int(cfg["dim"])
        gamma = float(cfg["gamma"])
        P_func, P_label = parse_profile(cfg["P"])
        f_func, f_label = parse_profile(cfg["f"], {"P": P_func})
    except KeyError as exc:
        raise ConfigError(f"missing config field {exc}") from None
    kernel = parse_kernel(cfg.get("kernel", {"type": "separable"}), {"P": P_func, "f": f_func}, Path(base_dir))
    eigf = None
    if cfg.get("eigenfunction"):
        eigf = parse_profile(cfg["eigenfunction"])[0]
    return ProblemSpec(
        dim=dim,
        gamma=gamma,
        f=GrowthRate(f_func, f_label, q=cfg.get("q")),
        P=WeightP(P_func, P_label),
        kernel=kernel,
        name=cfg.get("name", "custom"),
        lambda1_exact=cfg.get("lambda1_exact"),
        eigenfunction=eigf,
    )


@dataclass
class RunConfig:
    problem: ProblemSpec
    grid: dict = field(default_factory=lambda: dict(DEFAULT_GRID))
    solver: dict = field(default_factory=lambda: dict(SOLVER_DEFAULTS))
    output_dir: Path | None = None

    def __post_init__(self):
        for key, val in self.solver.items():
            if key.endswith("tol") and not val > 0:
                raise ConfigError(f"tolerance {key} must be positive")

    def discretize(self) -> DiscreteProblem:
        return discretize(self.problem, self.grid["R_max"], int(self.grid["M"]), self.grid["stretch"])


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    spec = spec_from_dict(cfg, path.parent)
    grid = dict(DEFAULT_GRID)
    grid.update(cfg.get("grid", {}))
    solver = dict(SOLVER_DEFAULTS)
    solver.update(cfg.get("solver", {}))
    out = os.environ.get(OUTDIR_ENV) or cfg.get("output_dir")
    return RunConfig(spec, grid, solver, Path(out) if out else None)
