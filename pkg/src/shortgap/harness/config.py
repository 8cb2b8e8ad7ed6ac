"""Experiment configuration: a small INI file read with configparser.

    [experiment]
    name = demo
    seed = 0

    [chain]
    k = 5
    delta = 0.6
    beta = 0.94
    eps0 = 1e-3
    degree = 3

    [grid]
    x = 1e10, 1e11
    delta = 0.525, 0.55
    d = 2, 6
    x_samples = 0          ; extra log-uniform x values drawn with the seed
    x_range = 1e10, 1e12

    [sums]
    k = 2                  ; sums use their own small tuple so W stays below h
    x = 1e10               ; defaults to the first grid x and delta
    delta = 0.525
    R = 100
    F = sym:1-degree:2

    [output]
    dir = out

    [oracles]
    sums = false

An empty or missing [grid] yields a report with the parameter chain only.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ..tuples import as_fraction, as_integer, make_context, rational_power_floor
from ..variational import SymmetricPoly, VariationalResult, optimize_Mk

X_MAX = 10**12
DELTA_MIN = Fraction(525, 1000)


class ConfigError(ValueError):
    """The configuration or a command-line parameter is invalid."""


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    seed: int = 0
    k: int = 5
    chain_delta: Fraction = Fraction(6, 10)
    beta: Fraction = Fraction(94, 100)
    eps0: Fraction = Fraction(1, 1000)
    degree: int = 3
    x_values: tuple[int, ...] = ()
    deltas: tuple[Fraction, ...] = ()
    gaps: tuple[int, ...] = ()
    x_samples: int = 0
    x_range: tuple[int, int] = (10**10, 10**12)
    sums_k: int = 2
    sums_x: int | None = None
    sums_delta: Fraction | None = None
    sums_R: float = 100.0
    sums_F: str = "sym:1-degree:2"
    output_dir: str = "out"
    oracle_sums: bool = False
    source: str = field(default="", compare=False)

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("chain k must be >= 1")
        if self.degree < 0:
            raise ConfigError("chain degree must be >= 0")
        if not DELTA_MIN <= self.chain_delta <= 1:
            raise ConfigError(f"chain delta {self.chain_delta} outside [0.525, 1]")
        for d in self.deltas:
            if not DELTA_MIN <= d <= 1:
                raise ConfigError(f"grid delta {d} outside [0.525, 1]")
        for g in self.gaps:
            if g < 2 or g % 2:
                raise ConfigError(f"gap bound d={g} must be even and >= 2")
        for x in self.x_values:
            if not 2 <= x <= X_MAX:
                raise ConfigError(f"grid x={x} outside [2, 10^12]")
        lo, hi = self.x_range
        if self.x_samples < 0 or (self.x_samples and not 2 <= lo < hi <= X_MAX):
            raise ConfigError("x_range must satisfy 2 <= lo < hi <= 10^12")
        if self.sums_k < 1:
            raise ConfigError("sums k must be >= 1")
        if self.sums_x is not None and not 2 <= self.sums_x <= X_MAX:
            raise ConfigError(f"sums x={self.sums_x} outside [2, 10^12]")
        if self.sums_delta is not None and not DELTA_MIN <= self.sums_delta <= 1:
            raise ConfigError(f"sums delta {self.sums_delta} outside [0.525, 1]")
        if self.sums_R < 2:
            raise ConfigError("sums R must be >= 2")

    @property
    def grid_x(self) -> tuple[int, ...]:
        """Listed x values followed by the seeded log-uniform samples."""
        if not self.x_samples:
            return self.x_values
        rng = np.random.default_rng(self.seed)
        lo, hi = self.x_range
        e = rng.uniform(math.log(lo), math.log(hi), self.x_samples)
        return self.x_values + tuple(min(hi, max(lo, int(math.exp(v)))) for v in e)

    @property
    def grid_points(self) -> list[tuple[int, Fraction]]:
        return [(x, d) for x in self.grid_x for d in self.deltas]

    @property
    def sums_point(self) -> tuple[int, Fraction]:
        x0, d0 = self.grid_points[0] if self.grid_points else (None, None)
        x = self.sums_x if self.sums_x is not None else x0
        d = self.sums_delta if self.sums_delta is not None else d0
        if x is None or d is None:
            raise ConfigError("sums need x and delta, from [sums] or the grid")
        return x, d

    @property
    def empty_grid(self) -> bool:
        return not self.grid_points

    def validate_grid(self) -> None:
        """Every grid point must give h <= x and a valid SieveContext."""
        for x, d in self.grid_points:
            h = rational_power_floor(x, d)
            if h > x:
                raise ConfigError(f"h={h} exceeds x={x}")
            try:
                make_context(x, d, Fraction(1, 2), k=self.k)
            except ValueError as exc:
                raise ConfigError(f"grid point x={x}, delta={d}: {exc}") from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("source")
        d["grid_x"] = list(self.grid_x)
        return d

    def hash(self) -> str:
        """sha256 of the canonical parameter dump (independent of formatting in the file)."""
        payload = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()


# -- parsing -------------------------------------------------------------


def _number_list(text: str, conv) -> tuple:
    items = [s.strip() for s in text.replace(";", ",").split(",")]
    return tuple(conv(s) for s in items if s)


def _int(s) -> int:
    try:
        return as_integer(s)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"expected an integer, got {s!r}") from exc


def _frac(s) -> Fraction:
    try:
        return as_fraction(s)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigError(f"expected a number, got {s!r}") from exc


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    known = {"experiment", "chain", "grid", "sums", "output", "oracles"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")

    def get(section, key, default=None):
        return cp.get(section, key, fallback=default) if cp.has_section(section) else default

    kw: dict = {"source": text}
    if (v := get("experiment", "name")) is not None:
        kw["name"] = v
    if (v := get("experiment", "seed")) is not None:
        kw["seed"] = _int(v)
    for key, name, conv in (("k", "k", _int), ("delta", "chain_delta", _frac), ("beta", "beta", _frac),
                            ("eps0", "eps0", _frac), ("degree", "degree", _int)):
        if (v := get("chain", key)) is not None:
            kw[name] = conv(v)
    if (v := get("grid", "x")) is not None:
        kw["x_values"] = _number_list(v, _int)
    if (v := get("grid", "delta")) is not None:
        kw["deltas"] = _number_list(v, _frac)
    if (v := get("grid", "d")) is not None:
        kw["gaps"] = _number_list(v, _int)
    if (v := get("grid", "x_samples")) is not None:
        kw["x_samples"] = _int(v)
    if (v := get("grid", "x_range")) is not None:
        r = _number_list(v, _int)
        if len(r) != 2:
            raise ConfigError("x_range needs two values")
        kw["x_range"] = r
    if (v := get("sums", "k")) is not None:
        kw["sums_k"] = _int(v)
    if (v := get("sums", "x")) is not None:
        kw["sums_x"] = _int(v)
    if (v := get("sums", "delta")) is not None:
        kw["sums_delta"] = _frac(v)
    if (v := get("sums", "R")) is not None:
        kw["sums_R"] = float(_frac(v))
    if (v := get("sums", "F")) is not None:
        kw["sums_F"] = v.strip()
    if (v := get("output", "dir")) is not None:
        kw["output_dir"] = v.strip()
    if (v := get("oracles", "sums")) is not None:
        try:
            kw["oracle_sums"] = cp.getboolean("oracles", "sums")
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    cfg = ExperimentConfig(**kw)
    cfg.validate_grid()
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


# -- smooth functions F ------------------------------------------------------


def parse_F(spec: str, k: int):
    """F from "const:c", "sym:<rank>-degree:<d>" (rank-th eigenvector) or "file:mk.json"."""
    kind, _, arg = spec.partition(":")
    if kind == "const":
        c = _frac(arg or "1")
        if c == 0:
            raise ConfigError("constant F must be nonzero")
        return SymmetricPoly.constant(k, c)
    if kind == "sym":
        rank_s, _, deg_s = arg.partition("-degree:")
        rank, degree = _int(rank_s), _int(deg_s)
        if rank < 1:
            raise ConfigError("rank must be >= 1")
        try:
            return optimize_Mk(k, degree, rank=rank).to_symmetric_poly()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if kind == "file":
        try:
            res = VariationalResult.from_dict(json.loads(Path(arg).read_text()))
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot load F from {arg}: {exc}") from exc
        if res.k != k:
            raise ConfigError(f"F in {arg} has k={res.k}, context has k={k}")
        return res.to_symmetric_poly()
    raise ConfigError(f"unknown F spec {spec!r}; use const:c, sym:<rank>-degree:<d> or file:mk.json")

