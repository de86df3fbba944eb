"""Seeded Gaussian-mixture series with known change points.

Normal deviates come from a counter-based SplitMix64 generator (Steele,
Lea and Flood 2014 finaliser, golden-ratio increment) fed through the
Box-Muller transform. Draw i of the uniform stream is
``splitmix64(seed + (i + 1) * 0x9E3779B97F4A7C15)``; consecutive pairs
(u1, u2) give two normals
``sqrt(-2 log u1) * cos(2 pi u2)`` and ``sqrt(-2 log u1) * sin(2 pi u2)``.
Uniforms use the top 53 bits; u1 is shifted into (0, 1] so the log is finite.
Integer arithmetic is exact on every platform; the transcendental functions
are those of the platform libm.

Scenario file grammar (one directive per line, ``#`` starts a comment)::

    seed <int>                 optional, default 0
    regime <length>            starts a new regime block
    mean <v1> ... <vM>         optional, default zero vector
    cov <c_i1> ... <c_iM>      one line per covariance row, M lines
    diag <d1> ... <dM>         alternative to cov: diagonal covariance

Every regime must resolve to the same dimension M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from .errors import ScenarioError, SingularCovarianceError
from .kernels import ReturnMatrix, cholesky_lower

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_TWO53 = 2.0 ** -53

RNG_NAME = "splitmix64-counter/box-muller v1"


def _splitmix64(counters: np.ndarray, seed: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + (counters + np.uint64(1)) * GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


class NormalStream:
    """Unbounded deterministic stream of standard normal deviates."""

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self._position = 0  # normals consumed so far

    def _block(self, first_pair: int, pairs: int) -> np.ndarray:
        idx = np.arange(2 * first_pair, 2 * (first_pair + pairs), dtype=np.uint64)
        bits = _splitmix64(idx, self.seed) >> np.uint64(11)
        u = bits.astype(np.float64) * _TWO53
        u1 = 1.0 - u[0::2]
        u2 = u[1::2]
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * math.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out

    def take(self, count: int) -> np.ndarray:
        if count <= 0:
            return np.empty(0)
        start = self._position
        first_pair = start // 2
        last_pair = (start + count + 1) // 2
        block = self._block(first_pair, last_pair - first_pair)
        offset = start - 2 * first_pair
        self._position += count
        return block[offset:offset + count]

    def __iter__(self) -> Iterator[float]:
        while True:
            yield from self.take(4096).tolist()


def standard_normal_stream(seed: int = 0) -> NormalStream:
    return NormalStream(seed)


@dataclass(frozen=True)
class RegimeSpec:
    length: int
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        if self.length < 1:
            raise ValueError("regime length must be >= 1")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean of length {mean.size}")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
            raise ValueError("regime covariance must be symmetric")
        try:
            cholesky_lower(cov)
        except SingularCovarianceError:
            raise ValueError("regime covariance must be positive definite") from None
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class MixtureScenario:
    regimes: Tuple[RegimeSpec, ...]
    seed: int = 0
    labels: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        regimes = tuple(self.regimes)
        if not regimes:
            raise ValueError("scenario needs at least one regime")
        dims = {r.dim for r in regimes}
        if len(dims) != 1:
            raise ValueError(f"regimes disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "regimes", regimes)

    @property
    def dim(self) -> int:
        return self.regimes[0].dim

    @property
    def length(self) -> int:
        return sum(r.length for r in self.regimes)


def sample_scenario(scenario: MixtureScenario) -> Tuple[ReturnMatrix, List[int]]:
    """Draw the series; column s of regime j is mean_j + L_j z_s.

    Normals are consumed column by column in time order. Returns the data and
    the start column of every regime after the first.
    """
    m = scenario.dim
    stream = standard_normal_stream(scenario.seed)
    columns = []
    boundaries = []
    position = 0
    for regime in scenario.regimes:
        low = cholesky_lower(regime.covariance)
        z = stream.take(m * regime.length).reshape(regime.length, m).T
        columns.append(regime.mean[:, None] + low @ z)
        position += regime.length
        boundaries.append(position)
    values = np.concatenate(columns, axis=1)
    labels = scenario.labels or tuple(f"x{i + 1}" for i in range(m))
    return ReturnMatrix(values, labels=labels), boundaries[:-1]


def equicorrelated(m: int, rho: float, variance: float = 1.0) -> np.ndarray:
    return variance * ((1.0 - rho) * np.eye(m) + rho * np.ones((m, m)))


def _floats(tokens: Sequence[str], lineno: int) -> List[float]:
    try:
        return [float(tok) for tok in tokens]
    except ValueError:
        raise ScenarioError(f"expected numbers, got {' '.join(tokens)!r}", line=lineno) from None


def parse_scenario(text: str) -> MixtureScenario:
    seed = 0
    blocks = []
    current = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *args = line.split()
        key = key.lower()
        if key == "seed":
            if len(args) != 1:
                raise ScenarioError("seed takes one integer", line=lineno)
            try:
                seed = int(args[0])
            except ValueError:
                raise ScenarioError(f"bad seed {args[0]!r}", line=lineno) from None
        elif key == "regime":
            if len(args) != 1:
                raise ScenarioError("regime takes one length", line=lineno)
            try:
                length = int(args[0])
            except ValueError:
                raise ScenarioError(f"bad regime length {args[0]!r}", line=lineno) from None
            current = {"line": lineno, "length": length, "mean": None, "cov": [], "diag": None}
            blocks.append(current)
        elif key in ("mean", "cov", "diag"):
            if current is None:
                raise ScenarioError(f"{key!r} before any 'regime' line", line=lineno)
            values = _floats(args, lineno)
            if not values:
                raise ScenarioError(f"{key!r} needs values", line=lineno)
            if key == "mean":
                current["mean"] = values
            elif key == "cov":
                current["cov"].append(values)
            else:
                current["diag"] = values
        else:
            raise ScenarioError(f"unknown directive {key!r}", line=lineno)

    if not blocks:
        raise ScenarioError("scenario has no regimes", line=None)

    regimes = []
    for blk in blocks:
        if blk["cov"] and blk["diag"] is not None:
            raise ScenarioError("regime has both 'cov' and 'diag'", line=blk["line"])
        if blk["diag"] is not None:
            cov = np.diag(blk["diag"])
        elif blk["cov"]:
            rows = blk["cov"]
            if any(len(r) != len(rows) for r in rows):
                raise ScenarioError("covariance is not square", line=blk["line"])
            cov = np.array(rows)
        else:
            raise ScenarioError("regime has no covariance", line=blk["line"])
        mean = blk["mean"] if blk["mean"] is not None else [0.0] * cov.shape[0]
        try:
            regimes.append(RegimeSpec(length=blk["length"], mean=np.array(mean), covariance=cov))
        except ValueError as exc:
            raise ScenarioError(str(exc), line=blk["line"]) from None
    try:
        return MixtureScenario(regimes=tuple(regimes), seed=seed)
    except ValueError as exc:
        raise ScenarioError(str(exc), line=None) from None


def load_scenario(path) -> MixtureScenario:
    path = Path(path)
    if not path.is_file():
        raise ScenarioError(f"scenario file not found: {path}")
    return parse_scenario(path.read_text())


def format_scenario(scenario: MixtureScenario) -> str:
    lines = [f"seed {scenario.seed}"]
    for r in scenario.regimes:
        lines.append(f"regime {r.length}")
        lines.append("mean " + " ".join(repr(float(v)) for v in r.mean))
        for row in r.covariance:
            lines.append("cov " + " ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"
