"""Row-by-row simulation of the binary and three-symbol lattice dynamics.

The update rule reads the neighbourhood {i, i+1, i+2} of each site (offset i is
configurable: i = 0 gives the right-looking chain, i = -1 the centered one) and
draws the new symbol independently per site:

* binary alphabet {0,1}: triple 000 -> 0 w.p. p, 1 w.p. 1-p; any other triple
  -> 0 w.p. 1-q, 1 w.p. q;
* three-symbol alphabet {0,?,1}: a triple containing 1 -> 0 w.p. 1-q, 1 w.p. q;
  triple 000 -> 0 w.p. p, 1 w.p. 1-p; a triple over {0,?} with at least one ?
  -> 0 w.p. p, 1 w.p. q, ? w.p. r.

Randomness is counter-based: every (time, site) pair is hashed to one uniform
variate, so results are independent of array width, evaluation order, and worker
count. Sampling inverts the CDF in the fixed symbol-code order 0 < ? < 1, which
makes the common-randomness coupling of two rows monotone in that order.

Two boundary policies: Cyclic keeps the width fixed and wraps indices; LightCone
shrinks the row by 2 sites per step (both from the right for offset 0, one per
side for offset -1) so that every surviving cell carries exactly the law of the
infinite-lattice dynamics restricted to that window.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .core import BinSymbol, EnvSymbol, LocalDistribution, Params

# ------------------------------------------------------------------ randomness

_U64 = np.uint64
_GOLD = _U64(0x9E3779B97F4A7C15)
_MUL1 = _U64(0xBF58476D1CE4E5B9)
_MUL2 = _U64(0x94D049BB133111EB)
_TAG_T = _U64(0xD6E8FEB86659FD93)
_TAG_N = _U64(0xA0761D6478BD642F)
_TAG_CHILD = _U64(0x8BB84B93962EACC9)
_MASK64 = (1 << 64) - 1


def _finalize(z):
    """splitmix64 finalizer; accepts uint64 scalars or arrays."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U64(30))) * _MUL1
        z = (z ^ (z >> _U64(27))) * _MUL2
        return z ^ (z >> _U64(31))


def _as_u64(x) -> np.ndarray:
    """Reinterpret (possibly negative) integers as two's-complement uint64."""
    return np.asarray(x, dtype=np.int64).view(_U64)


def _key_u64(seed_u64, t, n):
    """Hash (seed, t, n) to uint64; t, n may be scalars or broadcastable arrays."""
    with np.errstate(over="ignore"):
        h = _finalize(seed_u64 + _GOLD)
        h = _finalize(h ^ (_as_u64(t) * _MUL2 + _TAG_T))
        h = _finalize(h ^ (_as_u64(n) * _MUL1 + _TAG_N))
    return h


def _to_unit(h) -> np.ndarray:
    """Top 53 bits -> float64 in [0, 1)."""
    return (h >> _U64(11)) * (2.0**-53)


def u01_block(seeds: np.ndarray, t: int, n0: int, count: int) -> np.ndarray:
    """Uniforms for many streams at once: shape (len(seeds), count), keyed (t, n0+j)."""
    sites = n0 + np.arange(count, dtype=np.int64)
    return _to_unit(_key_u64(seeds.reshape(-1, 1), t, sites.reshape(1, -1)))


@dataclass(frozen=True)
class SeededStream:
    """Counter-based uniform source; the variate at (t, n) depends only on (seed, t, n)."""

    seed: int

    def _seed_u64(self):
        return _U64(self.seed & _MASK64)

    def u01(self, t: int, n: int) -> float:
        return float(_to_unit(_key_u64(self._seed_u64(), t, n)))

    def u01_range(self, t: int, n0: int, count: int) -> np.ndarray:
        """Variates at sites n0, n0+1, ..., n0+count-1 of step t."""
        sites = n0 + np.arange(count, dtype=np.int64)
        return _to_unit(_key_u64(self._seed_u64(), t, sites))

    def child(self, k: int) -> "SeededStream":
        """Derived stream for sample k; distinct k give independent (t, n) tables."""
        with np.errstate(over="ignore"):
            h = _finalize(self._seed_u64() ^ (_as_u64(k) * _MUL1 + _TAG_CHILD))
        return SeededStream(int(h))

    def child_seeds_u64(self, count: int) -> np.ndarray:
        ks = np.arange(count, dtype=np.int64)
        with np.errstate(over="ignore"):
            return _finalize(self._seed_u64() ^ (_as_u64(ks) * _MUL1 + _TAG_CHILD))


# ------------------------------------------------------------------ model/state

class Alphabet(Enum):
    BINARY = "binary"
    ENVELOPE = "envelope"


class Boundary(Enum):
    CYCLIC = "cyclic"
    LIGHTCONE = "lightcone"


@dataclass(frozen=True)
class ModelSpec:
    """Alphabet + neighbourhood offset i (window {i, i+1, i+2}) + parameters."""

    alphabet: Alphabet
    offset: int
    params: Params


@dataclass(frozen=True, eq=False)
class Configuration:
    """A finite row of symbol codes with a boundary policy.

    ``origin`` is the absolute lattice index of cells[0]; it shifts under the
    LightCone policy so that (t, n) randomness keys stay attached to absolute
    sites, which is what makes window restriction exact.
    """

    cells: np.ndarray
    boundary: Boundary
    origin: int = 0

    def __post_init__(self) -> None:
        arr = np.array(self.cells, dtype=np.int8)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("cells must be a nonempty 1-D array")
        if not np.isin(arr, (0, 1, 2)).all():
            raise ValueError("cell codes must be 0 (zero), 1 (?), or 2 (one)")
        arr.setflags(write=False)
        object.__setattr__(self, "cells", arr)

    @property
    def width(self) -> int:
        return int(self.cells.size)

    @property
    def has_qmark(self) -> bool:
        return bool((self.cells == 1).any())

    def counts(self) -> tuple[int, int, int]:
        """(count of 0, count of ?, count of 1) -- exact integers."""
        return (
            int((self.cells == 0).sum()),
            int((self.cells == 1).sum()),
            int((self.cells == 2).sum()),
        )

    def symbols(self) -> tuple[EnvSymbol, ...]:
        return tuple(EnvSymbol(int(c)) for c in self.cells)

    @classmethod
    def constant(
        cls, width: int, symbol: Union[EnvSymbol, BinSymbol], boundary: Boundary, origin: int = 0
    ) -> "Configuration":
        sym = symbol.to_env() if isinstance(symbol, BinSymbol) else symbol
        return cls(np.full(width, sym.value, dtype=np.int8), boundary, origin)

    @classmethod
    def from_symbols(
        cls, symbols: Iterable[Union[EnvSymbol, BinSymbol]], boundary: Boundary, origin: int = 0
    ) -> "Configuration":
        codes = [
            (s.to_env() if isinstance(s, BinSymbol) else s).value for s in symbols
        ]
        return cls(np.array(codes, dtype=np.int8), boundary, origin)


# ------------------------------------------------------------------ local rule

def local_rule(model: ModelSpec, triple: Sequence[Union[EnvSymbol, BinSymbol]]) -> LocalDistribution:
    """Exact one-site output law for a neighbourhood triple."""
    syms = tuple(s.to_env() if isinstance(s, BinSymbol) else s for s in triple)
    if len(syms) != 3 or not all(isinstance(s, EnvSymbol) for s in syms):
        raise ValueError(f"need a triple of symbols, got {triple!r}")
    p, q, r = model.params.p, model.params.q, model.params.r
    zero = Fraction(0)
    if model.alphabet is Alphabet.BINARY:
        if any(s is EnvSymbol.QMARK for s in syms):
            raise ValueError("? symbol passed to a binary model")
        if all(s is EnvSymbol.ZERO for s in syms):
            return LocalDistribution(p, zero, 1 - p)
        return LocalDistribution(1 - q, zero, q)
    if any(s is EnvSymbol.ONE for s in syms):
        return LocalDistribution(1 - q, zero, q)
    if all(s is EnvSymbol.ZERO for s in syms):
        return LocalDistribution(p, zero, 1 - p)
    return LocalDistribution(p, r, q)


# ------------------------------------------------------------------ stepping

def _neighbour_views(cfg: Configuration, offset: int):
    """Return (a, b, c) triple views and the output row's absolute origin/width."""
    cells, width = cfg.cells, cfg.width
    if cfg.boundary is Boundary.CYCLIC:
        base = np.arange(width) + offset
        a = cells[base % width]
        b = cells[(base + 1) % width]
        c = cells[(base + 2) % width]
        return a, b, c, cfg.origin, width
    if width < 3:
        raise ValueError("window exhausted: LightCone row narrower than 3 cells")
    # Output site n is computable iff its whole neighbourhood lies in the window:
    # n ranges over [origin - offset, origin + width - 1 - offset - 2].
    return cells[:-2], cells[1:-1], cells[2:], cfg.origin - offset, width - 2


def _thresholds(a, b, c, params: Params, binary: bool):
    """Per-site inverse-CDF cut points (t0, t1) in the code order 0 < ? < 1."""
    p, q, r = float(params.p), float(params.q), float(params.r)
    has_one = (a == 2) | (b == 2) | (c == 2)
    t0 = np.where(has_one, 1.0 - q, p)
    if binary:
        return t0, t0
    all_zero = (a == 0) & (b == 0) & (c == 0)
    t1 = t0 + np.where(has_one | all_zero, 0.0, r)
    return t0, t1


def step(cfg: Configuration, model: ModelSpec, stream: SeededStream, t: int) -> Configuration:
    """Advance one row by one step; deterministic given (seed, t) and the input."""
    binary = model.alphabet is Alphabet.BINARY
    if binary and cfg.has_qmark:
        raise ValueError("? symbol passed to a binary model")
    a, b, c, out_origin, out_width = _neighbour_views(cfg, model.offset)
    t0, t1 = _thresholds(a, b, c, model.params, binary)
    u = stream.u01_range(t, out_origin, out_width)
    out = (u >= t0).astype(np.int8) + (u >= t1).astype(np.int8)
    return Configuration(out, cfg.boundary, out_origin)


@dataclass(frozen=True)
class StepStats:
    t: int
    width: int
    count0: int
    countQ: int
    count1: int


@dataclass(frozen=True)
class TrajectoryResult:
    rows: tuple[StepStats, ...]
    final: Configuration


def trajectory(
    init: Configuration, model: ModelSpec, steps: int, stream: SeededStream
) -> TrajectoryResult:
    """Run ``steps`` updates; returns T+1 rows of exact symbol counts (and width)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    cfg = init
    rows = [StepStats(0, cfg.width, *cfg.counts())]
    for t in range(steps):
        cfg = step(cfg, model, stream, t)
        rows.append(StepStats(t + 1, cfg.width, *cfg.counts()))
    return TrajectoryResult(tuple(rows), cfg)


def envelope_of_pair(cfg_a: Configuration, cfg_b: Configuration) -> Configuration:
    """Sitewise summary of two binary rows: common value where equal, ? where not."""
    if cfg_a.has_qmark or cfg_b.has_qmark:
        raise ValueError("envelope_of_pair takes binary rows")
    if cfg_a.width != cfg_b.width:
        raise ValueError(f"width mismatch: {cfg_a.width} != {cfg_b.width}")
    if cfg_a.boundary is not cfg_b.boundary or cfg_a.origin != cfg_b.origin:
        raise ValueError("rows must cover the same window")
    cells = np.where(cfg_a.cells == cfg_b.cells, cfg_a.cells, np.int8(1))
    return Configuration(cells, cfg_a.boundary, cfg_a.origin)


def coupled_step(
    cfg_a: Configuration,
    cfg_b: Configuration,
    model: ModelSpec,
    stream: SeededStream,
    t: int,
) -> tuple[Configuration, Configuration]:
    """Advance two binary rows with the same (t, n) variates (common-randomness coupling).

    Each output row has exactly the marginal law of ``step`` on its own input:
    both invert the CDF in the order 0 < 1 at the same uniform.
    """
    if model.alphabet is not Alphabet.BINARY:
        raise ValueError("coupled_step is defined for the binary alphabet")
    if cfg_a.has_qmark or cfg_b.has_qmark:
        raise ValueError("? symbol passed to a binary model")
    if cfg_a.width != cfg_b.width or cfg_a.boundary is not cfg_b.boundary or cfg_a.origin != cfg_b.origin:
        raise ValueError("rows must cover the same window")
    a1, b1, c1, out_origin, out_width = _neighbour_views(cfg_a, model.offset)
    a2, b2, c2, _, _ = _neighbour_views(cfg_b, model.offset)
    t0_a, _ = _thresholds(a1, b1, c1, model.params, binary=True)
    t0_b, _ = _thresholds(a2, b2, c2, model.params, binary=True)
    u = stream.u01_range(t, out_origin, out_width)
    out_a = (u >= t0_a).astype(np.int8) * 2
    out_b = (u >= t0_b).astype(np.int8) * 2
    boundary = cfg_a.boundary
    return (
        Configuration(out_a, boundary, out_origin),
        Configuration(out_b, boundary, out_origin),
    )
