"""Shared vocabulary for the lattice dynamics and the exact cylinder calculus.

Everything here is an immutable value: the parameter pair (p, q) with its derived
open probability r = 1 - p - q, the three-symbol alphabet {0, ?, 1}, single-site
probability distributions, the two stochastic orders on the alphabet, and cylinder
patterns (contiguous runs of symbol subsets, with two shorthand tokens ``**`` and
``***`` for the hatted sets {0,?}^2 \\ {00} and {0,?}^3 \\ {000}).

Probabilities are exact ``fractions.Fraction`` values unless a simulation context
explicitly works in floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, Sequence, Union

Rationalish = Union[Fraction, int, str]


def as_fraction(x: Rationalish) -> Fraction:
    """Exact conversion to Fraction; accepts "a/b" and decimal strings, never floats."""
    if isinstance(x, bool) or isinstance(x, float):
        raise TypeError(f"refusing inexact conversion from {type(x).__name__}: {x!r}")
    return Fraction(x)


class EnvSymbol(IntEnum):
    """Three-symbol alphabet; codes are ordered so that 0 < ? < 1 numerically."""

    ZERO = 0
    QMARK = 1
    ONE = 2

    def __str__(self) -> str:
        return "0?1"[self.value]

    @classmethod
    def from_char(cls, ch: str) -> "EnvSymbol":
        try:
            return _SYMBOL_BY_CHAR[ch]
        except KeyError:
            raise ValueError(f"not a symbol: {ch!r}") from None


class BinSymbol(IntEnum):
    """Binary sub-alphabet; embeds into EnvSymbol preserving 0 and 1."""

    ZERO = 0
    ONE = 1

    def to_env(self) -> EnvSymbol:
        return EnvSymbol.ZERO if self is BinSymbol.ZERO else EnvSymbol.ONE

    def __str__(self) -> str:
        return "01"[self.value]


SYMBOLS = (EnvSymbol.ZERO, EnvSymbol.QMARK, EnvSymbol.ONE)
_SYMBOL_BY_CHAR = {"0": EnvSymbol.ZERO, "?": EnvSymbol.QMARK, "1": EnvSymbol.ONE}

Word = tuple[EnvSymbol, ...]


def iter_words(length: int) -> Iterator[Word]:
    """All 3^length words over the alphabet, lexicographic in code order."""
    return product(SYMBOLS, repeat=length)


def word_str(word: Sequence[EnvSymbol]) -> str:
    return "".join(str(s) for s in word)


@dataclass(frozen=True)
class Params:
    """Trap/target probability pair; r = 1 - p - q is the open probability.

    The degenerate all-open point p = q = 0 is constructible (r = 1) but carries
    in_region = False; verification entry points that need p + q > 0 reject it.
    """

    p: Fraction
    q: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", as_fraction(self.p))
        object.__setattr__(self, "q", as_fraction(self.q))
        if not (0 <= self.p and 0 <= self.q and self.p + self.q <= 1):
            raise ValueError(f"need 0 <= p, 0 <= q, p+q <= 1; got p={self.p}, q={self.q}")

    @property
    def r(self) -> Fraction:
        return 1 - self.p - self.q

    @property
    def in_region(self) -> bool:
        """True iff p + q > 0 (the parameter region where the dynamics are noisy)."""
        return self.p + self.q > 0

    def __str__(self) -> str:
        return f"(p={self.p}, q={self.q})"


@dataclass(frozen=True)
class LocalDistribution:
    """Distribution of one output symbol; exact (Fraction) or float entries.

    Exact entries must sum to 1 exactly; float entries within 1e-12.
    """

    prob0: Union[Fraction, float]
    probQ: Union[Fraction, float]
    prob1: Union[Fraction, float]

    def __post_init__(self) -> None:
        vals = (self.prob0, self.probQ, self.prob1)
        if any(v < 0 for v in vals):
            raise ValueError(f"negative probability in {vals}")
        if self.exact:
            if sum(vals) != 1:
                raise ValueError(f"probabilities sum to {sum(vals)}, not 1")
        elif abs(float(sum(vals)) - 1.0) > 1e-12:
            raise ValueError(f"float probabilities sum to {sum(vals)}, not ~1")

    @property
    def exact(self) -> bool:
        return all(isinstance(v, (Fraction, int)) for v in (self.prob0, self.probQ, self.prob1))

    def prob(self, sym: EnvSymbol) -> Union[Fraction, float]:
        return (self.prob0, self.probQ, self.prob1)[sym.value]

    def mass(self, symbols: Iterable[EnvSymbol]) -> Union[Fraction, float]:
        return sum(self.prob(s) for s in symbols)

    def as_dict(self) -> dict[str, Union[Fraction, float]]:
        return {"0": self.prob0, "?": self.probQ, "1": self.prob1}


class StochOrder(Enum):
    """The two orders on the alphabet used for stochastic domination.

    TOTAL: 0 < ? < 1 (a strict total order; same as the numeric code order).
    PARTIAL: ? is the unique top; 0 and 1 are incomparable.
    """

    TOTAL = "total"
    PARTIAL = "partial"


def symbol_leq(order: StochOrder, a: EnvSymbol, b: EnvSymbol) -> bool:
    if order is StochOrder.TOTAL:
        return a.value <= b.value
    return a is b or b is EnvSymbol.QMARK


def upper_sets(order: StochOrder) -> tuple[frozenset[EnvSymbol], ...]:
    """All nonempty upper sets of the order, smallest first."""
    return _UPPER_SETS[order]


def _compute_upper_sets(order: StochOrder) -> tuple[frozenset[EnvSymbol], ...]:
    found = []
    for mask in range(1, 8):
        subset = frozenset(s for s in SYMBOLS if mask & (1 << s.value))
        if all(b in subset for a in subset for b in SYMBOLS if symbol_leq(order, a, b)):
            found.append(subset)
    found.sort(key=lambda u: (len(u), sorted(s.value for s in u)))
    return tuple(found)


_UPPER_SETS = {o: _compute_upper_sets(o) for o in StochOrder}


class Hat(Enum):
    """Multi-cell tokens: the hatted sets over {0,?} minus the all-zero tuple."""

    HAT2 = 2
    HAT3 = 3

    @property
    def span(self) -> int:
        return self.value


Cell = Union[frozenset, Hat]  # frozenset[EnvSymbol] | Hat

_Q = frozenset({EnvSymbol.QMARK})
_Z = frozenset({EnvSymbol.ZERO})
_ZQ = frozenset({EnvSymbol.ZERO, EnvSymbol.QMARK})
_FULL = frozenset(SYMBOLS)

# Disjoint decomposition of a hat token by the position of the first ?.
_HAT_ALTERNATIVES = {
    Hat.HAT2: ((_Q, _ZQ), (_Z, _Q)),
    Hat.HAT3: ((_Q, _ZQ, _ZQ), (_Z, _Q, _ZQ), (_Z, _Z, _Q)),
}


@dataclass(frozen=True)
class CylinderPattern:
    """A contiguous run of cells, each a nonempty symbol subset or a hat token."""

    cells: tuple[Cell, ...]

    def __post_init__(self) -> None:
        if not self.cells:
            raise ValueError("empty pattern")
        norm = []
        for cell in self.cells:
            if isinstance(cell, Hat):
                norm.append(cell)
                continue
            sub = frozenset(cell)
            if not sub:
                raise ValueError("empty subset cell")
            if not sub <= _FULL:
                raise ValueError(f"cell {sub!r} is not a subset of the alphabet")
            norm.append(sub)
        object.__setattr__(self, "cells", tuple(norm))

    @property
    def span(self) -> int:
        return sum(c.span if isinstance(c, Hat) else 1 for c in self.cells)

    @property
    def is_plain(self) -> bool:
        return all(not isinstance(c, Hat) for c in self.cells)

    @classmethod
    def parse(cls, text: str) -> "CylinderPattern":
        """Whitespace-separated cells: ``0``, ``?``, ``1``, ``[0?]``, ``**``, ``***``.

        A run of bare symbol characters like ``100?`` is also accepted as shorthand
        for the corresponding singleton cells.
        """
        cells: list[Cell] = []
        for tok in text.split():
            if tok == "**":
                cells.append(Hat.HAT2)
            elif tok == "***":
                cells.append(Hat.HAT3)
            elif tok.startswith("["):
                if not tok.endswith("]") or len(tok) < 3:
                    raise ValueError(f"malformed subset cell {tok!r}")
                cells.append(frozenset(EnvSymbol.from_char(c) for c in tok[1:-1]))
            else:
                cells.extend(frozenset({EnvSymbol.from_char(c)}) for c in tok)
        if not cells:
            raise ValueError(f"no cells in pattern text {text!r}")
        return cls(tuple(cells))

    def __str__(self) -> str:
        out = []
        for cell in self.cells:
            if cell is Hat.HAT2:
                out.append("**")
            elif cell is Hat.HAT3:
                out.append("***")
            elif len(cell) == 1:
                out.append(str(next(iter(cell))))
            else:
                out.append("[" + "".join(str(s) for s in sorted(cell)) + "]")
        return " ".join(out)


def pattern(text: str) -> CylinderPattern:
    return CylinderPattern.parse(text)


def expand_pattern(pat: CylinderPattern) -> list[CylinderPattern]:
    """Materialize hat tokens into plain subset-cell patterns.

    The returned patterns are pairwise disjoint as events and their union is the
    event named by ``pat`` (hats decompose by the position of the first ?), so
    summing probabilities over the expansion never double-counts.
    """
    alternatives: list[tuple[tuple[frozenset, ...], ...]] = []
    for cell in pat.cells:
        if isinstance(cell, Hat):
            alternatives.append(_HAT_ALTERNATIVES[cell])
        else:
            alternatives.append(((cell,),))
    out = []
    for combo in product(*alternatives):
        cells: tuple[frozenset, ...] = tuple(sub for part in combo for sub in part)
        out.append(CylinderPattern(cells))
    return out


def word_in_pattern(word: Sequence[EnvSymbol], pat: CylinderPattern) -> bool:
    """Membership test, implemented directly on the cells (not via expansion)."""
    if len(word) != pat.span:
        raise ValueError(f"word length {len(word)} != pattern span {pat.span}")
    pos = 0
    for cell in pat.cells:
        if isinstance(cell, Hat):
            chunk = tuple(word[pos : pos + cell.span])
            if any(s is EnvSymbol.ONE for s in chunk):
                return False
            if all(s is EnvSymbol.ZERO for s in chunk):
                return False
            pos += cell.span
        else:
            if word[pos] not in cell:
                return False
            pos += 1
    return True


def pattern_words(pat: CylinderPattern) -> list[Word]:
    """All words of span length lying in the pattern's event."""
    return [w for w in iter_words(pat.span) if word_in_pattern(w, pat)]
