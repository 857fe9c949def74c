"""Exact cylinder calculus for translation-invariant measures on the three-symbol line.

A measure is stored as its exact distribution on words of length ``order``; every
shorter marginal is derived once at construction and translation consistency is
validated there, so a cylinder probability is position-free by definition.  On top
of that sit: the brute-force pushforward of a cylinder event under one synchronous
update, a catalog of closed-form expressions for pushforward probabilities of small
cylinders (with their non-negative remainder terms), a chain of weight functionals
w0..w4, two inequalities assembled by summing rows of window tables, and the master
inequality comparing w4 before and after one update.  Everything downstream of a
TIMeasure is a Fraction; floats never enter a verification path.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from itertools import product as iproduct
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import (
    CylinderPattern,
    EnvSymbol,
    Params,
    SYMBOLS,
    as_fraction,
    expand_pattern,
    iter_words,
    pattern,
)
from .pca import Alphabet, Boundary, Configuration, ModelSpec, local_rule

MAX_ORDER = 10

Patternish = Union[str, CylinderPattern]


def _as_pattern(pat: Patternish) -> CylinderPattern:
    return pattern(pat) if isinstance(pat, str) else pat


def frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


# ------------------------------------------------------------------ measures

@dataclass(frozen=True, eq=False)
class TIMeasure:
    """A translation-invariant probability measure, known through order ``order``.

    ``marginals[k]`` is the exact distribution on words of length k, indexed by
    the word read as a base-3 integer (symbol codes, leftmost digit most
    significant).  Construction rejects tables that are not normalized or whose
    left- and right-marginals disagree at some length, so any instance really is
    the restriction of a translation-invariant measure.
    """

    order: int
    marginals: tuple[tuple[Fraction, ...], ...]
    name: str
    reflection_invariant: bool

    @classmethod
    def from_table(cls, order: int, table: Sequence[Fraction], name: str) -> "TIMeasure":
        if not 1 <= order <= MAX_ORDER:
            raise ValueError(f"order must be in 1..{MAX_ORDER}, got {order}")
        probs = tuple(as_fraction(x) for x in table)
        if len(probs) != 3**order:
            raise ValueError(f"table has {len(probs)} entries, expected {3 ** order}")
        if any(x < 0 for x in probs):
            raise ValueError("negative entry in measure table")
        if sum(probs) != 1:
            raise ValueError(f"table sums to {sum(probs)}, not 1")
        margs = [probs]
        for length in range(order - 1, -1, -1):
            upper = margs[0]
            margs.insert(0, tuple(upper[3 * i] + upper[3 * i + 1] + upper[3 * i + 2]
                                  for i in range(3**length)))
        for length in range(order):  # drop-left must agree with drop-right
            step = 3**length
            upper = margs[length + 1]
            left = tuple(upper[j] + upper[step + j] + upper[2 * step + j]
                         for j in range(step))
            if left != margs[length]:
                raise ValueError("table is not translation consistent")
        reflect = all(probs[i] == probs[_reverse_index(i, order)] for i in range(3**order))
        return cls(order, tuple(margs), name, reflect)

    def word_prob(self, word: Sequence[EnvSymbol]) -> Fraction:
        if len(word) > self.order:
            raise ValueError(f"word length {len(word)} exceeds order {self.order}")
        idx = 0
        for s in word:
            idx = idx * 3 + s.value
        return self.marginals[len(word)][idx]

    def prob(self, pat: Patternish) -> Fraction:
        return cylinder_prob(self, pat)

    def __str__(self) -> str:
        return self.name


def _reverse_index(idx: int, length: int) -> int:
    out = 0
    for _ in range(length):
        idx, digit = divmod(idx, 3)
        out = out * 3 + digit
    return out


def product_measure(p0, pQ, p1, order: int = 6) -> TIMeasure:
    """i.i.d. sites with P(0), P(?), P(1) = p0, pQ, p1."""
    marg = tuple(as_fraction(x) for x in (p0, pQ, p1))
    table = [Fraction(1)]
    for _ in range(order):
        table = [x * m for x in table for m in marg]
    name = f"product({marg[0]},{marg[1]},{marg[2]})"
    return TIMeasure.from_table(order, table, name)


def point_mass(symbol: EnvSymbol, order: int = 6) -> TIMeasure:
    """The measure concentrated on the constant configuration."""
    weights = [Fraction(1) if s is symbol else Fraction(0) for s in SYMBOLS]
    return product_measure(*weights, order=order)


def reversible_markov_measure(weights: Sequence[Sequence[int]], order: int = 6) -> TIMeasure:
    """Stationary reversible Markov chain from a symmetric non-negative weight matrix.

    pi(a) = W(a)/sum(W) with W(a) the row sum, K(a,b) = w(a,b)/W(a).  Symmetry of w
    is detailed balance, which makes the word distribution reflection invariant; a
    symbol with zero row sum gets pi = 0 and is unreachable.
    """
    w = [[as_fraction(weights[a][b]) for b in range(3)] for a in range(3)]
    for a in range(3):
        for b in range(3):
            if w[a][b] < 0:
                raise ValueError("weights must be non-negative")
            if w[a][b] != w[b][a]:
                raise ValueError("weight matrix must be symmetric")
    row = [sum(w[a]) for a in range(3)]
    total = sum(row)
    if total == 0:
        raise ValueError("weight matrix is identically zero")
    pi = [row[a] / total for a in range(3)]
    kernel = [[w[a][b] / row[a] if row[a] > 0 else Fraction(b == a) for b in range(3)]
              for a in range(3)]
    table = [pi[a] for a in range(3)]
    for _ in range(order - 1):
        table = [x * kernel[i % 3][b] for i, x in enumerate(table) for b in range(3)]
    name = f"markov({[[int(weights[a][b]) for b in range(3)] for a in range(3)]})"
    return TIMeasure.from_table(order, table, name)


class MeasureFamily(Enum):
    PRODUCT = "product"
    REVERSIBLE_MARKOV = "reversible_markov"


def random_measure(family: MeasureFamily, rng: random.Random, order: int = 6) -> TIMeasure:
    """Draw a random member of the family; all probabilities have denominator <= 64*3."""
    if family is MeasureFamily.PRODUCT:
        den = rng.randint(1, 64)
        a, b = sorted((rng.randint(0, den), rng.randint(0, den)))
        return product_measure(Fraction(a, den), Fraction(b - a, den), Fraction(den - b, den),
                               order=order)
    while True:
        w = [[0] * 3 for _ in range(3)]
        for a in range(3):
            for b in range(a, 3):
                w[a][b] = w[b][a] = rng.randint(0, 8)
        if any(any(r) for r in w):
            return reversible_markov_measure(w, order=order)


def empirical_measure(row: Configuration, order: int) -> TIMeasure:
    """Sliding-window word frequencies of a cyclic row, as exact counts/width.

    Translation consistent by construction (every window position counted once
    around the cycle); reflection invariance is whatever it happens to be.
    """
    if row.boundary is not Boundary.CYCLIC:
        raise ValueError("empirical measure needs a cyclic row")
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in 1..{MAX_ORDER}, got {order}")
    codes = row.cells.astype(np.int64)
    idx = np.zeros(row.width, dtype=np.int64)
    for j in range(order):
        idx = idx * 3 + np.roll(codes, -j)
    counts = np.bincount(idx, minlength=3**order)
    table = [Fraction(int(c), row.width) for c in counts]
    return TIMeasure.from_table(order, table, f"empirical(width={row.width})")


# ------------------------------------------------------------------ cylinders

@lru_cache(maxsize=None)
def _plain_word_indices(pat: CylinderPattern) -> tuple[int, tuple[int, ...]]:
    """(span, base-3 indices of the disjoint plain words in the event)."""
    span = pat.span
    indices = []
    for plain in expand_pattern(pat):
        for combo in iproduct(*plain.cells):
            idx = 0
            for s in combo:
                idx = idx * 3 + s.value
            indices.append(idx)
    return span, tuple(indices)


def cylinder_prob(mu: TIMeasure, pat: Patternish) -> Fraction:
    pat = _as_pattern(pat)
    span, indices = _plain_word_indices(pat)
    if span > mu.order:
        raise ValueError(f"pattern span {span} exceeds measure order {mu.order}")
    marg = mu.marginals[span]
    return sum((marg[i] for i in indices), Fraction(0))


@lru_cache(maxsize=None)
def _envelope_rule(triple: tuple[EnvSymbol, ...], params: Params) -> tuple[Fraction, ...]:
    law = local_rule(ModelSpec(Alphabet.ENVELOPE, 0, params), triple)
    return (law.prob0, law.probQ, law.prob1)


@lru_cache(maxsize=None)
def _pushforward_kernel(pat: CylinderPattern, params: Params) -> tuple[Fraction, ...]:
    """kernel[u] = P(the updated window lies in pat | input word u), u over span+2 sites.

    Output sites are independent given the input word, so the probability of each
    disjoint set-row of the pattern is a product of single-site masses.
    """
    span = pat.span
    rows = [plain.cells for plain in expand_pattern(pat)]
    kernel = []
    for u in iter_words(span + 2):
        laws = [_envelope_rule(u[j:j + 3], params) for j in range(span)]
        total = Fraction(0)
        for cells in rows:
            prod = Fraction(1)
            for law, cell in zip(laws, cells):
                mass = sum((law[s.value] for s in cell), Fraction(0))
                if mass == 0:
                    prod = Fraction(0)
                    break
                prod *= mass
            total += prod
        kernel.append(total)
    return tuple(kernel)


def pushforward_cylinder(mu: TIMeasure, pat: Patternish, params: Params,
                         offset: int = 0) -> Fraction:
    """Probability of the cylinder event after one synchronous update of mu.

    Sums mu(u) * P(window matches | u) over all words u on the span+2 input sites.
    The neighbourhood offset only relabels which absolute sites those are, so for
    a translation-invariant mu the value does not depend on it.
    """
    del offset
    pat = _as_pattern(pat)
    if pat.span + 2 > mu.order:
        raise ValueError(
            f"pushforward of span {pat.span} needs order >= {pat.span + 2}, have {mu.order}")
    kernel = _pushforward_kernel(pat, params)
    marg = mu.marginals[pat.span + 2]
    return sum((m * k for m, k in zip(marg, kernel) if m and k), Fraction(0))


# ------------------------------------------------------------------ identities

# Linear relations between cylinder probabilities: each side is a list of
# (coefficient, pattern) and the residual lhs - rhs must vanish.  All of them are
# plain marginal/partition bookkeeping valid for any translation-invariant
# measure, except one_hat3_split whose collapsed double term also needs
# reflection invariance.
IDENTITIES: dict[str, tuple[tuple[tuple[int, str], ...], tuple[tuple[int, str], ...]]] = {
    "hat3_left_extension": (((1, "***"),),
                            ((1, "1 ***"), (1, "[0?] [0?] ***"), (1, "1 [0?] ***"))),
    "hat_block_shift": (((1, "1 [0?] ***"),),
                        ((1, "1 *** [0?]"), (1, "1000?"), (-1, "1?000"))),
    "left_split_1000q": (((1, "1000?"),),
                         ((1, "000?"), (-1, "?000?"), (-1, "0000?"))),
    "left_split_000q": (((1, "000?"),),
                        ((1, "?000?"), (1, "0000?"), (1, "1000?"))),
    "right_split_000q": (((1, "000??"), (1, "000?0")),
                         ((1, "000?"), (-1, "000?1"))),
    "zeros_hat3": (((1, "0 0 0 ***"),),
                   ((1, "000?"), (1, "0000?"), (1, "00000?"),
                    (-1, "0 0 0 ** 1"), (-1, "000?1"))),
    "zeros_hat2": (((1, "0 0 0 **"),),
                   ((1, "000?"), (1, "0000?"), (-1, "000?1"))),
    "zeros_q_pad": (((1, "0 0 0 ? [0?]"),),
                    ((1, "000?"), (-1, "000?1"))),
    "zeros_q_pad2": (((1, "0 0 0 ? [0?] [0?]"),),
                     ((1, "000?"), (-1, "000?1"), (-1, "0 0 0 ? [0?] 1"))),
    "zeros_hat2_pad": (((1, "0 0 0 ** [0?]"),),
                       ((1, "000?"), (1, "0000?"), (-1, "000?1"), (-1, "0 0 0 ** 1"))),
    "one_hat3_split": (((1, "1 ***"),),
                       ((1, "1?"), (1, "10?"), (1, "100?"),
                        (-1, "1?1"), (-1, "1??1"), (-2, "1?01"))),
    "one_qq_right": (((1, "1???"), (1, "1??0")),
                     ((1, "1??"), (-1, "1??1"))),
}

_REFLECTION_ONLY_IDENTITIES = frozenset({"one_hat3_split"})


def verify_identity(name: str, mu: TIMeasure) -> Fraction:
    """Residual (lhs - rhs) of a named identity; zero when it holds."""
    lhs, rhs = IDENTITIES[name]
    total = Fraction(0)
    for coef, pat in lhs:
        total += coef * cylinder_prob(mu, pat)
    for coef, pat in rhs:
        total -= coef * cylinder_prob(mu, pat)
    return total


# ------------------------------------------------------------------ closed forms

CLOSED_FORM_IDS = ("?", "0?", "?0?", "1?", "10?", "100?", "000?",
                   "1??", "1?0?", "10??", "1?00", "10?0", "1?01")


@dataclass(frozen=True)
class ClosedFormResult:
    """One catalog entry evaluated on a measure.

    ``value`` is the pushforward probability of the cylinder: for a fully
    specified entry it is computed from the written formula alone, otherwise it
    is written + remainder with the remainder obtained by subtracting the written
    part from the brute-force pushforward.  ``components`` carries the named
    sub-expressions (written part, C/D remainders, alternate writings).
    """

    formula: str
    params: Params
    measure: str
    value: Fraction
    components: tuple[tuple[str, Fraction], ...]
    fully_specified: bool

    def component(self, name: str) -> Fraction:
        return dict(self.components)[name]

    @property
    def remainders_nonnegative(self) -> bool:
        return all(v >= 0 for k, v in self.components if k.startswith(("C", "D")))

    def to_json_dict(self) -> dict:
        return {
            "formula": self.formula,
            "p": frac_str(self.params.p),
            "q": frac_str(self.params.q),
            "measure": self.measure,
            "value": frac_str(self.value),
            "components": {k: frac_str(v) for k, v in self.components},
            "fully_specified": self.fully_specified,
            "pass": self.remainders_nonnegative,
        }


def closed_form(name: str, mu: TIMeasure, params: Params) -> ClosedFormResult:
    """Evaluate one closed-form catalog entry exactly.

    Requires a reflection-invariant measure of order >= 6 (two of the writings
    use the reflected cylinder, and the widest right-hand side spans six sites).
    """
    if name not in CLOSED_FORM_IDS:
        raise ValueError(f"unknown formula {name!r}; known: {CLOSED_FORM_IDS}")
    if mu.order < 6:
        raise ValueError(f"closed forms need order >= 6, have {mu.order}")
    if not mu.reflection_invariant:
        raise ValueError("closed forms assume a reflection-invariant measure")
    p, q, r = params.p, params.q, params.r
    c = lambda text: cylinder_prob(mu, text)  # noqa: E731

    def full(value: Fraction, *extra: tuple[str, Fraction]) -> ClosedFormResult:
        comps = (("written", value),) + extra
        return ClosedFormResult(name, params, mu.name, value, comps, True)

    def partial(written: Fraction, *extra: tuple[str, Fraction]) -> ClosedFormResult:
        push = pushforward_cylinder(mu, name, params)
        comps = (("written", written), ("C", push - written)) + extra
        return ClosedFormResult(name, params, mu.name, push, comps, False)

    if name == "?":
        return full(r * c("***"))
    if name == "0?":
        return full(p * r * c("[0?] ***") + (1 - q) * r * c("1 ***"))
    if name == "?0?":
        return full(p * r * r * (c("[0?] [0?] ***") - c("0 0 0 **")))
    if name == "1?":
        return full(r * r * c("000?") + q * r * c("***"))
    if name == "000?":
        return full(p**3 * r * c("[0?] [0?] [0?] ***")
                    + (1 - q) * p * p * r * c("1 [0?] [0?] ***")
                    + (1 - q) ** 2 * p * r * c("1 [0?] ***")
                    + (1 - q) ** 3 * r * c("1 ***"))
    if name == "100?":
        c_term = (q * p * p * r * c("***") + q * p * r * r * c("1 [0?] ***")
                  + q * r * r * (1 - q + p) * c("1 ***"))
        d_term = (q * p * p * r * c("*** ***") + q * p * p * r * c("1 [0?] [0?] ***")
                  + q * (1 - q) * p * r * c("1 [0?] ***") + q * (1 - q) ** 2 * r * c("1 ***"))
        value = (1 - p) * p * p * r * c("0 0 0 ***") + d_term
        return full(value, ("C", c_term), ("D", d_term),
                    ("written_via_C", p * p * r * r * c("0 0 0 ***") + c_term))
    if name == "10?":
        c_term = q * p * r * c("1 [0?] ***") + q * (1 - q) * r * c("1 ***")
        written = (1 - p) * p * r * c("0 0 0 **") + c_term
        push = pushforward_cylinder(mu, name, params)
        comps = (("written", written), ("C", c_term), ("D", push - written))
        return ClosedFormResult(name, params, mu.name, push, comps, False)
    if name == "1??":
        return partial((1 - p) * r * r * c("0 0 0 ? [0?]"))
    if name == "1?0?":
        return partial((1 - p) * r * r * p * c("0 0 0 ? [0?] [0?]"))
    if name == "10??":
        return partial((1 - p) * p * r * r * c("0 0 0 ** [0?]"))
    if name == "1?00":
        return partial((1 - p) * r * p * p * c("000?")
                       + (1 - p) * r * r * p * c("0 0 0 ? [0?] 1")
                       + (1 - p) * r * r * (1 + p - q) * c("000?1"))
    if name == "10?0":
        return partial((1 - p) * p * p * r * c("0 0 0 **")
                       + (1 - p) * p * r * r * c("0 0 0 ** 1"))
    # 1?01: two equivalent writings; the second trades the reflected block for
    # marginal identities, so their match is part of what the tests pin down.
    written = (q * r * p * (1 - p) * c("** 0 0 0")
               + (1 - p) * r * p * q * c("0 0 0 ? [0?]")
               + (1 - p) * r * (1 - q) * q * c("000?1"))
    alt = (2 * (1 - p) * r * p * q * c("000?") + (1 - p) * p * r * q * c("0000?")
           + (1 - p) * r * q * (r - p) * c("000?1"))
    return partial(written, ("written_alt", alt))


# ------------------------------------------------------------------ weights

_WEIGHT_SPANS = ("?", "0?", "?0?", "100?", "1?", "10?", "1??", "1?0?", "10??",
                 "1?01", "1?00", "10?0")


def _weight_chain(ev: Callable[[str], Fraction], params: Params) -> tuple[Fraction, ...]:
    """w0..w4 evaluated with cylinder values supplied by ``ev``.

    The chained form and the expanded final display are the same polynomial in
    the cylinder values; the assert keeps the two transcriptions honest.
    """
    p, q, r = params.p, params.q, params.r
    w0 = ev("?") + 2 * ev("0?") - ev("?0?") + 2 * ev("100?")
    w1 = w0 - p * (1 - r) * ev("?")
    w2 = w1 - (2 * p * r * (ev("1?") + ev("10?"))
               + 2 * p * p * r * (ev("1??") + ev("1?0?") + ev("10??"))
               + 4 * r * ev("1?01") + 2 * p * ev("100?"))
    w3 = w2 - 2 * (q + p * p * r) * ev("100?") - 2 * p * p * r * (ev("1?00") + ev("10?0"))
    w4 = w3 - q * ev("?")
    explicit = ((1 - p * p - p * q - q) * ev("?") + 2 * ev("0?") - ev("?0?")
                + 2 * r * (1 - p * p) * ev("100?")
                - 2 * p * r * (ev("1?") + ev("10?"))
                - 2 * p * p * r * (ev("1??") + ev("1?0?") + ev("10??"))
                - 4 * r * ev("1?01") - 2 * p * p * r * (ev("1?00") + ev("10?0")))
    assert w4 == explicit, "chained w4 disagrees with its expanded display"
    return (w0, w1, w2, w3, w4)


def weight(k: int, mu: TIMeasure, params: Params) -> Fraction:
    """The k-th weight functional of the measure, k in 0..4."""
    if not 0 <= k <= 4:
        raise ValueError(f"weight index must be 0..4, got {k}")
    if mu.order < 4:
        raise ValueError(f"weights need order >= 4, have {mu.order}")
    return _weight_chain(lambda t: cylinder_prob(mu, t), params)[k]


# ------------------------------------------------------------------ window tables

# Rows are (start column, symbols); columns run -2..2 and column 0 is the site
# whose symbol the inequalities bound.  Within each table the rows are pairwise
# disjoint events.
_INEQ1_ROWS: tuple[tuple[int, str], ...] = (
    (-1, "1???"), (-1, "1??0"), (-1, "1?0?"), (-1, "1?00"),
    (-1, "???"), (-1, "??0"),
    (-2, "00?"), (-2, "?0?"),
    (-2, "???1"), (-2, "0??1"),
    (-2, "10??"), (-2, "10?0"),
    (-1, "1??1"), (-1, "1?01"), (-1, "1?1"),
    (-2, "1??1"), (-2, "10?1"),
)

_INEQ2_ROWS_Q: tuple[tuple[int, str], ...] = (
    (-1, "????"), (-1, "???0"), (-1, "??0?"), (-1, "??00"),
    (-1, "0???"), (-1, "0??0"), (-1, "0?0?"), (-1, "0?00"),
    (-1, "1???"), (-1, "1??0"), (-1, "1??1"), (-1, "1?0?"),
    (-1, "1?00"), (-1, "1?01"), (0, "?1"),
    (-1, "???1"), (-1, "0??1"), (-1, "??01"), (-1, "0?01"),
)

_INEQ2_ROWS_0Q: tuple[tuple[int, str], ...] = (
    (-1, "?0??"), (-1, "?0?0"), (-1, "00??"), (-1, "00?0"), (-1, "10??"),
    (-1, "10?0"), (-1, "?0?1"), (-1, "00?1"), (-1, "10?1"),
)

_INEQ2_ROWS_00Q: tuple[tuple[int, str], ...] = (
    (-1, "?00?"), (-1, "000?"), (-1, "100?"),
)

# Scope predicates on a window over columns -2..2 (index = column + 2).
_Z, _Q = EnvSymbol.ZERO, EnvSymbol.QMARK
_SCOPES: dict[str, Callable[[tuple[EnvSymbol, ...]], bool]] = {
    "eta0=?": lambda w: w[2] is _Q,
    "eta0=0,eta1=?": lambda w: w[2] is _Z and w[3] is _Q,
    "eta0..2=00?": lambda w: w[2] is _Z and w[3] is _Z and w[4] is _Q,
}

_TABLES: dict[str, tuple[tuple[tuple[int, str], ...], str, bool]] = {
    # table id -> (rows, scope id, union must equal the scope exactly)
    "ineq1_rows": (_INEQ1_ROWS, "eta0=?", False),
    "ineq2_rows_q": (_INEQ2_ROWS_Q, "eta0=?", False),
    "ineq2_rows_0q": (_INEQ2_ROWS_0Q, "eta0=0,eta1=?", True),
    "ineq2_rows_00q": (_INEQ2_ROWS_00Q, "eta0..2=00?", True),
}


def _row_matches(window: tuple[EnvSymbol, ...], row: tuple[int, str]) -> bool:
    start, syms = row
    return all(window[start + 2 + j] is EnvSymbol.from_char(ch)
               for j, ch in enumerate(syms))


@dataclass(frozen=True)
class TableStructure:
    """Measure-free facts about one row table, from 3^5 window enumeration."""

    table: str
    rows: int
    disjoint: bool
    within_scope: bool
    covers_scope: Optional[bool]  # None when the union is not claimed exact

    @property
    def ok(self) -> bool:
        return self.disjoint and self.within_scope and self.covers_scope in (None, True)


@lru_cache(maxsize=None)
def table_structure(table: str) -> TableStructure:
    rows, scope_id, exact = _TABLES[table]
    scope = _SCOPES[scope_id]
    disjoint = within = True
    covered = True
    for window in iter_words(5):
        hits = sum(1 for row in rows if _row_matches(window, row))
        if hits > 1:
            disjoint = False
        if hits and not scope(window):
            within = False
        if scope(window) and not hits:
            covered = False
    return TableStructure(table, len(rows), disjoint, within, covered if exact else None)


def _linear(mu: TIMeasure, terms: Sequence[tuple[int, str]]) -> Fraction:
    return sum((coef * cylinder_prob(mu, pat) for coef, pat in terms), Fraction(0))


_INEQ1_FORMS: tuple[tuple[str, tuple[tuple[int, str], ...]], ...] = (
    ("grouped", ((1, "***"), (-1, "0??"), (-1, "0?0"), (-1, "?00"), (2, "1 ***"),
                 (-2, "100?"), (-1, "??01"), (-1, "0?01"), (-1, "?0?1"), (-1, "00?1"),
                 (2, "1??1"), (1, "1?1"), (2, "1?01"))),
    ("expanded", ((1, "***"), (-1, "0??"), (-1, "0?0"), (-1, "0?1"), (-1, "?00"),
                  (-1, "?01"), (2, "1 ***"), (-2, "100?"), (2, "1??1"), (1, "1?1"),
                  (4, "1?01"))),
    ("final", ((1, "***"), (-2, "0?"), (1, "?0?"), (-2, "100?"), (2, "1 ***"),
               (2, "1??1"), (1, "1?1"), (4, "1?01"))),
)

_INEQ2_LHS: tuple[tuple[int, str], ...] = ((1, "?"), (1, "0?"), (1, "00?"))
_INEQ2_RHS: tuple[tuple[int, str], ...] = (
    (1, "[0?] ***"), (2, "1 ***"), (-1, "100?"), (1, "1?"), (2, "1?01"), (1, "1??1"))


@dataclass(frozen=True)
class TableReport:
    """One table-derived inequality checked on one measure."""

    which: str
    measure: str
    structure: tuple[TableStructure, ...]
    row_sums: tuple[tuple[str, Fraction], ...]
    forms: tuple[tuple[str, Fraction], ...]
    lhs: Fraction
    rhs: Fraction

    @property
    def slack(self) -> Fraction:
        return self.lhs - self.rhs

    @property
    def structural_ok(self) -> bool:
        return all(s.ok for s in self.structure)

    @property
    def passed(self) -> bool:
        return self.structural_ok and self.slack >= 0

    def to_json_dict(self) -> dict:
        return {
            "which": self.which,
            "measure": self.measure,
            "structure": [{"table": s.table, "rows": s.rows, "disjoint": s.disjoint,
                           "within_scope": s.within_scope, "covers_scope": s.covers_scope}
                          for s in self.structure],
            "row_sums": {k: frac_str(v) for k, v in self.row_sums},
            "forms": {k: frac_str(v) for k, v in self.forms},
            "lhs": frac_str(self.lhs),
            "rhs": frac_str(self.rhs),
            "slack": frac_str(self.slack),
            "pass": self.passed,
        }


def verify_table_inequality(which: str, mu: TIMeasure) -> TableReport:
    """Check one of the two assembled inequalities on a reflection-invariant measure.

    Structure (disjoint rows inside the claimed scope, exact unions where claimed)
    is verified measure-free over all 3^5 windows; the inequality itself and the
    displayed intermediate right-hand sides are then evaluated exactly on mu.
    """
    if which not in ("ineq_1", "ineq_2"):
        raise ValueError(f"which must be 'ineq_1' or 'ineq_2', got {which!r}")
    if mu.order < 5:
        raise ValueError(f"table inequalities need order >= 5, have {mu.order}")
    if not mu.reflection_invariant:
        raise ValueError("table inequalities assume a reflection-invariant measure")

    def row_sum(rows: Sequence[tuple[int, str]]) -> Fraction:
        return sum((cylinder_prob(mu, syms) for _, syms in rows), Fraction(0))

    if which == "ineq_1":
        structure = (table_structure("ineq1_rows"),)
        sums = (("ineq1_rows", row_sum(_INEQ1_ROWS)),)
        forms = tuple((name, _linear(mu, terms)) for name, terms in _INEQ1_FORMS)
        lhs = cylinder_prob(mu, "?")
        rhs = forms[-1][1]
    else:
        structure = tuple(table_structure(t)
                          for t in ("ineq2_rows_q", "ineq2_rows_0q", "ineq2_rows_00q"))
        sums = (("ineq2_rows_q", row_sum(_INEQ2_ROWS_Q)),
                ("ineq2_rows_0q", row_sum(_INEQ2_ROWS_0Q)),
                ("ineq2_rows_00q", row_sum(_INEQ2_ROWS_00Q)))
        forms = ()
        lhs = _linear(mu, _INEQ2_LHS)
        rhs = _linear(mu, _INEQ2_RHS)
    return TableReport(which, mu.name, structure, sums, forms, lhs, rhs)


# ------------------------------------------------------------------ master inequality

# Slack terms subtracted on the right of the master inequality: coefficient(p,q,r)
# times a signed combination of cylinder probabilities.  Every term must come out
# non-negative on its own; D and D' (built from the closed-form remainders) are
# appended by verify_master_inequality.
_MASTER_TERMS: tuple[tuple[str, Callable[[Fraction, Fraction, Fraction], Fraction],
                           tuple[tuple[int, str], ...]], ...] = (
    ("q(1+p-pr) [mu(0?)+mu(00?)]",
     lambda p, q, r: q * (1 + p - p * r), ((1, "0?"), (1, "00?"))),
    ("(p(1-r)+q) mu(10?)",
     lambda p, q, r: p * (1 - r) + q, ((1, "10?"),)),
    ("r(4q^2+4qp^2-2q^3+2q^2p) [mu(100?)+mu(1???)+mu(1?0?)+mu(10??)]",
     lambda p, q, r: r * (4 * q * q + 4 * q * p * p - 2 * q**3 + 2 * q * q * p),
     ((1, "100?"), (1, "1???"), (1, "1?0?"), (1, "10??"))),
    ("2r(1-p^2) mu(1??1)",
     lambda p, q, r: 2 * r * (1 - p * p), ((1, "1??1"),)),
    ("r(1-p) mu(1?1)",
     lambda p, q, r: r * (1 - p), ((1, "1?1"),)),
    ("r(4q^2+2qp^2(1+p)-2q^3+2q^2p) [mu(1??0)+mu(1?00)+mu(10?0)]",
     lambda p, q, r: r * (4 * q * q + 2 * q * p * p * (1 + p) - 2 * q**3 + 2 * q * q * p),
     ((1, "1??0"), (1, "1?00"), (1, "10?0"))),
    ("pr^2(1+2q) mu(1[***]1)",
     lambda p, q, r: p * r * r * (1 + 2 * q), ((1, "1 *** 1"),)),
    ("2p^3r^3(1-p) [mu(10000?)+mu(?0000?)]",
     lambda p, q, r: 2 * p**3 * r**3 * (1 - p), ((1, "10000?"), (1, "?0000?"))),
    ("2pqr^2(2-2q+p) mu(1[***])",
     lambda p, q, r: 2 * p * q * r * r * (2 - 2 * q + p), ((1, "1 ***"),)),
    ("(2pqr^2+qr(1-2p^2(1-p))) mu([***])",
     lambda p, q, r: 2 * p * q * r * r + q * r * (1 - 2 * p * p * (1 - p)), ((1, "***"),)),
    ("pr^2(1+2q(1-p)) mu(?000?)",
     lambda p, q, r: p * r * r * (1 + 2 * q * (1 - p)), ((1, "?000?"),)),
    ("6pqr^2(1-p) mu(0000?)",
     lambda p, q, r: 6 * p * q * r * r * (1 - p), ((1, "0000?"),)),
    ("2p^2qr^2 mu(1000?)",
     lambda p, q, r: 2 * p * p * q * r * r, ((1, "1000?"),)),
    ("4qp^2r^2 [mu(1[0?][***])-mu(1000?)]",
     lambda p, q, r: 4 * q * p * p * r * r, ((1, "1 [0?] ***"), (-1, "1000?"))),
    ("2p^2r^3(1-p)(1+p-q) mu(000?1)",
     lambda p, q, r: 2 * p * p * r**3 * (1 - p) * (1 + p - q), ((1, "000?1"),)),
    ("2p^2r^2(1-p)(1-p^2) mu(000[**]1)",
     lambda p, q, r: 2 * p * p * r * r * (1 - p) * (1 - p * p), ((1, "0 0 0 ** 1"),)),
    ("(2pqr^2(1-p)(2+p)+2pqr(1-2pr)+2p^2q^2r+4p^4qr^2) mu(000?)",
     lambda p, q, r: (2 * p * q * r * r * (1 - p) * (2 + p) + 2 * p * q * r * (1 - 2 * p * r)
                      + 2 * p * p * q * q * r + 4 * p**4 * q * r * r),
     ((1, "000?"),)),
    ("2qp^2r(1-p) mu(00000?)",
     lambda p, q, r: 2 * q * p * p * r * (1 - p), ((1, "00000?"),)),
)


@dataclass(frozen=True)
class WeightReport:
    """Master inequality bookkeeping: weights before/after one update, slack terms."""

    params: Params
    measure: str
    w_mu: tuple[Fraction, ...]
    w_image: tuple[Fraction, ...]
    terms: tuple[tuple[str, Fraction], ...]

    @property
    def overall_slack(self) -> Fraction:
        return self.w_mu[4] - self.w_image[4] - sum(v for _, v in self.terms)

    @property
    def negative_terms(self) -> tuple[str, ...]:
        return tuple(name for name, v in self.terms if v < 0)

    @property
    def passed(self) -> bool:
        return self.overall_slack >= 0 and not self.negative_terms

    def to_json_dict(self) -> dict:
        return {
            "p": frac_str(self.params.p),
            "q": frac_str(self.params.q),
            "measure": self.measure,
            "w_mu": [frac_str(v) for v in self.w_mu],
            "w_image": [frac_str(v) for v in self.w_image],
            "terms": [{"name": k, "value": frac_str(v)} for k, v in self.terms],
            "overall_slack": frac_str(self.overall_slack),
            "pass": self.passed,
        }


def verify_master_inequality(mu: TIMeasure, params: Params) -> WeightReport:
    """Exact check that one update decreases w4 by at least the named slack terms.

    w4 of the updated measure is evaluated entirely through brute-force
    pushforward probabilities -- none of the closed forms enter that side.  The
    remainder terms D and D' reuse the closed-form catalog's C/D components.
    """
    if not params.in_region:
        raise ValueError("master inequality requires p + q > 0")
    if mu.order < 6:
        raise ValueError(f"master inequality needs order >= 6, have {mu.order}")
    if not mu.reflection_invariant:
        raise ValueError("master inequality assumes a reflection-invariant measure")
    p, q, r = params.p, params.q, params.r
    w_mu = _weight_chain(lambda t: cylinder_prob(mu, t), params)
    w_image = _weight_chain(lambda t: pushforward_cylinder(mu, t, params), params)
    terms = [(name, coef(p, q, r) * _linear(mu, pats))
             for name, coef, pats in _MASTER_TERMS]
    cf = {name: closed_form(name, mu, params)
          for name in ("10?", "100?", "1??", "1?0?", "10??", "1?01", "1?00", "10?0")}
    d_term = (2 * p * r * cf["10?"].component("D")
              + 2 * p * p * r * (cf["1??"].component("C") + cf["1?0?"].component("C")
                                 + cf["10??"].component("C"))
              + 4 * r * cf["1?01"].component("C"))
    d_prime = (2 * (q + p * p * r) * cf["100?"].component("D")
               + 2 * p * p * r * (cf["1?00"].component("C") + cf["10?0"].component("C")))
    terms.append(("D (update remainders of 10?,1??,1?0?,10??,1?01)", d_term))
    terms.append(("D' (update remainders of 100?,1?00,10?0)", d_prime))
    return WeightReport(params, mu.name, w_mu, w_image, tuple(terms))


# ------------------------------------------------------------------ stationarity

@dataclass(frozen=True)
class StationarityReport:
    """What the master inequality forces a stationary measure to satisfy.

    ``gauge`` is |mu(?) - r*mu(***)|, zero for an exactly stationary measure; the
    ``forced`` cylinder masses are the ones that must vanish in the parameter
    branch at hand, so for a near-stationary empirical measure they should all be
    small.  Informational -- carries no pass/fail.
    """

    params: Params
    measure: str
    branch: str
    qmark: Fraction
    gauge: Fraction
    forced: tuple[tuple[str, Fraction], ...]

    def to_json_dict(self) -> dict:
        return {
            "p": frac_str(self.params.p),
            "q": frac_str(self.params.q),
            "measure": self.measure,
            "branch": self.branch,
            "qmark": frac_str(self.qmark),
            "gauge": frac_str(self.gauge),
            "forced": {k: frac_str(v) for k, v in self.forced},
        }


def stationary_conclusion_check(params: Params, mu: TIMeasure) -> StationarityReport:
    if mu.order < 5:
        raise ValueError(f"stationarity check needs order >= 5, have {mu.order}")
    c = lambda text: cylinder_prob(mu, text)  # noqa: E731
    p, q, r = params.p, params.q, params.r
    gauge = abs(c("?") - r * c("***"))
    if r == 0:
        branch, forced = "r=0", (("mu(?)", c("?")),)
    elif q > 0:
        branch, forced = "q>0", (("mu(***)", c("***")), ("mu(?)", c("?")))
    elif p > 0:
        branch = "q=0,p>0"
        forced = (("mu(10?)", c("10?")), ("mu(000?1)", c("000?1")),
                  ("mu(000?)", c("000?")), ("mu(***)", c("***")), ("mu(?)", c("?")))
    else:
        branch, forced = "p=q=0", ()
    return StationarityReport(params, mu.name, branch, c("?"), gauge, forced)
