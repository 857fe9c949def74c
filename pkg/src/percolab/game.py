"""Random-turn token games on Z^2 and their line-by-line classification.

Every site of Z^2 independently carries a label: trap with probability p,
target with probability q, open with probability r = 1 - p - q. A token is
pushed along one of four out-neighbourhood schemes (V1-V4 below); landing on a
trap wins for the player who moved there, landing on a target loses, and play
continues through open sites. Under optimal play each site splits into W
(the player to move from it wins), L (loses), or D (neither can force a win).

Classification is pure backward induction: the class of a site is a function
of its own label and the classes of its three out-neighbours, which all lie on
the next line (diagonals x+y=k for V1/V3, horizontals y=k for V2/V4).
Identifying each line with Z via the x-coordinate, the out-neighbours of site
n sit at n+i, n+i+1, n+i+2 on the successor line, with i = 0 for V1/V2 and
i = -1 for V3/V4 -- the same window shape as `pca`. Integrating the label out,
one induction step *is* one step of the three-symbol dynamics under the
correspondence W=0, D=?, L=1 (codes coincide); kernel_correspondence checks
this exactly.

Draw probabilities are estimated by starting the frontier line, at distance T
above the base site, in the all-D (unresolved) state and inducting down.
Labels are keyed by (line index, absolute site) so the sampled label field is
shared across horizons: raising T only ever resolves D's, never flips a W/L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from fractions import Fraction

import numpy as np

from .core import EnvSymbol, LocalDistribution, Params, iter_words
from .pca import Alphabet, ModelSpec, SeededStream, local_rule, u01_block


class GameVersion(Enum):
    V1 = "V1"
    V2 = "V2"
    V3 = "V3"
    V4 = "V4"

    @property
    def offset(self) -> int:
        """Neighbourhood offset i under the i = x line identification."""
        return 0 if self in (GameVersion.V1, GameVersion.V2) else -1

    @property
    def line_step(self) -> int:
        """Increment of the line parameter k from one line to its successor."""
        return 2 if self is GameVersion.V1 else 1

    def line_of(self, x: int, y: int) -> int:
        """Line parameter k of site (x, y): diagonals for V1/V3, horizontals for V2/V4."""
        return x + y if self in (GameVersion.V1, GameVersion.V3) else y


def out_set(v: GameVersion, x: int, y: int) -> tuple[tuple[int, int], ...]:
    """The three out-neighbours of (x, y), in the scheme's fixed order."""
    if v is GameVersion.V1:
        return ((x, y + 2), (x + 1, y + 1), (x + 2, y))
    if v is GameVersion.V2:
        return ((x, y + 1), (x + 1, y + 1), (x + 2, y + 1))
    if v is GameVersion.V3:
        return ((x + 1, y), (x, y + 1), (x - 1, y + 2))
    return ((x - 1, y + 1), (x, y + 1), (x + 1, y + 1))


class SiteLabel(IntEnum):
    """Site labels; codes ordered so that inverse-CDF sampling at the cut
    points (p, 1-q) reproduces (trap, open, target) ~ (p, r, q)."""

    TRAP = 0
    OPEN = 1
    TARGET = 2


class GameClass(IntEnum):
    """Outcome classes; codes deliberately coincide with the symbol codes of
    `core` under W=0, D=?, L=1."""

    W = 0
    D = 1
    L = 2


def sample_labels(
    params: Params, stream: SeededStream, line_index: int, origin: int, width: int
) -> np.ndarray:
    """Labels of sites origin..origin+width-1 on the line ``line_index`` steps
    above the base; keyed by (line_index, site) so the field is reusable."""
    u = stream.u01_range(line_index, origin, width)
    return _labels_from_u(u, params)


def _labels_from_u(u: np.ndarray, params: Params) -> np.ndarray:
    t0 = float(params.p)
    t1 = 1.0 - float(params.q)
    return (u >= t0).astype(np.int8) + (u >= t1).astype(np.int8)


def classify_line(labels, next_classes, version: GameVersion) -> np.ndarray:
    """One backward-induction step: classes on a line from its own labels and
    the successor line's classes.

    Alignment convention (all versions): the out-neighbours of labels[j] are
    next_classes[j], next_classes[j+1], next_classes[j+2] -- the line
    identification absorbs the offset, which only moves the window's absolute
    position (the caller's bookkeeping). Works on stacks of lines: the last
    axis is the line. Deterministic.
    """
    labels = np.asarray(labels, dtype=np.int8)
    nxt = np.asarray(next_classes, dtype=np.int8)
    if nxt.shape[-1] != labels.shape[-1] + 2:
        raise ValueError(
            f"successor line must cover every out-neighbourhood: "
            f"need width {labels.shape[-1] + 2}, got {nxt.shape[-1]}"
        )
    n0, n1, n2 = nxt[..., :-2], nxt[..., 1:-1], nxt[..., 2:]
    some_l = (n0 == GameClass.L) | (n1 == GameClass.L) | (n2 == GameClass.L)
    all_w = (n0 == GameClass.W) & (n1 == GameClass.W) & (n2 == GameClass.W)
    open_class = np.where(some_l, GameClass.W, np.where(all_w, GameClass.L, GameClass.D))
    out = np.where(
        labels == SiteLabel.TRAP,
        GameClass.W,
        np.where(labels == SiteLabel.TARGET, GameClass.L, open_class),
    )
    return out.astype(np.int8)


# ------------------------------------------------------------- correspondence

@dataclass(frozen=True)
class KernelComparison:
    """Induced one-site law of classify_line vs the three-symbol local rule."""

    triple: tuple[EnvSymbol, EnvSymbol, EnvSymbol]
    induced: LocalDistribution
    expected: LocalDistribution

    @property
    def equal(self) -> bool:
        return (
            self.induced.prob0 == self.expected.prob0
            and self.induced.probQ == self.expected.probQ
            and self.induced.prob1 == self.expected.prob1
        )


@dataclass(frozen=True)
class KernelReport:
    version: GameVersion
    params: Params
    comparisons: tuple[KernelComparison, ...]

    @property
    def mismatch_count(self) -> int:
        return sum(1 for c in self.comparisons if not c.equal)

    @property
    def passed(self) -> bool:
        return self.mismatch_count == 0

    def to_json_dict(self) -> dict:
        return {
            "version": self.version.value,
            "p": str(self.params.p),
            "q": str(self.params.q),
            "comparisons": len(self.comparisons),
            "mismatches": [
                "".join(str(s) for s in c.triple)
                for c in self.comparisons
                if not c.equal
            ],
            "passed": self.passed,
        }


def kernel_correspondence(version: GameVersion, params: Params) -> KernelReport:
    """Exact check that one induction step, label integrated out, is one step
    of the three-symbol local rule: for each of the 27 successor-class triples
    the induced law on {W, D, L} must equal the rule's law on {0, ?, 1}."""
    p, q, r = params.p, params.q, params.r
    label_probs = ((SiteLabel.TRAP, p), (SiteLabel.OPEN, r), (SiteLabel.TARGET, q))
    model = ModelSpec(Alphabet.ENVELOPE, version.offset, params)
    comparisons = []
    for triple in iter_words(3):
        nxt = np.array([s.value for s in triple], dtype=np.int8)
        masses = [Fraction(0), Fraction(0), Fraction(0)]
        for label, prob in label_probs:
            cls = int(classify_line(np.array([label], dtype=np.int8), nxt, version)[0])
            masses[cls] += prob
        induced = LocalDistribution(masses[0], masses[1], masses[2])
        comparisons.append(KernelComparison(triple, induced, local_rule(model, triple)))
    return KernelReport(version, params, tuple(comparisons))


# ------------------------------------------------------------- draw estimates

@dataclass(frozen=True, eq=False)
class ClassGrid:
    """Backward-induction classes of every line from the frontier down to the
    base site, keyed by the line parameter k; origins give the absolute index
    of each line's first entry under the i = x identification."""

    version: GameVersion
    horizon: int
    lines: dict[int, np.ndarray]
    origins: dict[int, int]

    def origin_class(self) -> GameClass:
        base = self.lines[0]
        return GameClass(int(base[-self.origins[0]]))


def solve_sample(
    version: GameVersion, params: Params, horizon: int, stream: SeededStream
) -> ClassGrid:
    """Classify one sampled label field down to the base site at (line 0, index 0).

    The line s steps above the base covers absolute indices
    [s*offset, s*offset + 2s]; the frontier (s = horizon) starts all-D.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    step_k = version.line_step
    lines: dict[int, np.ndarray] = {}
    origins: dict[int, int] = {}
    classes = np.full(1 + 2 * horizon, GameClass.D, dtype=np.int8)
    lines[horizon * step_k] = classes
    origins[horizon * step_k] = horizon * version.offset
    for s in range(horizon - 1, -1, -1):
        origin = s * version.offset
        labels = sample_labels(params, stream, s, origin, 1 + 2 * s)
        classes = classify_line(labels, classes, version)
        lines[s * step_k] = classes
        origins[s * step_k] = origin
    return ClassGrid(version, horizon, lines, origins)


def _batch_final_classes(
    version: GameVersion,
    params: Params,
    horizon: int,
    samples: int,
    stream: SeededStream,
) -> np.ndarray:
    """Base-site classes for ``samples`` independent label fields (row i uses
    stream.child(i)), computed line-at-a-time across all samples."""
    seeds = stream.child_seeds_u64(samples)
    classes = np.full((samples, 1 + 2 * horizon), GameClass.D, dtype=np.int8)
    for s in range(horizon - 1, -1, -1):
        u = u01_block(seeds, s, s * version.offset, 1 + 2 * s)
        classes = classify_line(_labels_from_u(u, params), classes, version)
    return classes[:, 0]


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """95% (by default) Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)  # endpoints are exact
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class DrawEstimate:
    """Fraction of sampled label fields whose base site is still unresolved (D)
    after induction from an all-D frontier at distance ``horizon``."""

    version: GameVersion
    params: Params
    horizon: int
    samples: int
    draws: int
    seed: int

    @property
    def fraction(self) -> float:
        return self.draws / self.samples

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.draws, self.samples)

    def to_json_dict(self) -> dict:
        lo, hi = self.ci
        return {
            "version": self.version.value,
            "p": str(self.params.p),
            "q": str(self.params.q),
            "horizon": self.horizon,
            "samples": self.samples,
            "draw_fraction": self.fraction,
            "ci_low": lo,
            "ci_high": hi,
            "seed": self.seed,
        }


def draw_fraction(
    version: GameVersion,
    params: Params,
    horizon: int,
    samples: int,
    stream: SeededStream,
) -> DrawEstimate:
    """Monte Carlo upper bound on the base site's draw probability.

    Sharing the label field across horizons (see sample_labels) makes the
    estimate nonincreasing in ``horizon`` sample by sample, not just in law.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    final = _batch_final_classes(version, params, horizon, samples, stream)
    draws = int((final == GameClass.D).sum())
    return DrawEstimate(version, params, horizon, samples, draws, stream.seed)
