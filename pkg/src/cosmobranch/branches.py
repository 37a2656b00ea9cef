"""Branch assignments of N replicated observers and their probabilities.

A branch assigns one measurement outcome to each of N observers. All
observers share one :class:`~cosmobranch.quantum.ObserverState`, so a
branch's probability is the product of the Born weights of its outcomes and
depends only on how many times each outcome occurs. Probabilities are kept
as natural logs throughout; linear values appear only at the API edge.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from . import _kernels
from .errors import EnumerationTooLarge, InvalidWeight, TableTooLarge, ValidationError
from .quantum import born_probabilities, sample_outcome, sample_outcomes

ENUMERATION_CAP = 10**6
TABLE_CAP = 10**7

# classifier thresholds
TAIL_TOL = 1e-9
LOG_FLOOR = -700.0
DIVERGE_RATIO = 0.97
CONVERGE_RATIO = 0.9
MIN_CUTOFF = 10


@dataclass(frozen=True)
class BranchAssignment:
    """Outcomes ``f(1), ..., f(N)``, each in ``1..K``."""

    outcomes: tuple

    def __post_init__(self):
        if len(self.outcomes) < 1:
            raise ValidationError("a branch needs at least one observer")
        if any(int(o) < 1 for o in self.outcomes):
            raise ValidationError("outcomes are 1-based")

    @property
    def N(self) -> int:
        return len(self.outcomes)

    def counts(self, K):
        return tuple(np.bincount(np.asarray(self.outcomes) - 1, minlength=K).tolist())


@dataclass(frozen=True)
class BranchWeight:
    """Natural-log probability of a branch; ``-inf`` marks probability zero."""

    log_probability: float
    assignment: object

    @property
    def probability(self) -> float:
        return math.exp(self.log_probability)

    @property
    def is_zero(self) -> bool:
        return self.log_probability == -math.inf

    @property
    def log10_probability(self) -> float:
        return self.log_probability / math.log(10)


def _logp(state):
    p = born_probabilities(state).probabilities
    with np.errstate(divide="ignore"):
        return np.log(p)


def _branch_count(K, N):
    return K**N


def enumerate_branches(K, N, cap=ENUMERATION_CAP):
    """All ``K**N`` assignments in lexicographic order."""
    if K < 1 or N < 1:
        raise ValidationError("K and N must be >= 1")
    if _branch_count(K, N) > cap:
        raise EnumerationTooLarge(f"K**N = {K}**{N} exceeds the cap {cap}")
    return [BranchAssignment(f) for f in itertools.product(range(1, K + 1), repeat=N)]


def branch_log_probability(state, assignment, phases=None):
    """``sum_j ln p_{f(j)}``, accumulated exactly with :func:`math.fsum`.

    ``phases`` (one per observer) is accepted for completeness and ignored:
    branch probabilities depend on amplitude moduli only.
    """
    if not isinstance(assignment, BranchAssignment):
        assignment = BranchAssignment(tuple(assignment))
    if phases is not None and len(phases) != assignment.N:
        raise ValidationError("need one phase per observer")
    if max(assignment.outcomes) > state.K:
        raise ValidationError(f"outcome exceeds K = {state.K}")
    logp = _logp(state)
    terms = [logp[o - 1] for o in assignment.outcomes]
    if any(t == -math.inf for t in terms):
        return BranchWeight(-math.inf, assignment)
    return BranchWeight(math.fsum(terms), assignment)


def brute_force_log_weights(state, N, cap=ENUMERATION_CAP):
    """Log-probabilities of all branches, lexicographic order."""
    if _branch_count(state.K, N) > cap:
        raise EnumerationTooLarge(f"K**N = {state.K}**{N} exceeds the cap {cap}")
    return _kernels.branch_log_probs(_logp(state), N)


def brute_force_grouped(state, N, cap=ENUMERATION_CAP):
    """Brute-force branch probabilities summed per count vector.

    Returns ``(counts, sums)`` with rows ordered like :func:`compress_branches`.
    """
    if _branch_count(state.K, N) > cap:
        raise EnumerationTooLarge(f"K**N = {state.K}**{N} exceeds the cap {cap}")
    if (N + 1) ** state.K > TABLE_CAP:
        raise TableTooLarge("count-vector bucket space too large for brute-force grouping")
    return _kernels.grouped_branch_sums(_logp(state), N)


@dataclass(frozen=True)
class CompressedEnsemble:
    """Branches grouped by outcome-count vector.

    Row ``r`` stands for the ``exp(log_multiplicity[r])`` branches whose
    outcome counts are ``counts[r]``, each of probability
    ``exp(log_probability[r])``.
    """

    K: int
    N: int
    counts: np.ndarray
    log_multiplicity: np.ndarray
    log_probability: np.ndarray

    def __post_init__(self):
        for arr in (self.counts, self.log_multiplicity, self.log_probability):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.counts)

    @property
    def log_group_probability(self):
        with np.errstate(invalid="ignore"):
            out = self.log_multiplicity + self.log_probability
        return np.where(np.isneginf(self.log_probability), -np.inf, out)

    def group_probabilities(self):
        return np.exp(self.log_group_probability)

    def total_probability(self) -> float:
        return math.fsum(self.group_probabilities())

    def entry(self, counts):
        """``(multiplicity, group probability)`` for a given count vector."""
        counts = np.asarray(counts)
        hit = np.nonzero(np.all(self.counts == counts, axis=1))[0]
        if len(hit) == 0:
            raise KeyError(tuple(counts.tolist()))
        r = hit[0]
        return math.exp(self.log_multiplicity[r]), float(self.group_probabilities()[r])

    def rows(self):
        for c, lm, lp in zip(self.counts, self.log_multiplicity, self.log_probability):
            yield tuple(int(x) for x in c), float(lm), float(lp)


def compress_branches(state, N, cap=TABLE_CAP):
    """Multinomial compression of the ``K**N`` branches."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    size = math.comb(N + state.K - 1, state.K - 1)
    if size > cap:
        raise TableTooLarge(f"table of {size} count vectors exceeds the cap {cap}")
    counts, log_mult, log_prob = _kernels.composition_table(_logp(state), N)
    return CompressedEnsemble(state.K, N, counts, log_mult, log_prob)


def branch_probability_sum(state, N, method="auto", cap=ENUMERATION_CAP):
    """Total probability over all branches of N observers; should be 1.

    ``method`` is ``"brute"``, ``"compressed"`` or ``"auto"`` (brute force
    within the enumeration cap, compressed beyond it).
    """
    if method not in ("auto", "brute", "compressed"):
        raise ValidationError(f"unknown method {method!r}")
    if method == "auto":
        method = "brute" if _branch_count(state.K, N) <= cap else "compressed"
    if method == "brute":
        return math.fsum(np.exp(brute_force_log_weights(state, N, cap)))
    return compress_branches(state, N).total_probability()


def max_branch_probability(state, N):
    """The most probable branch: every observer gets the likeliest outcome.

    Ties go to the lowest outcome index.
    """
    if N < 1:
        raise ValidationError("N must be >= 1")
    p = born_probabilities(state).probabilities
    k = int(np.argmax(p))
    return BranchWeight(N * math.log(p[k]), BranchAssignment((k + 1,) * N))


def collapse_decay_curve(state, N_list):
    """Rows ``(N, log10 of the largest branch probability)``."""
    N_list = [int(n) for n in N_list]
    if not N_list:
        raise ValidationError("N_list must be nonempty")
    if any(b <= a for a, b in zip(N_list, N_list[1:])) or N_list[0] < 1:
        raise ValidationError("N_list must be positive and strictly increasing")
    slope = math.log10(float(np.max(born_probabilities(state).probabilities)))
    return [(n, n * slope) for n in N_list]


def simulate_finite_collapse(state, N, rng, mode="correlated"):
    """Outcomes of N observers measured at the same instant.

    ``correlated``: a single Born draw is shared by all observers, so every
    post-measurement state is the same. ``independent``: N separate draws.
    """
    if N < 1:
        raise ValidationError("N must be >= 1")
    if mode == "correlated":
        return np.full(N, sample_outcome(state, rng), dtype=np.int64)
    if mode == "independent":
        return sample_outcomes(state, rng, N).astype(np.int64)
    raise ValidationError(f"mode must be 'correlated' or 'independent', got {mode!r}")


# --- infinite products -----------------------------------------------------


class Verdict(str, Enum):
    CONVERGES_NONZERO = "ConvergesNonzero"
    DIVERGES_TO_ZERO = "DivergesToZero"
    INDETERMINATE_AT_CUTOFF = "IndeterminateAtCutoff"


@dataclass(frozen=True)
class WeightSequence:
    """Factors ``x_j = 1 - deficit(j)`` of an infinite product, ``j >= 1``.

    Sequences are described by their deficit so factors close to 1 keep full
    relative precision.
    """

    name: str
    deficit: Callable

    def values(self, J):
        return 1.0 - self.deficit(np.arange(1, J + 1, dtype=np.float64))


def constant_sequence(x):
    x = float(x)
    return WeightSequence(f"constant({x!r})", lambda j: np.full_like(j, 1.0 - x))


def inverse_square_sequence():
    """``x_j = 1 - 1/(j+1)^2``; product telescopes to ``(J+2) / (2(J+1))``."""
    return WeightSequence("1-1/(j+1)^2", lambda j: 1.0 / (j + 1.0) ** 2)


def harmonic_sequence():
    """``x_j = 1 - 1/(j+1)``; product telescopes to ``1 / (J+1)``."""
    return WeightSequence("1-1/(j+1)", lambda j: 1.0 / (j + 1.0))


def reciprocal_sequence():
    """``x_j = 1/(j+1)``, factors tending to 0 (an unbounded outcome count)."""
    return WeightSequence("1/(j+1)", lambda j: 1.0 - 1.0 / (j + 1.0))


def uniform_symmetric_sequence(state):
    """Constant factors ``max_k p_k``: the likeliest branch, observer by observer."""
    pmax = float(np.max(born_probabilities(state).probabilities))
    return WeightSequence(f"uniform_symmetric({pmax!r})", lambda j: np.full_like(j, 1.0 - pmax))


@dataclass(frozen=True)
class ProductAnalysis:
    verdict: Verdict
    partial_log_products: np.ndarray
    tail_statistic: float
    cutoff: int
    block_ratio: float

    @property
    def final_partial_log_product(self) -> float:
        return float(self.partial_log_products[-1])

    @property
    def partial_product(self) -> float:
        return math.exp(self.final_partial_log_product)

    def to_record(self):
        return {
            "verdict": self.verdict.value,
            "cutoff": self.cutoff,
            "tail_statistic": self.tail_statistic,
            "final_partial_log_product": self.final_partial_log_product,
        }


def infinite_product_classify(sequence, cutoff_J):
    """Judge ``prod_j x_j`` from its first ``cutoff_J`` factors.

    The product of factors in (0, 1] has a nonzero limit iff the deficits
    ``d_j = 1 - x_j`` are summable. Summability is judged by comparing the
    deficit sums over the last two dyadic blocks, ``(J/4, J/2]`` and
    ``(J/2, J]`` (Cauchy condensation): a block ratio of at least 0.97 means
    the sum is still growing linearly in ``log J`` or faster, a ratio of at
    most 0.9 means the blocks shrink geometrically. Between the two, or when
    neither shortcut applies, the verdict is ``IndeterminateAtCutoff``.

    Shortcuts: a partial log product below -700 is ``DivergesToZero``; a
    last-half deficit sum below 1e-9 is ``ConvergesNonzero``.
    """
    J = int(cutoff_J)
    if J < MIN_CUTOFF:
        raise ValidationError(f"cutoff_J must be >= {MIN_CUTOFF}")
    d = np.asarray(sequence.deficit(np.arange(1, J + 1, dtype=np.float64)), dtype=np.float64)
    if not np.all(np.isfinite(d)) or np.any(d < 0) or np.any(d >= 1):
        bad = int(np.argmax(~np.isfinite(d) | (d < 0) | (d >= 1))) + 1
        raise InvalidWeight(f"factor x_{bad} = {1 - d[bad - 1]!r} is outside (0, 1]")
    partial = _kernels.compensated_cumsum(np.log1p(-d))
    tail_statistic = math.fsum(d)
    late = math.fsum(d[J // 2:])
    early = math.fsum(d[J // 4:J // 2])
    ratio = late / early if early > 0 else (math.inf if late > 0 else 0.0)

    if partial[-1] < LOG_FLOOR:
        verdict = Verdict.DIVERGES_TO_ZERO
    elif late < TAIL_TOL:
        verdict = Verdict.CONVERGES_NONZERO
    elif ratio >= DIVERGE_RATIO:
        verdict = Verdict.DIVERGES_TO_ZERO
    elif ratio <= CONVERGE_RATIO:
        verdict = Verdict.CONVERGES_NONZERO
    else:
        verdict = Verdict.INDETERMINATE_AT_CUTOFF
    partial.setflags(write=False)
    return ProductAnalysis(verdict, partial, tail_statistic, J, ratio)


def sequence_from_spec(spec, state=None):
    """Build a :class:`WeightSequence` from a config mapping.

    ``{"kind": "constant", "value": x}``, ``{"kind": "inverse_square"}``,
    ``{"kind": "harmonic"}``, ``{"kind": "reciprocal"}`` or
    ``{"kind": "uniform_symmetric"}`` (needs ``state``).
    """
    kind = spec.get("kind")
    if kind == "constant":
        if "value" not in spec:
            raise ValidationError("constant sequence needs 'value'")
        return constant_sequence(spec["value"])
    if kind == "inverse_square":
        return inverse_square_sequence()
    if kind == "harmonic":
        return harmonic_sequence()
    if kind == "reciprocal":
        return reciprocal_sequence()
    if kind == "uniform_symmetric":
        if state is None:
            raise ValidationError("uniform_symmetric sequence needs a state")
        return uniform_symmetric_sequence(state)
    raise ValidationError(f"unknown sequence kind {kind!r}")


SEQUENCE_KINDS = ("constant", "inverse_square", "harmonic", "reciprocal", "uniform_symmetric")
