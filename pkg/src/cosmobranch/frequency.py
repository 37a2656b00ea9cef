"""Relative-frequency statistics over N replicated observers.

On the N-fold product of one observer state the frequency operator for
outcome k has eigenvalues m/N, m = 0..N, and the weight of eigenvalue m is
the binomial probability of m hits with success probability
``p = |alpha_k|^2``. Everything here works with that spectral measure; the
``K**N``-dimensional operator itself is never formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import OutcomeOutOfRange, ValidationError
from .quantum import born_probabilities, sample_outcomes

EXACT_BINOMIAL_MAX_N = 60


@dataclass(frozen=True)
class FrequencySpectrum:
    eigenvalues: np.ndarray
    log_weights: np.ndarray
    probability: float

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        self.log_weights.setflags(write=False)

    @property
    def N(self) -> int:
        return len(self.eigenvalues) - 1

    @property
    def weights(self):
        return np.exp(self.log_weights)

    def mean(self) -> float:
        return math.fsum(self.eigenvalues * self.weights)

    def central_moment(self, order=2) -> float:
        return math.fsum((self.eigenvalues - self.probability) ** order * self.weights)

    def mass_outside(self, lo, hi) -> float:
        outside = (self.eigenvalues < lo) | (self.eigenvalues > hi)
        return math.fsum(self.weights[outside])


def _outcome_probability(state, k):
    if not 1 <= k <= state.K:
        raise OutcomeOutOfRange(f"outcome {k} outside 1..{state.K}")
    return born_probabilities(state)[k]


def _log_binomial_coefficients(N):
    m = np.arange(N + 1)
    if N <= EXACT_BINOMIAL_MAX_N:
        return np.array([math.log(math.comb(N, i)) for i in range(N + 1)])
    return gammaln(N + 1.0) - gammaln(m + 1.0) - gammaln(N - m + 1.0)


def frequency_spectrum(state, k, N):
    """Eigenvalues ``m/N`` and their log binomial weights for outcome ``k``."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    p = _outcome_probability(state, k)
    m = np.arange(N + 1, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        hit = np.where(m > 0, m * math.log(p) if p > 0 else -np.inf, 0.0)
        miss = np.where(N - m > 0, (N - m) * math.log1p(-p) if p < 1 else -np.inf, 0.0)
    log_w = _log_binomial_coefficients(N) + hit + miss
    return FrequencySpectrum(m / N, log_w, p)


def frequency_expectation(state, k, N):
    """Mean relative frequency of outcome ``k``: the Born probability, for every N."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    return _outcome_probability(state, k)


def frequency_variance(state, k, N):
    if N < 1:
        raise ValidationError("N must be >= 1")
    p = _outcome_probability(state, k)
    return p * (1.0 - p) / N


def born_convergence_table(state, N_list, trials, rng, k=1, chunk=2_000_000):
    """Sampled vs analytic variance of the outcome-``k`` frequency.

    Each row uses its own child stream of ``rng``. Returns rows
    ``(N, analytic_var, empirical_var)``.
    """
    N_list = [int(n) for n in N_list]
    if not N_list or any(b <= a for a, b in zip(N_list, N_list[1:])) or N_list[0] < 1:
        raise ValidationError("N_list must be nonempty, positive and strictly increasing")
    if trials < 100:
        raise ValidationError("trials must be >= 100")
    _outcome_probability(state, k)
    rows = []
    for N, child in zip(N_list, rng.spawn(len(N_list))):
        freq = np.empty(trials)
        per_block = max(1, chunk // N)
        for start in range(0, trials, per_block):
            stop = min(trials, start + per_block)
            draws = sample_outcomes(state, child, (stop - start, N))
            freq[start:stop] = np.count_nonzero(draws == k, axis=1) / N
        rows.append((N, frequency_variance(state, k, N), float(np.var(freq, ddof=1))))
    return rows
