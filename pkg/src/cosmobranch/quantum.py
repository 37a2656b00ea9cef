"""Pure observer states over a fixed K-outcome measurement basis.

Outcome indices are 1-based everywhere in the public API.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    DimensionTooSmall,
    ImpossibleOutcome,
    OutcomeOutOfRange,
    ValidationError,
    ZeroVector,
)

NORM_TOL = 1e-12
RESCALE_WARN = 1e-9
DEFAULT_INDISTINGUISHABLE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ObserverState:
    """Unit-norm amplitude vector shared by every replicated observer.

    Attributes
    ----------
    amplitudes : ndarray of complex, read-only
    rescaled : bool
        True when :func:`make_state` had to change the norm by more than 1e-9.
    """

    amplitudes: np.ndarray
    rescaled: bool = False

    def __post_init__(self):
        self.amplitudes.setflags(write=False)

    @property
    def K(self) -> int:
        return len(self.amplitudes)

    def __eq__(self, other):
        if not isinstance(other, ObserverState):
            return NotImplemented
        return np.array_equal(self.amplitudes, other.amplitudes)

    def __hash__(self):
        return hash(self.amplitudes.tobytes())

    def __repr__(self):
        return f"ObserverState({np.array2string(self.amplitudes, precision=6)})"


@dataclass(frozen=True)
class OutcomeDistribution:
    probabilities: np.ndarray

    def __post_init__(self):
        self.probabilities.setflags(write=False)

    def __getitem__(self, k):
        """Probability of the 1-based outcome ``k``."""
        return float(self.probabilities[k - 1])


def make_state(amplitudes):
    """Normalise ``amplitudes`` into an :class:`ObserverState`.

    Accepts complex numbers or ``[re, im]`` pairs.
    """
    amps = parse_amplitudes(amplitudes)
    if amps.ndim != 1 or len(amps) < 2:
        raise DimensionTooSmall(f"need at least 2 amplitudes, got {amps.size}")
    if not np.all(np.isfinite(amps)):
        raise ValidationError("amplitudes must be finite")
    norm = np.sqrt(np.sum(np.abs(amps) ** 2))
    if norm == 0:
        raise ZeroVector("all amplitudes are zero")
    return ObserverState(amps / norm, rescaled=bool(abs(norm - 1.0) > RESCALE_WARN))


def parse_amplitudes(raw):
    """Complex array from a list of complex numbers or of ``[re, im]`` pairs."""
    if isinstance(raw, ObserverState):
        return raw.amplitudes.copy()
    items = list(raw)
    if items and all(isinstance(x, (list, tuple)) for x in items):
        if any(len(x) != 2 for x in items):
            raise ValidationError("state literal entries must be [re, im] pairs")
        return np.array([complex(float(re), float(im)) for re, im in items])
    return np.asarray(items, dtype=complex)


def state_literal(state):
    """Inverse of :func:`parse_amplitudes`: list of ``[re, im]`` pairs."""
    return [[float(z.real), float(z.imag)] for z in state.amplitudes]


def born_probabilities(state):
    p = np.abs(state.amplitudes) ** 2
    return OutcomeDistribution(p)


def _check_outcome(state, k):
    if not 1 <= k <= state.K:
        raise OutcomeOutOfRange(f"outcome {k} outside 1..{state.K}")


def _cdf(p):
    cdf = np.cumsum(p) / p.sum()
    # outcomes past the last positive weight must be unreachable
    cdf[np.nonzero(p)[0][-1]:] = 1.0
    return cdf


def sample_outcomes(state, rng, size=None):
    """Draw 1-based outcomes by CDF inversion on ``[c_{k-1}, c_k)``.

    ``rng`` is a :class:`numpy.random.Generator`; see :mod:`cosmobranch.rng`.
    """
    cdf = _cdf(born_probabilities(state).probabilities)
    u = rng.random(size)
    return np.searchsorted(cdf, u, side="right") + 1


def sample_outcome(state, rng):
    return int(sample_outcomes(state, rng))


def collapse(state, k):
    """Post-measurement basis state ``e_k``; the amplitude's phase is dropped."""
    _check_outcome(state, k)
    if born_probabilities(state)[k] == 0:
        raise ImpossibleOutcome(f"outcome {k} has zero probability")
    amps = np.zeros(state.K, dtype=complex)
    amps[k - 1] = 1.0
    return ObserverState(amps)


def fidelity(state_a, state_b):
    if state_a.K != state_b.K:
        raise DimensionMismatch(f"dimensions differ: {state_a.K} vs {state_b.K}")
    return float(abs(np.vdot(state_a.amplitudes, state_b.amplitudes)) ** 2)


def indistinguishable(state_a, state_b, tolerance=DEFAULT_INDISTINGUISHABLE_TOL):
    """True iff the infidelity ``1 - |<a|b>|^2`` is at most ``tolerance``."""
    return 1.0 - fidelity(state_a, state_b) <= tolerance
