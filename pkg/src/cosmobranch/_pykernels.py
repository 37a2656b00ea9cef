"""Pure numpy implementations of the hot kernels.

Same signatures and orderings as the compiled ``_ckernels`` module; used when
the extension is not built or ``COSMOBRANCH_PURE_PYTHON=1`` is set.

Orderings shared by both backends:

* branches are listed lexicographically, observer 1 most significant;
* count vectors (compositions of ``n`` into ``K`` parts) are listed with
  ``c_1`` descending, then ``c_2`` descending, and so on, so the first row
  is ``(n, 0, ..., 0)`` and the last ``(0, ..., 0, n)``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

BACKEND = "python"


def branch_log_probs(logp, n):
    """Log-probability of every one of the ``K**n`` branches."""
    logp = np.asarray(logp, dtype=np.float64)
    out = logp.copy()
    for _ in range(n - 1):
        out = np.add.outer(out, logp).ravel()
    return out


def compositions(n, k):
    """All count vectors summing to ``n`` with ``k`` parts, canonical order."""
    rows = np.zeros((1, 0), dtype=np.int64)
    rem = np.array([n], dtype=np.int64)
    for _ in range(k - 1):
        reps = rem + 1
        idx = np.repeat(np.arange(len(rem)), reps)
        offsets = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)
        c = rem[idx] - offsets
        rows = np.column_stack([rows[idx], c])
        rem = rem[idx] - c
    return np.column_stack([rows, rem]).astype(np.int64)


def _weighted_counts(counts, logp):
    with np.errstate(invalid="ignore"):
        terms = counts * logp[None, :]
    terms[counts == 0] = 0.0
    return terms.sum(axis=1)


def composition_table(logp, n):
    """Counts, log multinomial multiplicity and log per-branch probability."""
    logp = np.asarray(logp, dtype=np.float64)
    counts = compositions(n, len(logp))
    log_mult = gammaln(n + 1.0) - gammaln(counts + 1.0).sum(axis=1)
    return counts, log_mult, _weighted_counts(counts, logp)


def grouped_branch_sums(logp, n):
    """Brute-force branch probabilities summed per count vector.

    Returns ``(counts, sums)`` with rows in canonical composition order.
    """
    logp = np.asarray(logp, dtype=np.float64)
    k = len(logp)
    weights = np.exp(branch_log_probs(logp, n))
    # base-(n+1) code of the count vector of every branch
    digit_code = (n + 1) ** np.arange(k - 1, -1, -1, dtype=np.int64)
    code = digit_code.copy()
    for _ in range(n - 1):
        code = np.add.outer(code, digit_code).ravel()
    counts = compositions(n, k)
    order = counts @ digit_code
    uniq, inverse = np.unique(code, return_inverse=True)
    sums = np.bincount(inverse, weights=weights, minlength=len(uniq))
    pos = np.searchsorted(uniq, order)
    return counts, sums[pos]


def compensated_cumsum(x):
    """Running sums with Neumaier compensation."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    s = 0.0
    comp = 0.0
    for i, v in enumerate(x.tolist()):
        t = s + v
        if abs(s) >= abs(v):
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
        out[i] = s + comp
    return out
