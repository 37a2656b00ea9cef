import math

import numpy as np
import pytest

from cosmobranch import _kernels
from cosmobranch.quantum import make_state


@pytest.fixture(params=[b.BACKEND for b in _kernels.available_backends()])
def backend(request):
    return {b.BACKEND: b for b in _kernels.available_backends()}[request.param]


@pytest.fixture
def half():
    return make_state([1, 1])


@pytest.fixture
def three_four():
    return make_state([3, 4j])


def random_states(rng, K, count):
    out = []
    for _ in range(count):
        z = rng.normal(size=K) + 1j * rng.normal(size=K)
        out.append(make_state(z))
    return out


def brute_force_oracle(p, N):
    """Plain-Python enumeration: {counts: summed probability}, and total."""
    import itertools

    groups = {}
    for f in itertools.product(range(len(p)), repeat=N):
        w = math.prod(p[i] for i in f)
        key = tuple(f.count(k) for k in range(len(p)))
        groups[key] = groups.get(key, 0.0) + w
    return groups, math.fsum(groups.values())
