"""Time the compiled and pure-Python kernel backends on the same inputs.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per (kernel, size) with the best time for each backend and
the speed-up. Outputs of both backends are checked for agreement first.
"""

import argparse
import timeit

import numpy as np

from cosmobranch import _kernels
from cosmobranch.quantum import born_probabilities, make_state


def cases():
    logp3 = np.log(born_probabilities(make_state([1, 2j, 3])).probabilities)
    logp2 = np.log(born_probabilities(make_state([3, 4j])).probabilities)
    logp5 = np.log(born_probabilities(make_state([1, 2, 3, 4, 5])).probabilities)
    deficits = np.log1p(-1.0 / (np.arange(1, 1_000_001) + 1.0) ** 2)
    return [
        ("branch_log_probs", "K=3 N=12", lambda k: k.branch_log_probs(logp3, 12)),
        ("grouped_branch_sums", "K=3 N=12", lambda k: k.grouped_branch_sums(logp3, 12)),
        ("composition_table", "K=5 N=60", lambda k: k.composition_table(logp5, 60)),
        ("composition_table", "K=2 N=10000", lambda k: k.composition_table(logp2, 10_000)),
        ("compensated_cumsum", "n=1e6", lambda k: k.compensated_cumsum(deficits)),
    ]


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    # rounding differs between backends: compensated vs plain bincount sums,
    # and C lgamma vs scipy gammaln (ulp of lgamma(N) ~ 1e-11 at N = 1e4)
    return np.allclose(a, b, rtol=1e-12, atol=1e-9, equal_nan=True)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    backends = {b.BACKEND: b for b in _kernels.available_backends()}
    if "cython" not in backends:
        print("compiled backend not built; only the pure-Python timings are shown")
    print(f"{'kernel':<22}{'size':<14}" + "".join(f"{name:>12}" for name in backends) + f"{'speed-up':>10}")
    for name, size, call in cases():
        results = {b: call(mod) for b, mod in backends.items()}
        if "cython" in results and not _same(results["cython"], results["python"]):
            raise SystemExit(f"{name} {size}: backends disagree")
        best = {
            b: min(timeit.repeat(lambda: call(mod), number=1, repeat=args.repeat))
            for b, mod in backends.items()
        }
        line = f"{name:<22}{size:<14}" + "".join(f"{best[b] * 1e3:>10.2f}ms" for b in backends)
        if "cython" in best:
            line += f"{best['python'] / best['cython']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
