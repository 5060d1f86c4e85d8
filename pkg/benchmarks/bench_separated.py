"""Timing comparison for the two separated-set kernel backends.

Runs the greedy orbit-separation scan on synthetic clouds shaped like
the entropy estimator's real workload ((n, T, d) samples with a seam
lift and wrapped coordinates), once per available backend, and checks
that both select the same index set before reporting times.

Usage: python benchmarks/bench_separated.py [--sizes 512,1024,2048]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from epflow.kernels import available_backends, greedy_separated


def _workload(n: int, t_steps: int, dim: int, rng: np.random.Generator):
    # tight cloud spread over a short orbit so the scan rejects often:
    # the worst case for the kernel is many near-misses, not early exits
    base = rng.random((n, 1, dim))
    drift = 0.03 * rng.standard_normal((n, t_steps, dim)).cumsum(axis=1)
    samples = (base + drift) % 1.0
    lifted = samples.copy()
    lifted[..., -1] += 1.0  # seam representative one period up
    periods = np.array([1.0] * (dim - 1) + [0.0])
    return samples, lifted, periods


def _time_backend(backend: str, samples, lifted, periods, eps: float, repeats: int):
    kept = greedy_separated(
        samples, lifted=lifted, periods=periods, eps=eps, backend=backend
    )
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        greedy_separated(
            samples, lifted=lifted, periods=periods, eps=eps, backend=backend
        )
        best = min(best, time.perf_counter() - t0)
    return kept, best


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="512,1024,2048",
                    help="comma list of orbit counts n")
    ap.add_argument("--t-steps", type=int, default=11,
                    help="samples per orbit (default matches t=10 runs)")
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--eps", type=float, default=0.3,
                    help="separation radius; 0.3 keeps ~1 in 8 on the "
                         "default cloud, mixing accepts and rejects")
    ap.add_argument("--repeats", type=int, default=3)
    ns = ap.parse_args()

    sizes = [int(s) for s in ns.sizes.split(",") if s.strip()]
    backends = available_backends()
    rng = np.random.default_rng(0)

    print(f"backends: {', '.join(backends)}")
    print(f"{'n':>6}  {'kept':>6}  " + "  ".join(f"{b:>12}" for b in backends)
          + ("  speedup" if len(backends) == 2 else ""))
    for n in sizes:
        samples, lifted, periods = _workload(n, ns.t_steps, ns.dim, rng)
        results = {}
        kept_sets = {}
        for b in backends:
            kept, secs = _time_backend(b, samples, lifted, periods, ns.eps,
                                       ns.repeats)
            results[b] = secs
            kept_sets[b] = kept
        first = kept_sets[backends[0]]
        for b in backends[1:]:
            if not np.array_equal(first, kept_sets[b]):
                print(f"n={n}: backends disagree, aborting")
                return 1
        line = f"{n:>6}  {len(first):>6}  " + "  ".join(
            f"{results[b]:>11.4f}s" for b in backends)
        if len(backends) == 2:
            line += f"  {results['numpy'] / results['compiled']:>6.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
