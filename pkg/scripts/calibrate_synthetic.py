"""Monte-Carlo calibration of the synthetic recovery thresholds.

Runs the three seeded experiments used by the test suite and prints the
success counts:

  a1      M=5, regimes I / equicorrelated 0.8 / 4I, 500 columns each, delta0=50
  null    M=3, T=600 single regime, delta0=30
  twoblk  M=3, 500 + 500 columns, I then 4I, best split of the root spectrum

    python scripts/calibrate_synthetic.py --runs 100
"""

import argparse
import time

import numpy as np

from covseg.segmentation import SplitConfig, brute_force_delta, delta_spectrum, segment_recursive
from covseg.synthetic import MixtureScenario, RegimeSpec, equicorrelated, sample_scenario


def a1_scenario(seed, m=5, length=500):
    zero = np.zeros(m)
    return MixtureScenario(
        regimes=(
            RegimeSpec(length, zero, np.eye(m)),
            RegimeSpec(length, zero, equicorrelated(m, 0.8)),
            RegimeSpec(length, zero, 4.0 * np.eye(m)),
        ),
        seed=seed,
    )


def null_scenario(seed, m=3, length=600):
    return MixtureScenario(regimes=(RegimeSpec(length, np.zeros(m), np.eye(m)),), seed=seed)


def two_block_scenario(seed, m=3, length=500):
    zero = np.zeros(m)
    return MixtureScenario(
        regimes=(RegimeSpec(length, zero, np.eye(m)), RegimeSpec(length, zero, 4.0 * np.eye(m))), seed=seed
    )


def a1_ok(seed, tol=20):
    data, truth = sample_scenario(a1_scenario(seed))
    result = segment_recursive(data, SplitConfig(delta0=50.0))
    b = result.boundaries
    return len(b) == len(truth) and all(abs(x - y) <= tol for x, y in zip(b, truth)), b


def null_ok(seed):
    data, _ = sample_scenario(null_scenario(seed))
    result = segment_recursive(data, SplitConfig(delta0=30.0))
    return len(result.segments) == 1, result.boundaries


def two_block_ok(seed, tol=10):
    data, truth = sample_scenario(two_block_scenario(seed))
    spec = delta_spectrum(data, None, SplitConfig())
    return abs(spec.best_offset - truth[0]) <= tol, spec.best_offset


def oracle_check(seed):
    """Root split of A1 recomputed with the brute-force likelihood oracle."""
    data, truth = sample_scenario(a1_scenario(seed))
    spec = delta_spectrum(data, None, SplitConfig())
    step = max(1, len(spec.offsets) // 50)
    sub = spec.offsets[::step]
    brute = np.array([brute_force_delta(data, None, int(t)) for t in sub])
    return float(np.max(np.abs(brute - spec.values[::step]))), int(sub[np.argmax(brute)]), spec.best_offset


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--runs", type=int, default=100)
    args = parser.parse_args()
    for name, fn in (("a1", a1_ok), ("null", null_ok), ("twoblk", two_block_ok)):
        t0 = time.perf_counter()
        hits = 0
        misses = []
        for seed in range(args.runs):
            ok, detail = fn(seed)
            hits += ok
            if not ok:
                misses.append((seed, detail))
        print(f"{name}: {hits}/{args.runs} in {time.perf_counter() - t0:.2f}s; misses={misses[:5]}")
    err, brute_best, fast_best = oracle_check(0)
    print(f"oracle root split (seed 0): max |diff|={err:.3g}, brute argmax={brute_best}, fast argmax={fast_best}")


if __name__ == "__main__":
    main()
