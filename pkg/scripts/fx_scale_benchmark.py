"""Timing of a paper-scale run: M=30 series, T=2760 returns, default thresholds.

    python scripts/fx_scale_benchmark.py [--regimes 4] [--repeat 3]

Prints wall time per run and the segment boundaries found. With short
windows and M=30 the default delta0 = 10*M tends to over-split even i.i.d.
data; compare the ``--regimes 1`` output.
"""

import argparse
import time

import numpy as np

from covseg.segmentation import SplitConfig, segment_recursive
from covseg.synthetic import MixtureScenario, RegimeSpec, sample_scenario


def fx_scenario(regimes, m=30, total=2760, seed=7):
    rng = np.random.default_rng(seed)
    lengths = np.full(regimes, total // regimes)
    lengths[-1] += total - lengths.sum()
    specs = []
    for length in lengths:
        b = rng.normal(size=(m, m))
        cov = rng.uniform(0.5, 1.5) * (0.3 * b @ b.T / m + np.eye(m)) * 1e-4
        specs.append(RegimeSpec(int(length), np.zeros(m), cov))
    return MixtureScenario(tuple(specs), seed=seed)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--regimes", type=int, default=4)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    data, truth = sample_scenario(fx_scenario(args.regimes))
    print(f"M={data.M} T={data.T} true boundaries={truth}")
    for _ in range(args.repeat):
        t0 = time.perf_counter()
        result = segment_recursive(data, SplitConfig())
        elapsed = time.perf_counter() - t0
        print(f"{elapsed:.3f}s delta0={result.config.delta0} segments={len(result.segments)} "
              f"boundaries={result.boundaries}")


if __name__ == "__main__":
    main()
