"""Exit criteria for the package, one test per criterion.

Each test prints a PASS/FAIL line; the lines are repeated in the pytest
terminal summary. Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import datetime as dt
import json
import math
import time

import numpy as np

from covseg.cli import main
from covseg.kernels import gaussian_entropy, log_det_psd, marchenko_pastur_density, marchenko_pastur_edges
from covseg.report import series_text
from covseg.segmentation import SplitConfig, brute_force_delta, delta_spectrum, segment_recursive
from covseg.synthetic import MixtureScenario, RegimeSpec, equicorrelated, sample_scenario

FX_PAIRS = (
    "AUD/JPY BRL/JPY CAD/JPY CHF/JPY EUR/AUD EUR/BRL EUR/CAD EUR/CHF EUR/GBP EUR/JPY "
    "EUR/MXN EUR/NZD EUR/SGD EUR/USD EUR/ZAR GBP/JPY MXN/JPY NZD/JPY SGD/JPY USD/AUD "
    "USD/BRL USD/CAD USD/CHF USD/GBP USD/JPY USD/MXN USD/NZD USD/SGD USD/ZAR ZAR/JPY"
).split()


def rel_err(a, b):
    """Elementwise relative error, with unit floor on the reference scale."""
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.abs(b), 1.0)


def test_c1_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    checked = 0
    for i in range(50):
        rng = np.random.default_rng(10_000 + i)
        m = (1, 2, 5)[i % 3]
        n = (50, 200)[(i // 3) % 2]
        x = rng.normal(size=(m, n)) * rng.uniform(0.1, 10.0, size=(m, 1)) + rng.normal(size=(m, 1))
        spec = delta_spectrum(x)
        brute = [brute_force_delta(x, None, int(t)) for t in spec.offsets]
        worst = max(worst, float(rel_err(spec.values, brute).max()))
        checked += len(brute)
    elapsed = time.perf_counter() - t0
    verdict(
        "C1 oracle equivalence",
        worst <= 1e-9 and elapsed < 10.0,
        f"{checked} offsets, max rel err {worst:.2e} (tol 1e-9), {elapsed:.2f}s (limit 10s)",
    )


def test_c2_nonnegativity_and_invariance(verdict):
    t0 = time.perf_counter()
    min_delta = math.inf
    worst_affine = 0.0
    worst_perm = 0.0
    argmax_same = True
    for trial in range(100):
        rng = np.random.default_rng(20_000 + trial)
        m = int(rng.integers(1, 6))
        n = int(rng.integers(2 * (3 * m + 1) + 1, 400))
        scale = np.where(np.arange(n) < rng.integers(1, n), 1.0, rng.uniform(0.3, 3.0))
        x = rng.normal(size=(m, n)) * scale
        base = delta_spectrum(x)
        min_delta = min(min_delta, float(base.values.min()))
        while True:
            a = np.eye(m) + 0.5 * rng.normal(size=(m, m))
            if np.linalg.cond(a) < 100:
                break
        b = rng.normal(size=(m, 1)) * 10.0
        moved = delta_spectrum(a @ x + b)
        worst_affine = max(worst_affine, float(rel_err(moved.values, base.values).max()))
        argmax_same &= moved.best_offset == base.best_offset or math.isclose(
            moved.best_value, base.best_value, rel_tol=1e-7
        )
        perm = delta_spectrum(x[rng.permutation(m)])
        worst_perm = max(worst_perm, float(rel_err(perm.values, base.values).max()))
    elapsed = time.perf_counter() - t0
    ok = min_delta >= -1e-6 and worst_affine <= 1e-7 and worst_perm <= 1e-12 and argmax_same and elapsed < 30
    verdict(
        "C2 nonnegativity & invariance",
        ok,
        f"min delta {min_delta:.3g} (>= -1e-6), affine {worst_affine:.2e} (tol 1e-7), "
        f"permutation {worst_perm:.2e} (tol 1e-12), {elapsed:.2f}s (limit 30s)",
    )


def a1_scenario(seed, m=5, length=500):
    z = np.zeros(m)
    return MixtureScenario(
        (
            RegimeSpec(length, z, np.eye(m)),
            RegimeSpec(length, z, equicorrelated(m, 0.8)),
            RegimeSpec(length, z, 4.0 * np.eye(m)),
        ),
        seed=seed,
    )


def test_c3_synthetic_recovery(verdict):
    t0 = time.perf_counter()
    hits = 0
    for seed in range(100):
        data, truth = sample_scenario(a1_scenario(seed))
        result = segment_recursive(data, SplitConfig(delta0=50.0, min_margin_factor=3))
        b = result.boundaries
        hits += len(result.segments) == 3 and all(abs(x - y) <= 20 for x, y in zip(b, truth))
    elapsed = time.perf_counter() - t0
    verdict(
        "C3 synthetic recovery (A1)",
        hits >= 95 and elapsed < 60,
        f"{hits}/100 runs with 3 segments within +-20 (need >= 95), {elapsed:.2f}s (limit 60s)",
    )


def test_c4_false_split_control(verdict):
    t0 = time.perf_counter()
    hits = 0
    for seed in range(100):
        data, _ = sample_scenario(MixtureScenario((RegimeSpec(600, np.zeros(3), np.eye(3)),), seed=seed))
        hits += len(segment_recursive(data, SplitConfig(delta0=30.0)).segments) == 1
    elapsed = time.perf_counter() - t0
    verdict(
        "C4 false-split control",
        hits >= 95 and elapsed < 20,
        f"{hits}/100 single-segment runs (need >= 95), {elapsed:.2f}s (limit 20s)",
    )


def _mp_mass(ratio, T=1000, points=20001):
    M = int(round(ratio * T))
    lo, hi = marchenko_pastur_edges(M, T)
    # midpoint rule: never evaluates the lam = 0 edge where M = T
    phi = (np.arange(points) + 0.5) * (math.pi / points)
    lam = lo + 0.5 * (hi - lo) * (1.0 - np.cos(phi))
    jac = 0.5 * (hi - lo) * np.sin(phi)
    return float(np.sum(marchenko_pastur_density(lam, M, T) * jac) * (math.pi / points))


def test_c5_closed_forms(verdict):
    h = gaussian_entropy(np.eye(1))
    masses = {r: _mp_mass(r) for r in (0.1, 0.5, 1.0)}
    ld = log_det_psd(np.array([[2.0, 1.0], [1.0, 2.0]]))
    ok = (
        abs(h - 1.418939) <= 1e-6
        and all(abs(v - 1.0) <= 1e-4 for v in masses.values())
        and abs(ld - math.log(3.0)) <= 1e-12
    )
    verdict(
        "C5 closed-form checks",
        ok,
        f"H(I_1)={h:.7f}, MP masses "
        + ", ".join(f"{k}:{v:.6f}" for k, v in masses.items())
        + f", logdet={ld:.15f} vs ln3={math.log(3.0):.15f}",
    )


def _fx_shaped(tmp_path):
    """M=30, T=2760 dated rate file with the FX pair labels and four covariance regimes."""
    m = 30
    rng = np.random.default_rng(2001)
    regimes = []
    for length, scale in ((700, 0.5), (690, 1.0), (680, 0.7), (690, 1.4)):
        b = rng.normal(size=(m, m))
        cov = scale * (0.3 * b @ b.T / m + np.eye(m))
        regimes.append(RegimeSpec(length, np.zeros(m), cov * 1e-4))
    data, truth = sample_scenario(MixtureScenario(tuple(regimes), seed=7, labels=tuple(FX_PAIRS)))
    day = dt.date(2001, 1, 3)
    stamps = []
    while len(stamps) < data.T + 1:
        if day.weekday() < 5:
            stamps.append(day.isoformat())
        day += dt.timedelta(days=1)
    text = series_text(data).splitlines()
    rows = [text[0].replace("t,", "date,", 1)]
    for stamp, line in zip(stamps, text[1:]):
        rows.append(stamp + line[line.index(","):])
    path = tmp_path / "fx_shaped.csv"
    path.write_text("\n".join(rows) + "\n")
    return path, truth


def test_c6_paper_scale_performance(verdict, tmp_path):
    path, _ = _fx_shaped(tmp_path)
    out = tmp_path / "report"
    t0 = time.perf_counter()
    code = main(["segment", str(path), "--out-dir", str(out)])
    elapsed = time.perf_counter() - t0
    meta = json.loads((out / "segments.json").read_text())["metadata"] if code == 0 else {}
    ok = code == 0 and elapsed < 10.0 and meta.get("M") == 30 and meta.get("T") == 2760
    ok = ok and meta.get("delta0") == 300.0 and meta.get("t_min") == 91
    verdict(
        "C6 paper-scale performance",
        ok,
        f"M={meta.get('M')} T={meta.get('T')} delta0={meta.get('delta0')} t_min={meta.get('t_min')}, "
        f"{elapsed:.2f}s end to end (limit 10s)",
    )


def test_c7_parameter_fidelity(verdict, tmp_path):
    path, _ = _fx_shaped(tmp_path)
    out = tmp_path / "report"
    code = main(["segment", str(path), "--out-dir", str(out)])
    header = [ln for ln in (out / "segments.csv").read_text().splitlines() if ln.startswith("#")]
    report = json.loads((out / "segments.json").read_text())
    segs = report["segments"]
    ok = (
        code == 0
        and "# delta0=300.0" in header
        and "# t_min=91" in header
        and "# t_max=n-91" in header
        and segs[0]["k"] == 1
        and segs[0]["start"] == "2001-01-04"
        and segs[-1]["end_column"] == 2760
        and report["labels"] == FX_PAIRS
    )
    verdict(
        "C7 paper parameters (dates need the original data)",
        ok,
        f"{len(segs)} segments, header {header[4:7]}, first {segs[0]['start']}..{segs[0]['end']}",
    )
