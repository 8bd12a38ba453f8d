"""Acceptance suite: one test per criterion, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines live.  Heavy artifacts (the n=500 sketches, the determinant runs)
are built once in module fixtures and shared across criteria.
"""

import math
import time
from types import SimpleNamespace

import numpy as np
import pytest
import scipy.stats

from _support import complete_graph, random_connected_graph, random_dd_matrix
from rsketch import (
    DetConfig,
    GraphGeneratorSpec,
    build_sketch,
    compute_params,
    complete_to_laplacian,
    dd_det_approx,
    det_approx,
    estimate_spectral_gap,
    exact_effective_resistance_matrix,
    exact_spectrum_normalized,
    exact_visit_excess,
    exact_walk_distribution,
    generate,
    matrix_tree_log_count,
    query,
    query_batch,
    schur_complement,
)
from rsketch.alias import build_alias_table
from rsketch.io import sketch_to_bytes
from rsketch.walks import SchurWalker, schur_step_empirical, stationary_distribution


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"\ncriterion {num:2d} {'PASS' if ok else 'FAIL'}: {detail}", flush=True)
    assert ok, f"criterion {num} failed: {detail}"


# =============================================================================
# Shared heavy fixtures
# =============================================================================


@pytest.fixture(scope="module")
def small_suite():
    """20 random connected graphs, n <= 30, weights in [1, 10]."""
    rng = np.random.default_rng(1001)
    graphs = [random_connected_graph(rng, n_min=5, n_max=30,
                                     w_low=1.0, w_high=10.0)
              for _ in range(20)]
    return graphs


@pytest.fixture(scope="module")
def sketch_runs_500():
    """n=500 8-regular sketches at eps=0.25 and eps=0.1, plus oracle data."""
    t_all = time.perf_counter()
    g = generate(GraphGeneratorSpec(kind="random-regular", n=500, d=8), seed=42)
    nu2 = estimate_spectral_gap(g, seed=0)
    r_exact = exact_effective_resistance_matrix(g)
    rng = np.random.default_rng(2024)
    pairs = np.stack([rng.choice(500, size=2, replace=False) for _ in range(1000)])
    truth = r_exact[pairs[:, 0], pairs[:, 1]]
    runs = {}
    for eps in (0.25, 0.1):
        params = compute_params(500, 1.0, eps, nu2)
        t = time.perf_counter()
        sk = build_sketch(g, params, seed=7, workers=1)
        build_seconds = time.perf_counter() - t
        rel = np.abs(query_batch(sk, pairs) - truth) / truth
        runs[eps] = SimpleNamespace(params=params, sketch=sk, rel=rel,
                                    build_seconds=build_seconds)
    return SimpleNamespace(graph=g, nu2=nu2, pairs=pairs, truth=truth, runs=runs,
                           wall_seconds=time.perf_counter() - t_all)


@pytest.fixture(scope="module")
def det_runs():
    """Determinant estimates for criterion 10, reused by criterion 13."""
    t_all = time.perf_counter()
    k50 = complete_graph(50)
    g150 = generate(GraphGeneratorSpec(kind="random-regular", n=150, d=8), seed=1)
    out = SimpleNamespace(
        k50=k50, g150=g150,
        truth_k50=matrix_tree_log_count(k50),
        truth_g150=matrix_tree_log_count(g150),
        k50_d05=[det_approx(k50, 0.5, seed=s).log_value for s in range(5)],
        k50_d025=[det_approx(k50, 0.25, seed=s).log_value for s in range(5)],
        g150_d05=[det_approx(g150, 0.5, seed=s).log_value for s in range(5)],
    )
    out.wall_seconds = time.perf_counter() - t_all
    return out


# =============================================================================
# Criteria
# =============================================================================


def test_criterion_01_exact_excess_identity(small_suite):
    t = time.perf_counter()
    worst = 0.0
    for g in small_suite:
        d = g.degrees
        excess = [exact_visit_excess(g, u) for u in range(g.n)]
        r = exact_effective_resistance_matrix(g)
        for u in range(g.n):
            for v in range(u + 1, g.n):
                est = (excess[u][u] / d[u] - excess[u][v] / d[v]
                       + excess[v][v] / d[v] - excess[v][u] / d[u])
                worst = max(worst, abs(est - r[u, v]) / r[u, v])
    dt = time.perf_counter() - t
    _report(1, worst <= 1e-8 and dt < 30.0,
            f"four-term identity on exact excess vectors, 20 graphs, "
            f"worst rel err {worst:.2e} (tol 1e-8), {dt:.1f}s (limit 30s)")


def test_criterion_02_sketch_accuracy(sketch_runs_500):
    b = sketch_runs_500
    frac25 = float((b.runs[0.25].rel <= 0.25).mean())
    frac10 = float((b.runs[0.1].rel <= 0.10).mean())
    ok = frac25 >= 0.99 and frac10 >= 0.99 and b.wall_seconds < 600.0
    _report(2, ok,
            f"n=500 8-regular: {100 * frac25:.1f}% of 1000 pairs within eps=0.25, "
            f"{100 * frac10:.1f}% within eps=0.10 (need >= 99%); "
            f"total {b.wall_seconds:.0f}s (limit 600s)")


def test_criterion_03_sparsity(sketch_runs_500):
    b = sketch_runs_500
    ln_nw = math.log(500 * 1.0)
    details = []
    ok = True
    for eps, run in b.runs.items():
        mean_entries = run.sketch.entry_count() / 500
        bound = 8.0 / (b.nu2 * eps) * ln_nw
        c_measured = mean_entries * b.nu2 * eps / ln_nw
        ok &= mean_entries <= bound
        details.append(f"eps={eps}: {mean_entries:.1f} entries/vertex "
                       f"<= {bound:.1f}, measured c_sparse={c_measured:.3f}")
    _report(3, ok, "; ".join(details) + " (need c_sparse <= 8)")


def test_criterion_04_l1_bound(small_suite):
    worst_ratio = 0.0
    for g in small_suite:
        nu2 = exact_spectrum_normalized(g)[1]
        bound = 8.0 / nu2 * math.log(g.n * g.weight_ratio()) + 2.0
        for u in range(g.n):
            l1 = np.abs(exact_visit_excess(g, u)).sum()
            worst_ratio = max(worst_ratio, l1 / bound)
    _report(4, worst_ratio <= 1.0,
            f"exact excess l1 norms vs 8/nu2*ln(nW)+2 on 20 graphs: "
            f"worst ratio {worst_ratio:.3f} (need <= 1)")


def test_criterion_05_convergence_bound():
    rng = np.random.default_rng(505)
    violations = 0
    worst_margin = math.inf
    for _ in range(20):
        g = random_connected_graph(rng, n_min=5, n_max=40,
                                   w_low=1.0, w_high=10.0)
        nu2 = exact_spectrum_normalized(g)[1]
        pi = stationary_distribution(g)
        envelope = g.n * g.degrees.max() / g.degrees.min()
        from rsketch import lazy_walk_matrix
        x = lazy_walk_matrix(g)
        p = np.eye(g.n)
        for t in range(201):
            l1 = np.abs(p - pi[:, None]).sum(axis=0)
            bound = math.exp(-t * nu2 / 2.0) * envelope
            worst_margin = min(worst_margin, bound - l1.max())
            violations += int((l1 > bound + 1e-10).sum())
            p = x @ p
    _report(5, violations == 0,
            f"l1 mixing bound, 20 graphs, all start vertices, t <= 200: "
            f"{violations} violations (tol 1e-10), smallest slack {worst_margin:.2e}")


def test_criterion_06_resistance_floor(small_suite, sketch_runs_500):
    worst = math.inf
    checked = 0
    for g in small_suite:
        r = exact_effective_resistance_matrix(g)
        d = g.degrees
        floor = 0.5 * (1.0 / d[:, None] + 1.0 / d[None, :])
        off = ~np.eye(g.n, dtype=bool)
        worst = min(worst, float((r - floor)[off].min()))
        checked += int(off.sum()) // 2
    b = sketch_runs_500
    d500 = b.graph.degrees
    fl = 0.5 * (1.0 / d500[b.pairs[:, 0]] + 1.0 / d500[b.pairs[:, 1]])
    worst = min(worst, float((b.truth - fl).min()))
    checked += len(b.pairs)
    _report(6, worst >= -1e-12,
            f"oracle R >= half-harmonic degree floor on {checked} pairs: "
            f"worst margin {worst:.2e} (tol -1e-12)")


def test_criterion_07_interlacing():
    rng = np.random.default_rng(707)
    violations = 0
    for _ in range(100):
        g = random_connected_graph(rng, n_min=6, n_max=30,
                                   w_low=1.0, w_high=10.0)
        k = int(rng.integers(3, g.n))
        keep = np.sort(rng.choice(g.n, size=k, replace=False))
        sc = schur_complement(g, keep)
        lam_orig = exact_spectrum_normalized(g)[1]
        d_orig = g.degrees[keep]
        scaled = sc.laplacian_dense() / np.sqrt(np.outer(d_orig, d_orig))
        lam_sc_orig = np.linalg.eigvalsh(scaled)[1]
        lam_sc_own = exact_spectrum_normalized(sc)[1]
        if lam_sc_orig < lam_orig - 1e-8:
            violations += 1
        if lam_sc_own < lam_sc_orig - 1e-8:
            violations += 1
    _report(7, violations == 0,
            f"Schur gap interlacing, 100 (graph, keep-set) instances: "
            f"{violations} violations (tol 1e-8)")


def test_criterion_08_dd_expansion_floor():
    rng = np.random.default_rng(808)
    worst = math.inf
    for alpha in (0.5, 1.0, 2.0):
        for _ in range(50):
            n = int(rng.integers(5, 41))
            m = random_dd_matrix(rng, n, alpha=alpha)
            comp = complete_to_laplacian(m)
            sc = schur_complement(comp.graph, range(m.n))
            nu2 = exact_spectrum_normalized(sc)[1]
            worst = min(worst, nu2 - alpha / (1.0 + alpha))
    _report(8, worst >= -1e-8,
            f"150 (1+a)-DD completions, a in {{0.5,1,2}}: explicit-Schur nu2 "
            f"vs a/(1+a) floor, worst margin {worst:+.3e} (tol 1e-8)")


def test_criterion_09_implicit_schur_walk():
    rng = np.random.default_rng(909)
    worst_tv = 0.0
    for i in range(10):
        m = random_dd_matrix(rng, 20, alpha=1.0)
        comp = complete_to_laplacian(m)
        walker = SchurWalker.from_elimination(comp.graph, comp.extra)
        sc = schur_complement(comp.graph, range(m.n))
        u = int(rng.integers(m.n))
        emp = schur_step_empirical(walker, u, 100_000,
                                   np.random.default_rng(9000 + i))
        e_u = np.zeros(m.n)
        e_u[u] = 1.0
        exact = 0.5 * e_u + 0.5 * (sc.adjacency_dense() @ (e_u / sc.degrees))
        worst_tv = max(worst_tv, 0.5 * float(np.abs(emp - exact).sum()))
    _report(9, worst_tv <= 0.02,
            f"implicit vs explicit Schur one-step distribution, 10 instances, "
            f"1e5 draws: worst TV {worst_tv:.4f} (limit 0.02)")


def test_criterion_10_determinant_accuracy(det_runs):
    d = det_runs
    b05, b025 = math.log(1.5), math.log(1.25)
    err_k50 = [abs(v - d.truth_k50) for v in d.k50_d05]
    err_g150 = [abs(v - d.truth_g150) for v in d.g150_d05]
    hits_025 = sum(abs(v - d.truth_k50) <= b025 for v in d.k50_d025)
    ok = (max(err_k50) <= b05 and max(err_g150) <= b05 and hits_025 >= 4
          and d.wall_seconds < 900.0)
    _report(10, ok,
            f"K50 d=0.5 max err {max(err_k50):.4f}, n=150 8-regular d=0.5 "
            f"max err {max(err_g150):.4f} (budget {b05:.4f}); K50 d=0.25: "
            f"{hits_025}/5 within {b025:.4f} (need >=4); "
            f"{d.wall_seconds:.0f}s (limit 900s)")


def test_criterion_11_dd_determinant():
    rng = np.random.default_rng(1111)
    m = random_dd_matrix(rng, 100, alpha=1.0, p=0.08)
    truth = np.linalg.slogdet(m.values).logabsdet
    errs = [abs(dd_det_approx(m, 0.5, seed=s).log_value - truth)
            for s in range(5)]
    budget = math.log(1.5)
    _report(11, max(errs) <= budget,
            f"2-DD n=100 log det, 5 seeds: max |err| {max(errs):.4f} "
            f"(budget {budget:.4f})")


def test_criterion_12_alias_exactness():
    rng = np.random.default_rng(1212)
    n_draws = 1_000_000
    min_p = math.inf
    for i in range(20):
        k = int(rng.integers(2, 41))
        w = rng.uniform(0.1, 10.0, size=k)
        if i == 7 and k >= 3:
            w[0] = 0.0
        if i == 11:
            w = np.ones(k)
        prob, alias = build_alias_table(w)
        slots = rng.integers(k, size=n_draws)
        coins = rng.random(n_draws)
        out = np.where(coins < prob[slots], slots, alias[slots])
        counts = np.bincount(out, minlength=k)
        p = w / w.sum()
        live = p > 0
        assert counts[~live].sum() == 0
        expected = n_draws * p[live] / p[live].sum()
        _, pval = scipy.stats.chisquare(counts[live], expected)
        min_p = min(min_p, float(pval))

    # exact two-draw recovery on enumerable outcome spaces
    worst_abs = 0.0
    for w in ([1.0, 2.0], [3.0, 1.0, 4.0, 1.0, 5.0], [0.5] * 8,
              [1e-3, 1.0, 1e3], [2.0, 0.0, 1.0]):
        w = np.asarray(w)
        prob, alias = build_alias_table(w)
        k = len(w)
        marg = np.zeros(k)
        for s in range(k):
            marg[s] += prob[s] / k
            marg[int(alias[s])] += (1.0 - prob[s]) / k
        worst_abs = max(worst_abs, float(np.abs(marg - w / w.sum()).max()))
    ok = min_p > 0.001 and worst_abs <= 1e-14
    _report(12, ok,
            f"chi-square over 20 weight vectors x 1e6 draws: min p {min_p:.4f} "
            f"(need > 0.001); exact two-draw marginal recovery within {worst_abs:.1e}")


def test_criterion_13_reproducibility(sketch_runs_500, det_runs):
    b = sketch_runs_500
    ref = sketch_to_bytes(b.runs[0.25].sketch)
    rebuilt = build_sketch(b.graph, b.runs[0.25].params, seed=7, workers=3)
    sketch_same = sketch_to_bytes(rebuilt) == ref

    det_ref = det_runs.g150_d05[0]
    det_re = det_approx(det_runs.g150, 0.5, seed=0,
                        config=DetConfig(workers=2)).log_value
    k50_re = det_approx(det_runs.k50, 0.5, seed=0).log_value
    det_same = det_re == det_ref and k50_re == det_runs.k50_d05[0]
    _report(13, sketch_same and det_same,
            f"same-seed reruns: sketch bytes identical across workers={sketch_same}, "
            f"log estimates identical across workers={det_same}")


def test_criterion_14_query_latency(sketch_runs_500):
    sk500 = sketch_runs_500.runs[0.25].sketch

    g2000 = generate(GraphGeneratorSpec(kind="random-regular", n=2000, d=8), seed=44)
    nu2 = estimate_spectral_gap(g2000, seed=0)
    params = compute_params(2000, 1.0, 1.0, nu2)
    sk2000 = build_sketch(g2000, params, seed=7, workers=1)

    def median_query_ns(sk, n):
        rng = np.random.default_rng(14)
        pairs = [(int(a), int(b)) for a, b in
                 (rng.choice(n, 2, replace=False) for _ in range(4200))]
        for u, v in pairs[:200]:  # warmup
            query(sk, u, v)
        times = np.empty(4000)
        for i, (u, v) in enumerate(pairs[200:]):
            t = time.perf_counter_ns()
            query(sk, u, v)
            times[i] = time.perf_counter_ns() - t
        return float(np.median(times))

    import gc
    gc.collect()
    gc.disable()
    try:
        med500 = median_query_ns(sk500, 500)
        med2000 = median_query_ns(sk2000, 2000)
    finally:
        gc.enable()
    ratio = med2000 / med500
    _report(14, 0.5 <= ratio <= 2.0,
            f"median per-query latency: n=500 {med500:.0f}ns, "
            f"n=2000 {med2000:.0f}ns, ratio {ratio:.2f} (need within 2x)")
