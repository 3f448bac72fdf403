import json
import math

import numpy as np
import pytest

from coverlab import graphs as G
from coverlab import gumbel_lab as L
from coverlab import spectral as S


def test_psi_values():
    assert L.psi(0.0) == 1 / 3
    assert L.psi(0.5) == pytest.approx(-1 / 6, abs=1e-15)
    assert L.psi_series(0.5, 10**6) == pytest.approx(-1 / 6, abs=1e-6)
    assert abs(L.PsiTable.integral()) < 1e-10
    with pytest.raises(ValueError):
        L.psi(1.2)
    with pytest.raises(ValueError):
        L.psi_series(-0.1, 10)


def test_psi_table_closed_form_vs_series():
    tab = L.psi_table(101, 10**6)
    assert tab.max_gap < 1e-6
    assert np.all(np.abs(tab.closed) <= 1 / 3 + 1e-15)


@pytest.mark.parametrize("m", [16, 64, 256])
def test_cycle_green_profile(m):
    j = np.arange(m)
    prof = L.cycle_green_profile(m)
    target = m * L.psi(j / m)
    assert np.allclose(prof, target, rtol=1e-6, atol=1e-9 * m)
    # independent route: dense continuous-time Green function
    if m <= 64:
        c = S.graph_eigensystem(G.build_cycle(m))
        assert np.allclose(2 * S.green(c)[0] + 1 / (3 * m), target, rtol=1e-6, atol=1e-9)


def test_time_window():
    w = L.TimeWindow(2.0, 100, (0, 1, 2), "exact")
    assert w.t(0) == pytest.approx(2 * math.log(100))
    assert all(a < b for a, b in zip(w.times, w.times[1:]))
    with pytest.raises(ValueError):
        L.TimeWindow(2.0, 100, (1, 0), "exact")


def test_estimate_Epi_To():
    e = L.estimate_Epi_To(G.build_cycle(4))
    assert e.value == pytest.approx(2.5) and e.stderr == 0
    g = G.build_cycle(64)
    ex = L.estimate_Epi_To(g)
    mc = L.estimate_Epi_To(g, "mc", trials=2000, seed=1)
    assert mc.provenance == "mc"
    assert abs(mc.value - ex.value) < 3 * mc.stderr
    with pytest.raises(ValueError):
        L.estimate_Epi_To(g, "mc", trials=50, seed=1)


def test_estimate_Epi_To_torus_mc_vs_reduced_exact():
    # report-only scaling: the exact oracle is computed at [8,8,8]
    small = L.estimate_Epi_To(G.build_torus([8, 8, 8]))
    big = L.estimate_Epi_To(G.build_torus([12, 12, 12]), "mc", trials=400, seed=2)
    ratio = big.value / small.value
    exact_big = L.estimate_Epi_To(G.build_torus([12, 12, 12])).value
    assert abs(big.value - exact_big) < 3 * big.stderr
    assert ratio > 1.5


def test_factorial_moment():
    z = np.array([0, 1, 2, 5])
    assert np.array_equal(L.factorial_moment(z, 2), [0, 0, 2, 20])
    assert np.all(L.factorial_moment(np.arange(10), 3) >= 0)


def test_gumbel_report_fields_and_reproducibility():
    g = G.build_torus([5, 5, 5])
    a = L.gumbel_experiment(g, 150, seed=4)
    b = L.gumbel_experiment(g, 150, seed=4)
    assert 0 <= a.data["ks"] <= 1
    assert a.data["tails"][0.0]["gumbel"] == pytest.approx(math.exp(-1))
    da, db = a.to_dict(), b.to_dict()
    da.pop("runtime"), db.pop("runtime")
    assert json.dumps(da, sort_keys=True) == json.dumps(db, sort_keys=True)
    assert not a.flags


def test_poisson_report_and_tail_forcing():
    g = G.build_torus([6, 6, 6])
    rep = L.uncovered_poisson_experiment(g, [0.0, 6.0], 300, 3, seed=5)
    for s, block in rep.data["per_s"].items():
        for k, m in block["moments"].items():
            assert m["mean"] >= 0 and m["stderr"] >= 0
    p0 = rep.data["per_s"][6.0]["P0"]
    assert abs(p0["empirical"] - math.exp(-math.exp(-6))) <= max(3 * p0["stderr"], 3 / 300)
    with pytest.raises(ValueError):
        L.uncovered_poisson_experiment(g, [0.0], 10, 5, seed=5)


def test_product_law_report():
    g = G.build_torus([6, 6, 6])
    rep = L.product_law_checks(g, 0.0, 300, seed=6)
    d = rep.data
    assert d["vertex_frequency"]["target"] == pytest.approx(1 / 216)
    assert d["pair_frequency"]["target"] == pytest.approx(1 / 216**2)
    assert d["delta"] == G.diameter(g) // 3
    assert set(d["position_pvalues"]) == {"all", "Z=0", "Z>=1"}


def test_last_k_tiny_graph_skipped():
    rep = L.last_k_experiment(G.build_cycle(4), 2, 50, seed=1)
    assert "skipped" in rep.data
    with pytest.raises(ValueError):
        L.last_k_experiment(G.build_cycle(40), 4, 10, seed=1)


def test_last_k_single_point_uniform():
    g = G.build_torus([6, 6])
    rep = L.last_k_experiment(g, 1, 800, seed=7)
    assert rep.data["cell_pvalue"] > 0.01


def test_c2_properties():
    th = 1.2
    grid = [0.5, 1, 2, 4, 10]
    vals = [L.c2(a, th) for a in grid]
    assert all(v > 1 for v in vals)
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
    assert L.c2(1e3, th) - 1 < 1e-3 * (1 / 3) / th


def test_theta_short_horizon_lower_bound():
    g = L.counterexample_graph(1.0, 20, 4, seed=0)
    with pytest.raises(ValueError):
        L.theta_estimate(4, 20, 100, horizon=1.0, graph=g)
    th = L.theta_estimate(4, 20, 2000, horizon=1.0, graph=g, allow_short=True, seed=1)
    assert th["raw_mean"] >= 1 - 1 / math.e - 3 * th["stderr"]


def test_theta_decreases_with_degree():
    m = 40
    lo = L.theta_estimate(3, m, 1500, seed=2)
    hi = L.theta_estimate(5, m, 1500, seed=3)
    assert hi["theta"] < lo["theta"]
    assert lo["graph"] != hi["graph"]


@pytest.mark.slow
def test_theta_stable_in_m():
    a = L.theta_estimate(4, 100, 1500, seed=4)
    b = L.theta_estimate(4, 200, 1500, seed=5)
    assert abs(a["theta"] - b["theta"]) <= 2 * math.hypot(a["stderr"], b["stderr"])


def test_counterexample_small_pipeline():
    rep = L.counterexample_experiment(1.0, 20, 1.0, 200, seed=3, theta_trials=300)
    d = rep.data
    assert d["c2"] > 1 and d["c2_from_G_oo"] > 1
    assert d["jensen_gap"] == pytest.approx(d["c2"] - 1)
    assert d["E_provenance"] == "exact-product"
    assert np.isfinite(d["second_moment_scaled"])
    with pytest.raises(ValueError):
        L.counterexample_experiment(1.0, 20, -1.0, 10, seed=3)


def test_third_moment_guard():
    g = L.counterexample_graph(1.0, 20, 4, seed=0)
    rep = L.third_moment_guard(1.0, 20, [1.0, 2.0, 5.0], 300, seed=8, graph=g)
    rows = {r["s"]: r for r in rep.data["rows"]}
    assert rep.data["within_ceiling"]
    assert rows[5.0]["raw"] <= 3 * max(rows[5.0]["raw_stderr"], 1e-3)
    vals = [rows[s]["raw"] for s in (1.0, 2.0, 5.0)]
    ses = [rows[s]["raw_stderr"] for s in (1.0, 2.0, 5.0)]
    for (a, sa), (b, sb) in zip(zip(vals, ses), zip(vals[1:], ses[1:])):
        assert b <= a + 3 * math.hypot(sa, sb)


def test_matthews_sanity():
    assert L.matthews_sanity(G.build_complete(4), 2000, seed=1).data["holds"]
    assert L.matthews_sanity(G.build_cycle(8), 2000, seed=2).data["holds"]
    d = L.matthews_sanity(G.single_vertex(), 5, seed=3).data
    assert d["mean_cover"] == 0 and d["bound"] == 0


def exact_second_factorial_moment(g, t):
    """sum_{x != y} P_pi(T_{x,y} > t) by dense diagonalisation of the killed chain."""
    from scipy.linalg import eigh

    n = g.vertex_count
    P = g.csr().toarray() / g.degree
    total = 0.0
    for y in range(1, n):  # vertex-transitive: fix x = 0
        keep = np.setdiff1d(np.arange(n), [0, y])
        w, V = eigh(P[np.ix_(keep, keep)])
        c = V.sum(axis=0) / math.sqrt(n)
        total += n * np.sum(c**2 * np.exp(-(1 - w) * t))
    return total


def test_second_factorial_moment_matches_finite_n_oracle():
    g = G.build_torus([6, 6, 6])
    E = L.estimate_Epi_To(g)
    rep = L.uncovered_poisson_experiment(g, [0.0], 3000, 2, seed=11, E=E)
    m = rep.data["per_s"][0.0]["moments"][2]
    exact = exact_second_factorial_moment(g, E.value * math.log(g.vertex_count))
    # near pairs are jointly uncovered more often than independence predicts
    assert exact > 1.2
    assert abs(m["mean"] - exact) <= 3.5 * m["stderr"]
