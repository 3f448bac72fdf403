import dataclasses
import math

import numpy as np
import pytest
from scipy import linalg

from coverlab import graphs as G
from coverlab import hitting as H
from coverlab import spectral as S
from coverlab import walker as W


def test_stationary_hitting_small_graphs():
    assert H.hitting_expectation_pi(G.build_cycle(4), 0) == pytest.approx(2.5)
    assert H.hitting_expectation_pi(G.build_complete(4), 0) == pytest.approx(2.25)
    for m in (5, 9, 12):
        assert H.hitting_expectation_pi(G.build_cycle(m), 0) == pytest.approx((m * m - 1) / 6)


@pytest.mark.parametrize("g", [G.build_torus([3, 4]), G.build_cycle(9), G.strong_product(G.build_cycle(3), G.build_complete(3))], ids=lambda g: g.label)
def test_stationary_hitting_is_vertex_independent(g):
    vals = [H.hitting_expectation_pi(g, j) for j in range(g.vertex_count)]
    assert max(vals) - min(vals) < 1e-9


def test_collapse_shapes():
    g = G.build_cycle(4)
    wg = H.collapse(g, [0, 1])
    assert wg.vertex_count == 3
    assert wg.weights[-1, -1] == pytest.approx(2.0)
    assert H.collapse(g, [0, 2]).weights[-1, -1] == 0.0
    assert H.collapse(g, [0, 1, 2]).vertex_count == 2
    pi = S.stationary(H.collapse(G.build_torus([3, 3]), [0, 4]))
    assert pi[-1] == pytest.approx(2 / 9)


def test_set_hitting_consistency():
    g = G.build_torus([3, 4])
    assert H.hitting_expectation_set(g, [5]) == pytest.approx(H.hitting_expectation_pi(g, 5), abs=1e-10)
    assert H.hitting_expectation_set(g, [0, 5]) <= H.hitting_expectation_pi(g, 0)
    # against the Dirichlet solve averaged over pi
    for A in ([0, 5], [1, 2, 7]):
        assert H.hitting_expectation_set(g, A) == pytest.approx(H.hitting_time_to(g, A).mean(), rel=1e-10)
    assert H.hitting_expectation_set(G.build_cycle(4), [0, 1]) == pytest.approx(1.0)


def test_q_ratio_and_green_formula():
    assert H.q_ratio(G.build_cycle(9), [4]) == pytest.approx(1.0)
    rng = np.random.default_rng(1)
    for g in (G.build_cycle(11), G.build_torus([4, 5]), G.build_complete(6)):
        c = S.graph_eigensystem(g)
        for _ in range(3):
            x, y = (int(v) for v in rng.choice(g.vertex_count, 2, replace=False))
            q = H.q_ratio(g, [x, y], o=x)
            assert abs(q - 2 / (1 + S.green(c, x, y) / S.green(c, x, x))) < 1e-8
            n = g.vertex_count
            assert H.hitting_expectation_set(g, [x, y]) == pytest.approx(n / 2 * (S.green(c, x, x) + S.green(c, x, y)), rel=1e-8)


def fourier_antipodal_q(L):
    # Green function of the 3-torus by its Fourier series
    k = np.stack(np.meshgrid(*[np.arange(L)] * 3, indexing="ij")).reshape(3, -1)
    beta = 1 - np.mean(np.cos(2 * np.pi * k / L), axis=0)
    keep = beta > 1e-12
    Gxx = np.sum(1 / beta[keep])
    Gxy = np.sum(np.cos(np.pi * k[:, keep].sum(axis=0)) / beta[keep])
    return 2 / (1 + Gxy / Gxx)


def test_q_ratio_antipodal_torus():
    g = G.build_torus([6, 6, 6])
    far = 3 * 36 + 3 * 6 + 3
    assert H.q_ratio(g, [0, far]) == pytest.approx(fourier_antipodal_q(6), rel=1e-10)
    # the Green function is negative at the antipode, so q exceeds 2
    q = fourier_antipodal_q(16)
    assert q == pytest.approx(2.0344213859837907, rel=1e-10)


def test_quasi_stationary_examples():
    alpha, lam, _ = H.quasi_stationary(G.build_complete(4), [0])
    assert np.allclose(alpha, [0, 1 / 3, 1 / 3, 1 / 3])
    assert lam == pytest.approx(1 / 3)
    mix = H.mixture(G.build_complete(4), [0])
    assert mix.alpha_pi_l2 == pytest.approx(4 / 3)
    alpha, lam, _ = H.quasi_stationary(G.build_cycle(4), [0])
    # dense 3x3 killed eigensolve
    PB = S.transition(G.build_cycle(4))[1:, 1:]
    w, v = linalg.eig(PB.T)
    top = np.argmax(w.real)
    ref = np.abs(v[:, top].real)
    ref /= ref.sum()
    assert np.allclose(alpha[1:], ref)
    assert lam == pytest.approx(1 - w.real[top])
    assert np.allclose(alpha, [0, 1 - 1 / math.sqrt(2), math.sqrt(2) - 1, 1 - 1 / math.sqrt(2)])
    resid = np.abs(alpha[1:] @ PB - (1 - lam) * alpha[1:]).sum()
    assert resid < 1e-10


def test_quasi_stationary_ambiguous_components():
    # removing two antipodal vertices of C_8 leaves two arcs of mass 3/8
    with pytest.raises(G.GraphError):
        H.quasi_stationary(G.build_cycle(8), [0, 4])
    alpha, lam, info = H.quasi_stationary(G.build_cycle(12), [0, 2])
    assert alpha[1] == 0 and alpha[3:].sum() == pytest.approx(1)


def test_K4_mixture_single_term():
    mix = H.mixture(G.build_complete(4), [0])
    assert mix.weights[0] == pytest.approx(0.75)
    assert np.all(mix.weights[1:] < 1e-12)
    assert mix.rates[0] == pytest.approx(1 / 3)
    assert H.t_med(mix) == 0.0
    t = 3.0
    rep = H.ab_bounds(mix, [t])
    assert rep.classic_lower[0] == pytest.approx(0.75 * math.exp(-1))
    assert rep.classic_upper[0] == pytest.approx(0.75 * math.exp(-1))
    assert H.dsep_identity_check(G.build_complete(4), [0], mix)["residual"] < 1e-12


def random_pairs(count=8, seed=0):
    rng = np.random.default_rng(seed)
    fams = [lambda: G.build_cycle(int(rng.integers(5, 30))), lambda: G.build_torus([int(rng.integers(3, 6)), int(rng.integers(3, 6))]), lambda: G.build_complete(int(rng.integers(3, 9)))]
    out = []
    for _ in range(count):
        g = fams[int(rng.integers(3))]()
        k = int(rng.integers(1, min(3, g.vertex_count - 1) + 1))
        out.append((g, sorted(int(v) for v in rng.choice(g.vertex_count, k, replace=False))))
    return out


@pytest.mark.parametrize("g,A", random_pairs(), ids=lambda v: getattr(v, "label", str(v)))
def test_mixture_invariants(g, A):
    try:
        mix = H.mixture(g, A)
    except G.GraphError:
        pytest.skip("two macroscopic components")
    assert mix.weights.sum() == pytest.approx(mix.pi_B, rel=1e-10)
    assert mix.weights[0] == pytest.approx(1 / mix.alpha_pi_l2, rel=1e-10)
    assert mix.E_pi == pytest.approx(H.hitting_expectation_set(g, A), rel=1e-8)
    assert mix.rates[0] <= mix.rates[1:].min() + 1e-12 if len(mix.rates) > 1 else True
    if len(mix.rates) > 1 and mix.meta["components"] == 1:
        assert 1 / mix.rates[1] <= mix.t_rel + 1e-10
    assert H.collapsed_relaxation(g, A) <= 2 * mix.t_rel + 1e-10
    ts = np.array([0.0, 0.3, 1.0, 4.0, 20.0])
    assert np.allclose(mix.tail(ts), H.tail_expm(g, A, ts), atol=1e-8)
    assert mix.tail(0.0)[0] == pytest.approx(mix.pi_B)
    assert np.allclose(mix.tail_from(2.0), H.killed_tail(g, A, 2.0), atol=1e-8)
    rep = H.ab_bounds(mix, H.log_grid(mix))
    assert rep.max_violation <= 1e-10
    assert rep.refined_main[0] <= rep.exact[0] + 1e-12
    assert mix.E_alpha >= mix.E_pi - 1e-10
    lhs, rhs = H.cheap_norm_bound(mix)
    assert lhs <= rhs + 1e-10
    ds = H.dsep_identity_check(g, A, mix)
    assert ds["residual"] < 1e-8
    tm = H.t_med_report(mix)
    assert tm["t_med"] <= tm["provable_cap"] * (1 + 1e-12)


def test_t_med_single_secondary_mode():
    mix = H.mixture(G.build_cycle(5), [0])
    # keep the Perron mode and one secondary mode
    lam2 = 0.7
    mix = dataclasses.replace(mix, weights=np.array([mix.weights[0], 0.05]), rates=np.array([mix.rates[0], lam2]))
    assert H.t_med(mix) == pytest.approx(-math.log(1 - 1 / math.sqrt(2)) / lam2, rel=1e-10)


def test_t_med_cycle8_pinned():
    mix = H.mixture(G.build_cycle(8), [0])
    tm = H.t_med(mix)
    assert tm == pytest.approx(1.7202788969909835, rel=1e-9)
    assert tm <= mix.t_rel / math.sqrt(2)
    assert H.dsep_identity_check(G.build_cycle(8), [0], mix)["residual"] < 1e-10


def test_t_med_can_exceed_t_rel_over_sqrt2():
    # C_4 with a single target: one secondary mode at rate 1 while t_rel = 1
    mix = H.mixture(G.build_cycle(4), [0])
    rep = H.t_med_report(mix)
    assert not rep["below_t_rel_over_sqrt2"]
    assert rep["t_med"] <= rep["provable_cap"]


def test_dsep_identity_torus_corners():
    g = G.build_torus([4, 4])
    assert H.dsep_identity_check(g, [0, 10])["residual"] < 1e-8


def test_ab_bounds_detects_corruption():
    mix = H.mixture(G.build_cycle(9), [0])
    mix = dataclasses.replace(mix, weights=mix.weights * 1.5)
    with pytest.raises(H.BoundViolation) as err:
        H.ab_bounds(mix, H.log_grid(mix))
    assert err.value.name == "aldous_brown_sandwich"


def test_first_hit_probs():
    g = G.build_cycle(10)
    p = H.first_hit_probs(g, "uniform", [0, 5])
    assert p[0] == pytest.approx(0.5) and p[5] == pytest.approx(0.5)
    assert H.first_hit_probs(g, 3, [7]) == {7: pytest.approx(1.0)}
    p = H.first_hit_probs(G.build_torus([16, 16]), "uniform", [0, 8 * 16 + 3, 5 * 16 + 11])
    assert sum(p.values()) == pytest.approx(1.0)
    assert all(abs(v - 1 / 3) < 0.05 for v in p.values())


def test_vt_bound_check():
    g = G.build_complete(10)
    r = H.vt_bound_check(g, [0, 3], 5, 1.0)
    assert r["implied_constant"] > 0
    with pytest.raises(ValueError):
        H.vt_bound_check(g, [0], 1, 1.0)
    consts = [H.vt_bound_check(G.build_torus([L, L, 3]), [0, 5], 2, 3.0)["implied_constant"] for L in (8, 12)]
    assert max(consts) / min(consts) < 4


def test_union_and_cross_term_checks():
    g = G.build_torus([6, 6])
    assert H.union_bound_check(g, [0, 14, 21], 5.0)["ok"]
    assert H.cross_term_check(g, [0], [21], 5.0)["ok"]


def test_expected_cover_time_small():
    assert H.expected_cover_time(G.build_cycle(4), start=0) == pytest.approx(6.0)
    assert H.expected_cover_time(G.build_complete(2), start=0) == pytest.approx(1.0)
    # K_n from a fixed vertex is a coupon collector with rate (n-1-j)/(n-1)... per new vertex
    n = 5
    ref = sum((n - 1) / (n - 1 - j) for j in range(n - 1))
    assert H.expected_cover_time(G.build_complete(n), start=0) == pytest.approx(ref)
    assert H.expected_cover_time(G.single_vertex()) == 0.0
    with pytest.raises(ValueError):
        H.expected_cover_time(G.build_cycle(20))


def test_mc_tail_matches_mixture():
    g = G.build_torus([4, 4])
    A = [0, 5]
    mix = H.mixture(g, A)
    hs = W.hitting_first(g, "uniform", A, 4000, seed=11)
    t = mix.E_pi
    emp, se = hs.tail(t)
    assert abs(emp - mix.tail(t)[0]) < 3 * se
