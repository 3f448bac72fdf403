import json
import math

import numpy as np
import pytest
from scipy import integrate

from coverlab import graphs as G
from coverlab import hitting as H
from coverlab import spectral as S
from coverlab import walker as W


def cover_times(samples):
    return np.array([s.cover_time for s in samples])


def within(mean, se, target, k=3.0):
    return abs(mean - target) <= k * se


def test_single_vertex_covers_at_zero():
    cfg = W.WalkConfig(G.single_vertex(), master_seed=1)
    s = W.run_trials(cfg, 3)
    assert all(x.cover_time == 0.0 and x.complete for x in s)


def test_K2_cover_is_first_holding_time():
    cfg = W.WalkConfig(G.build_complete(2), master_seed=2, start=0)
    ct = cover_times(W.run_trials(cfg, 20000))
    assert within(ct.mean(), ct.std(ddof=1) / math.sqrt(len(ct)), 1.0)


def test_C4_cover_matches_exact_enumeration():
    g = G.build_cycle(4)
    exact = H.expected_cover_time(g, start=0)
    ct = cover_times(W.run_trials(W.WalkConfig(g, master_seed=3, start=0), 100000))
    assert within(ct.mean(), ct.std(ddof=1) / math.sqrt(len(ct)), exact)


@pytest.mark.parametrize("g", [G.build_torus([3, 4]), G.build_complete(7)], ids=lambda g: g.label)
def test_uniform_start_cover_matches_exact(g):
    exact = H.expected_cover_time(g)
    ct = cover_times(W.run_trials(W.WalkConfig(g, master_seed=4), 20000))
    assert within(ct.mean(), ct.std(ddof=1) / math.sqrt(len(ct)), exact)


def test_product_kernel_matches_exact_and_generic():
    g = G.strong_product(G.build_cycle(3), G.build_cycle(4))
    assert g.meta["kind"] == "strong_product"
    exact = H.expected_cover_time(g)
    generic = G.Graph(g.adjacency, label="plain")
    for graph in (g, generic):
        ct = cover_times(W.run_trials(W.WalkConfig(graph, master_seed=5), 20000))
        assert within(ct.mean(), ct.std(ddof=1) / math.sqrt(len(ct)), exact)


def test_product_kernel_neighbours_are_uniform():
    # one step of the product kernel hits every product neighbour equally often
    from coverlab import _kernels as K

    g1, g2 = G.build_cycle(5), G.build_complete(3)
    g = G.strong_product(g1, g2)
    start = 7
    bits = np.random.Philox(9)
    counts = np.zeros(g.vertex_count, dtype=np.int64)
    for _ in range(30000):
        covered = np.zeros(g.vertex_count, dtype=np.uint8)
        state = np.zeros(K.STATE_SIZE, dtype=np.int64)
        state[K.POS], state[K.UNCOVERED] = start, g.vertex_count
        buf = bits.random_raw(8)
        assert K.product_cover_chunk(g1.adjacency, g2.adjacency, covered, state, buf, 1, 0) == K.REACHED_STOP
        counts[state[K.POS]] += 1
    nb = g.neighbors(start)
    assert counts[np.setdiff1d(np.arange(g.vertex_count), nb)].sum() == 0
    from scipy import stats

    assert stats.chisquare(counts[nb]).pvalue > 0.001


def test_determinism_across_workers_and_runs():
    g = G.build_torus([5, 6])
    cfg = W.WalkConfig(g, master_seed=99, snapshot_times=(10.0, 40.0), k_targets=(3, 1))
    a = W.run_trials(cfg, 40, workers=1)
    b = W.run_trials(cfg, 40, workers=4)
    c = W.run_trials(cfg, 40, workers=1)
    for x, y, z in zip(a, b, c):
        assert x.cover_time == y.cover_time == z.cover_time
        assert x.Z == y.Z == z.Z
        assert all(np.array_equal(x.tau_k[k][1], y.tau_k[k][1]) for k in x.tau_k)


def test_buffer_size_does_not_change_results(monkeypatch):
    g = G.build_cycle(30)
    cfg = W.WalkConfig(g, master_seed=7, start=0)
    ref = cover_times(W.run_trials(cfg, 10))
    monkeypatch.setattr(W, "MAX_BUFFER_WORDS", 64)
    small = cover_times(W.run_trials(cfg, 10))
    assert np.array_equal(ref, small)


def test_first_trial_offset():
    g = G.build_cycle(7)
    cfg = W.WalkConfig(g, master_seed=5)
    full = cover_times(W.run_trials(cfg, 6))
    tail = cover_times(W.run_trials(cfg, 3, first_trial=3))
    assert np.array_equal(full[3:], tail)


def test_snapshots_monotone_and_consistent():
    g = G.build_torus([4, 4])
    cfg = W.WalkConfig(g, master_seed=8, snapshot_times=(1.0, 5.0, 20.0, 80.0), k_targets=(4, 2, 1))
    for s in W.run_trials(cfg, 200):
        sets = [set(sn.uncovered.tolist()) for sn in s.snapshots]
        for sn, st in zip(s.snapshots, sets):
            assert sn.Z == len(st)
        for a, b in zip(sets, sets[1:]):
            assert b <= a
        assert s.tau_k[4][0] <= s.tau_k[2][0] <= s.tau_k[1][0] <= s.cover_time
        assert len(s.tau_k[1][1]) == 1 and len(s.tau_k[2][1]) == 2
        # the last uncovered vertex is the final one visited
        if s.snapshots[-1].Z == 0:
            assert s.cover_time <= 80.0


def test_poissonised_jump_counts():
    g = G.build_cycle(10)
    t = 7.5
    cfg = W.WalkConfig(g, master_seed=10, horizon=t, snapshot_times=(t,))
    N = np.array([s.snapshots[0].jumps for s in W.run_trials(cfg, 5000)])
    assert within(N.mean(), N.std(ddof=1) / math.sqrt(len(N)), t)


def test_cap_flags_incomplete():
    g = G.build_cycle(40)
    cfg = W.WalkConfig(g, master_seed=1, E_pi_To=1.0, cap_factor=1e-3)
    s = W.run_trials(cfg, 5)
    assert not any(x.complete for x in s)
    assert all(math.isnan(x.cover_time) for x in s)


def test_config_validation():
    g = G.build_cycle(5)
    with pytest.raises(ValueError):
        W.WalkConfig(g, master_seed=1, snapshot_times=(3.0, 1.0))
    with pytest.raises(ValueError):
        W.WalkConfig(g, master_seed=1, k_targets=(1, 2))
    with pytest.raises(ValueError):
        W.WalkConfig(g, master_seed=1, horizon=2.0, snapshot_times=(3.0,))
    with pytest.raises(ValueError):
        W.run_trials(W.WalkConfig(g, master_seed=1), 0)


def test_local_time_short_horizon():
    g = G.build_cycle(6)
    t = 1e-6
    est = W.local_time(g, 0, 0, t, 200, seed=1)
    assert est.mean == pytest.approx(t, rel=1e-5)


def test_local_time_matches_spectral_integral():
    g = G.build_torus([3, 4])
    c = S.graph_eigensystem(g)
    for y, t in ((0, 3.0), (5, 6.0)):
        ref, _ = integrate.quad(lambda s: S.heat_kernel(c, s, 0, y), 0, t)
        est = W.local_time(g, 0, y, t, 8000, seed=2 + y)
        assert est.stderr >= 0 and est.mean >= 0
        assert within(est.mean, est.stderr, ref)


def test_hitting_first_symmetry_and_singletons():
    g = G.build_cycle(10)
    hs = W.hitting_first(g, "uniform", [0, 5], 6000, seed=3)
    for a in (0, 5):
        assert within(hs.frequencies[a], hs.stderr[a], 0.5)
    assert sum(hs.frequencies.values()) == pytest.approx(1.0)
    one = W.hitting_first(g, 3, [8], 50, seed=4)
    assert one.frequencies == {8: 1.0}


def test_hitting_first_matches_harmonic_measure():
    g = G.build_torus([4, 5])
    A = [0, 6, 13]
    exact = H.first_hit_probs(g, 2, A)
    hs = W.hitting_first(g, 2, A, 6000, seed=5)
    for a in A:
        assert within(hs.frequencies[a], max(hs.stderr[a], 1e-3), exact[a])


def test_hitting_time_reversal():
    g = G.build_torus([4, 4])
    x, y, t = 0, 10, 8.0
    a = W.hitting_first(g, x, [y], 6000, seed=6)
    b = W.hitting_first(g, y, [x], 6000, seed=7)
    pa, sa = 1 - a.tail(t)[0], a.tail(t)[1]
    pb, sb = 1 - b.tail(t)[0], b.tail(t)[1]
    assert abs(pa - pb) <= 3 * math.hypot(sa, sb)
    exact = 1 - H.killed_tail(g, [y], t)[x]
    assert abs(pa - exact) <= 3 * sa


def test_hitting_time_mean_matches_exact():
    g = G.build_cycle(9)
    hs = W.hitting_first(g, "uniform", [0], 6000, seed=8)
    assert within(hs.times.mean(), hs.times.std(ddof=1) / math.sqrt(6000), H.hitting_expectation_pi(g, 0))


def test_csv_and_json_outputs(tmp_path):
    g = G.build_cycle(6)
    cfg = W.WalkConfig(g, master_seed=3, snapshot_times=(2.0,), k_targets=(2,))
    s = W.run_trials(cfg, 4)
    W.samples_to_csv(s, tmp_path / "s.csv", cfg)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[1].startswith("trial,start,complete,cover_time,steps,tau_2,Z_0")
    assert len(lines) == 6
    W.samples_sets_json(s, tmp_path / "s.json")
    d = json.loads((tmp_path / "s.json").read_text())
    assert len(d["0"]["tau_k"]["2"]) == 2
