"""Cover-time experiments: Gumbel fluctuations, the uncovered set, and the
cycle-times-expander example where the second factorial moment does not
match the Poisson value.

All statistical thresholds used by callers (KS <= 0.08, 3-sigma bands,
p > 0.01) are desk-scale calibration choices, not asymptotic constants.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, stats

from . import spectral, walker
from .graphs import Graph, bfs_distances, build_cycle, build_expander, diameter, feasible_expander_size, strong_product

GUMBEL_S = (-1.0, 0.0, 1.0, 2.0)


# --------------------------------------------------------------------------
# psi


def _check_unit(u):
    u = np.asarray(u, dtype=np.float64)
    if np.any(u < 0) or np.any(u > 1):
        raise ValueError("psi is defined on [0, 1]")
    return u


def psi(u):
    """``2 (u^2 - u + 1/6)``, the closed form of the cosine series."""
    u = _check_unit(u)
    out = 2.0 * (u * u - u + 1.0 / 6.0)
    return float(out) if out.ndim == 0 else out


def psi_series(u, K: int = 10**6, chunk: int = 1 << 16):
    """Partial sum ``(2/pi^2) sum_{k<=K} cos(2 pi k u) / k^2``."""
    u = np.atleast_1d(_check_unit(u))
    acc = np.zeros(u.shape)
    for lo in range(1, K + 1, chunk):
        k = np.arange(lo, min(K, lo + chunk - 1) + 1, dtype=np.float64)
        acc += (np.cos(2.0 * np.pi * np.outer(u, k)) / k**2).sum(axis=1)
    out = 2.0 / np.pi**2 * acc
    return float(out[0]) if out.shape == (1,) else out


@dataclass
class PsiTable:
    grid: np.ndarray
    closed: np.ndarray
    series: np.ndarray
    K: int

    @property
    def max_gap(self) -> float:
        return float(np.abs(self.closed - self.series).max())

    @staticmethod
    def integral() -> float:
        val, _ = integrate.quad(lambda u: psi(u), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
        return val


def psi_table(points: int = 101, K: int = 10**6) -> PsiTable:
    grid = np.linspace(0.0, 1.0, points)
    return PsiTable(grid=grid, closed=psi(grid), series=psi_series(grid, K), K=K)


def cycle_green_profile(m: int) -> np.ndarray:
    """``2 G(0, j) + 1/(3m)`` on ``C_m``, which equals ``m psi(j/m)`` exactly.

    ``G`` is the rate-1 continuous-time Green function; the constant comes
    from the missing ``k = m/2, ..., m-1`` half of the Fourier sum.
    """
    k = np.arange(1, m)
    beta = 1.0 - np.cos(2.0 * np.pi * k / m)
    j = np.arange(m)
    G = (np.cos(2.0 * np.pi * np.outer(j, k) / m) / beta).sum(axis=1) / m
    return 2.0 * G + 1.0 / (3.0 * m)


# --------------------------------------------------------------------------
# time window and E_pi(T_o)


@dataclass(frozen=True)
class TimeWindow:
    """``t_s = E_pi(T_o) (log n + s)``."""

    base: float
    n: int
    s_values: tuple
    provenance: str

    def __post_init__(self):
        s = tuple(float(v) for v in self.s_values)
        if any(b <= a for a, b in zip(s, s[1:])):
            raise ValueError("s values must be strictly increasing")
        object.__setattr__(self, "s_values", s)

    def t(self, s: float) -> float:
        return self.base * (math.log(self.n) + s)

    @property
    def times(self) -> tuple:
        return tuple(self.t(s) for s in self.s_values)


@dataclass(frozen=True)
class EpiEstimate:
    value: float
    stderr: float
    provenance: str


def estimate_Epi_To(g: Graph, mode: str = "exact", trials: int = 2000, seed: int | None = None, cap: int = spectral.DEFAULT_SPECTRAL_CAP, o: int = 0) -> EpiEstimate:
    """``E_pi(T_o)`` exactly (any closed-form or dense route) or by Monte Carlo.

    ``mode="auto"`` tries the exact routes first.  Monte Carlo averages the
    hitting time of ``o`` from uniform starts.
    """
    if mode in ("exact", "auto"):
        try:
            val, prov = spectral.exact_Epi_To(g, cap=cap)
            return EpiEstimate(val, 0.0, prov)
        except spectral.SpectralCapExceeded:
            if mode == "exact":
                raise
    if mode not in ("mc", "auto"):
        raise ValueError(f"unknown mode {mode!r}")
    if trials < 100:
        raise ValueError("Monte Carlo estimate needs at least 100 trials")
    if seed is None:
        raise ValueError("Monte Carlo estimate needs a seed")
    hs = walker.hitting_first(g, "uniform", [o], trials, seed)
    return EpiEstimate(float(hs.times.mean()), float(hs.times.std(ddof=1) / math.sqrt(trials)), "mc")


# --------------------------------------------------------------------------
# reports


@dataclass
class ExperimentReport:
    kind: str
    graph: str
    trials: int
    seed: int | None
    data: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    runtime: float = 0.0

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def factorial_moment(z: np.ndarray, k: int) -> np.ndarray:
    """Per-trial ``Z (Z-1) ... (Z-k+1)``."""
    z = np.asarray(z, dtype=np.float64)
    out = np.ones_like(z)
    for j in range(k):
        out *= z - j
    return out


def _mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 2:
        return float(x.mean()), math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def cover_samples(g: Graph, trials: int, seed: int, E: float, s_values=(), k_targets=(), start="uniform", workers: int = 1, store_sets: bool = True) -> list:
    """Until-cover trials with snapshots at ``t_s`` for each ``s``."""
    win = TimeWindow(E, g.vertex_count, tuple(s_values), "given")
    cfg = walker.WalkConfig(g, master_seed=seed, start=start, snapshot_times=win.times, k_targets=tuple(k_targets), E_pi_To=E, store_sets=store_sets)
    return walker.run_trials(cfg, trials, workers=workers)


# --------------------------------------------------------------------------
# experiments


def gumbel_experiment(g: Graph, trials: int, seed: int, E: EpiEstimate | None = None, samples=None, workers: int = 1, start="uniform") -> ExperimentReport:
    """KS distance of ``tau_cov / E_pi(T_o) - log n`` to the standard Gumbel law."""
    t0 = time.perf_counter()
    E = estimate_Epi_To(g, "auto", seed=seed) if E is None else E
    if samples is None:
        samples = cover_samples(g, trials, seed, E.value, workers=workers, start=start)
    n = g.vertex_count
    ct = np.array([s.cover_time for s in samples])
    complete = np.isfinite(ct)
    y = np.sort(ct[complete] / E.value - math.log(n))
    ks = stats.kstest(y, stats.gumbel_r.cdf)
    tails = {}
    for s in GUMBEL_S:
        emp = float(np.mean(y <= s))
        tails[s] = {"empirical": emp, "gumbel": math.exp(-math.exp(-s)), "stderr": math.sqrt(emp * (1 - emp) / len(y))}
    rep = ExperimentReport("gumbel", g.label, len(samples), seed)
    rep.data = {
        "n": n,
        "E_pi_To": E.value,
        "E_provenance": E.provenance,
        "ks": float(ks.statistic),
        "ks_pvalue": float(ks.pvalue),
        "incomplete": int((~complete).sum()),
        "mean_y": float(y.mean()),
        "tails": tails,
    }
    rep.tables["ecdf"] = {"s": y.tolist(), "F": (np.arange(1, len(y) + 1) / len(y)).tolist()}
    if (~complete).mean() > 0.01:
        rep.flags.append("more than 1% of trials hit the cap")
    rep.runtime = time.perf_counter() - t0
    return rep


def uncovered_poisson_experiment(g: Graph, s_list, trials: int, k_max: int, seed: int, E: EpiEstimate | None = None, samples=None, workers: int = 1, start="uniform", horizon_only: bool = False) -> ExperimentReport:
    """Factorial moments of ``Z_s = |U(t_s)|`` against ``e^{-ks}`` and the Poisson pmf.

    With ``horizon_only`` the trials stop at the last ``t_s`` instead of at
    cover, which is all this experiment needs.
    """
    if k_max > 4 or k_max < 1:
        raise ValueError("k_max must be in 1..4")
    t0 = time.perf_counter()
    E = estimate_Epi_To(g, "auto", seed=seed) if E is None else E
    s_list = tuple(sorted(float(s) for s in s_list))
    if samples is None:
        if horizon_only:
            win = TimeWindow(E.value, g.vertex_count, s_list, E.provenance)
            cfg = walker.WalkConfig(g, master_seed=seed, start=start, horizon=win.times[-1], snapshot_times=win.times, store_sets=False)
            samples = walker.run_trials(cfg, trials, workers=workers)
        else:
            samples = cover_samples(g, trials, seed, E.value, s_list, workers=workers, start=start)
    Z = _snapshot_Z(samples, E.value, g.vertex_count, s_list)
    rows = []
    per_s = {}
    for j, s in enumerate(s_list):
        z = Z[:, j]
        moments = {}
        for k in range(1, k_max + 1):
            m, se = _mean_se(factorial_moment(z, k))
            scale = math.exp(k * s)
            moments[k] = {"mean": m, "stderr": se, "scaled": m * scale, "scaled_stderr": se * scale, "target": math.exp(-k * s)}
            rows.append({"s": s, "k": k, "estimate": m, "stderr": se, "scaled": m * scale, "scaled_stderr": se * scale})
        lam = math.exp(-s)
        jmax = int(max(z.max(), 4))
        pmf = {int(i): {"empirical": float(np.mean(z == i)), "poisson": float(stats.poisson.pmf(i, lam))} for i in range(jmax + 1)}
        p0 = float(np.mean(z == 0))
        per_s[s] = {
            "moments": moments,
            "pmf": pmf,
            "P0": {"empirical": p0, "stderr": math.sqrt(p0 * (1 - p0) / len(z)), "target": math.exp(-lam)},
            "tv_poisson": 0.5 * sum(abs(v["empirical"] - v["poisson"]) for v in pmf.values()) + 0.5 * float(stats.poisson.sf(jmax, lam)),
        }
    rep = ExperimentReport("poisson", g.label, len(samples), seed)
    rep.data = {"n": g.vertex_count, "E_pi_To": E.value, "E_provenance": E.provenance, "per_s": per_s}
    rep.tables["moments"] = rows
    rep.runtime = time.perf_counter() - t0
    return rep


def _snapshot_Z(samples, E, n, s_list):
    want = [E * (math.log(n) + s) for s in s_list]
    out = np.empty((len(samples), len(s_list)))
    for i, smp in enumerate(samples):
        by_t = {sn.time: sn for sn in smp.snapshots}
        for j, t in enumerate(want):
            sn = _lookup(by_t, t)
            out[i, j] = sn.Z
    return out


def _lookup(by_t, t):
    for key, sn in by_t.items():
        if abs(key - t) <= 1e-9 * max(1.0, abs(t)):
            return sn
    raise KeyError(f"no snapshot at t={t}")


class _Distances:
    """Graph distances, by coordinates on tori and cached BFS otherwise."""

    def __init__(self, g: Graph):
        self.g = g
        self.sides = g.meta.get("sides") if g.meta.get("kind") == "torus" else None
        self.cache: dict[int, np.ndarray] = {}

    def __call__(self, x: int, y) -> np.ndarray:
        if self.sides is not None:
            cx = np.array(np.unravel_index(x, self.sides))
            cy = np.array(np.unravel_index(np.asarray(y), self.sides))
            L = np.array(self.sides).reshape(-1, *([1] * (cy.ndim - 1)))
            dd = np.abs(cy - cx.reshape(L.shape))
            return np.minimum(dd, L - dd).sum(axis=0)
        if x not in self.cache:
            self.cache[x] = bfs_distances(self.g, x)
        return self.cache[x][y]

    def mindist(self, ids) -> int:
        ids = list(ids)
        best = math.inf
        for i in range(len(ids) - 1):
            best = min(best, int(np.min(self(ids[i], np.array(ids[i + 1:])))))
        return best


def _cells(g: Graph, cells: int = 8) -> np.ndarray:
    """Coarse partition of the vertices: octant-like blocks on tori, id ranges otherwise."""
    n = g.vertex_count
    if g.meta.get("kind") == "torus":
        sides = g.meta["sides"]
        coords = np.array(np.unravel_index(np.arange(n), sides))
        lab = np.zeros(n, dtype=np.int64)
        for c, L in zip(coords, sides):
            lab = lab * 2 + (c >= L // 2)
        return lab
    return np.arange(n) * cells // n


def _chi2_uniform(labels, positions, weights=None) -> float:
    ncell = int(labels.max()) + 1
    expected_frac = np.bincount(labels, minlength=ncell) / len(labels)
    obs = np.bincount(labels[positions], minlength=ncell)
    if obs.sum() < 5 * ncell:
        return math.nan
    return float(stats.chisquare(obs, expected_frac * obs.sum()).pvalue)


def product_law_checks(g: Graph, s: float, trials: int, seed: int, delta: int | None = None, E: EpiEstimate | None = None, samples=None, workers: int = 1) -> ExperimentReport:
    """Low-order checks of the product Bernoulli law of ``U(t_s)``.

    (a) per-vertex uncovered frequency ``E[Z]/n`` against ``e^{-s}/n``;
    (b) joint frequency over all ordered pairs at distance ``>= delta``
        against ``e^{-2s}/n^2``;
    (c) chi-square uniformity of ``X_{t_s}`` on coarse cells, overall and
        conditioned on ``Z_s = 0`` and ``Z_s >= 1``.
    """
    t0 = time.perf_counter()
    n = g.vertex_count
    E = estimate_Epi_To(g, "auto", seed=seed) if E is None else E
    if samples is None:
        win = TimeWindow(E.value, n, (s,), E.provenance)
        cfg = walker.WalkConfig(g, master_seed=seed, horizon=win.times[0], snapshot_times=win.times, store_sets=True)
        samples = walker.run_trials(cfg, trials, workers=workers)
    t_s = E.value * (math.log(n) + s)
    D = diameter(g)
    delta = max(1, D // 3) if delta is None else int(delta)
    dist = _Distances(g)
    far_from_0 = int(np.sum(dist(0, np.arange(n)) >= delta)) if g.vertex_transitive else None
    snaps = [_lookup({sn.time: sn for sn in smp.snapshots}, t_s) for smp in samples]
    Z = np.array([sn.Z for sn in snaps], dtype=float)
    freq, freq_se = _mean_se(Z / n)
    pair_counts = np.zeros(len(snaps))
    for i, sn in enumerate(snaps):
        ids = sn.uncovered
        if ids is None:
            raise ValueError("product-law checks need stored uncovered sets")
        if len(ids) > 1:
            for a in range(len(ids)):
                others = np.delete(ids, a)
                pair_counts[i] += int(np.sum(dist(int(ids[a]), others) >= delta))
    if far_from_0 is None:
        far_total = sum(int(np.sum(dist(x, np.arange(n)) >= delta)) for x in range(n))
    else:
        far_total = n * far_from_0
    pf, pf_se = _mean_se(pair_counts / far_total)
    events = int(pair_counts.sum())
    labels = _cells(g)
    pos = np.array([sn.position for sn in snaps])
    rep = ExperimentReport("product-law", g.label, len(samples), seed)
    rep.data = {
        "n": n,
        "s": s,
        "delta": delta,
        "separated_pairs": far_total,
        "vertex_frequency": {"estimate": freq, "stderr": freq_se, "target": math.exp(-s) / n},
        "pair_frequency": {"estimate": pf, "stderr": pf_se, "target": math.exp(-2 * s) / n**2, "joint_events": events},
        "position_pvalues": {
            "all": _chi2_uniform(labels, pos),
            "Z=0": _chi2_uniform(labels, pos[Z == 0]),
            "Z>=1": _chi2_uniform(labels, pos[Z >= 1]),
        },
        "limitation": "total variation to the product law is probed only through marginals, pairs and the walker position",
    }
    if events < 30:
        rep.flags.append(f"only {events} separated joint events; pair interval is wide")
    rep.runtime = time.perf_counter() - t0
    return rep


def last_k_experiment(g: Graph, k: int, trials: int, seed: int, E: EpiEstimate | None = None, samples=None, baseline_factor: int = 5, workers: int = 1, min_n: int = 16) -> ExperimentReport:
    """Compare ``U(tau_k)`` with a uniformly chosen ``k``-subset.

    ``k >= 2``: two-sample KS on the min pairwise distance against a
    uniform-subset baseline of ``baseline_factor * trials`` draws, plus
    per-coordinate chi-square on the cells.  ``k = 1``: chi-square of the
    last point over the cells.
    """
    if k not in (1, 2, 3):
        raise ValueError("k must be 1, 2 or 3")
    n = g.vertex_count
    rep = ExperimentReport("last-k", g.label, trials, seed)
    if n < min_n:
        rep.data = {"skipped": f"n={n} < {min_n}: too small for the last-k comparison"}
        return rep
    t0 = time.perf_counter()
    if samples is None:
        E = estimate_Epi_To(g, "auto", seed=seed) if E is None else E
        samples = cover_samples(g, trials, seed, E.value, k_targets=(k,), workers=workers)
    sets = [smp.tau_k[k][1] for smp in samples if k in smp.tau_k and len(smp.tau_k[k][1]) == k]
    labels = _cells(g)
    data = {"k": k, "sets": len(sets), "n": n}
    if k == 1:
        data["cell_pvalue"] = _chi2_uniform(labels, np.array([s[0] for s in sets]))
    else:
        dist = _Distances(g)
        stat = np.array([dist.mindist(s) for s in sets])
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**31 - 1,)))
        base = np.array([dist.mindist(rng.choice(n, size=k, replace=False)) for _ in range(baseline_factor * len(sets))])
        ks = stats.ks_2samp(stat, base)
        data.update(
            {
                "ks": float(ks.statistic),
                "ks_pvalue": float(ks.pvalue),
                "mean_mindist": float(stat.mean()),
                "baseline_mean_mindist": float(base.mean()),
                "cell_pvalue": _chi2_uniform(labels, np.concatenate(sets)),
            }
        )
        rep.tables["mindist"] = {"sample": stat.tolist(), "baseline_quantiles": np.quantile(base, np.linspace(0, 1, 21)).tolist()}
    rep.data = data
    rep.runtime = time.perf_counter() - t0
    return rep


# --------------------------------------------------------------------------
# counter-example


def default_gap_floor(degree: int) -> float:
    """``min(0.1, (1 - 2 sqrt(d-1)/d) / 2)``: half the Ramanujan gap, capped at 0.1."""
    return min(0.1, 0.5 * (1.0 - 2.0 * math.sqrt(degree - 1) / degree))


def counterexample_graph(a: float, m: int, degree: int = 4, seed: int = 0, gap_floor: float | None = None) -> Graph:
    """``C_m`` strong-times a certified random ``degree``-regular graph of size ``~ a m log m``."""
    gap_floor = default_gap_floor(degree) if gap_floor is None else gap_floor
    size = feasible_expander_size(a * m * math.log(m), degree)
    e = build_expander(size, degree, seed=seed, gap_floor=gap_floor)
    return strong_product(build_cycle(m), e)


def theta_estimate(d_exp: int, m: int, trials: int, horizon: float | None = None, seed: int = 0, a: float = 1.0, graph: Graph | None = None, allow_short: bool = False) -> dict:
    """Estimate the limiting self local time on a cycle-times-expander proxy.

    The estimator is the centred occupation time ``E_o L_o(h) - h/n``;
    the centring removes the stationary drift of the finite proxy.  The same
    trials at ``2h`` give the doubling diagnostic.
    """
    g = counterexample_graph(a, m, d_exp, seed=seed) if graph is None else graph
    h = float(m * m) if horizon is None else float(horizon)
    if h < m * m and not allow_short:
        raise ValueError(f"horizon {h} below m^2 = {m * m}")
    n = g.vertex_count
    one = walker.local_time(g, 0, 0, h, trials, seed)
    two = walker.local_time(g, 0, 0, 2 * h, trials, seed + 1)
    th1 = one.mean - h / n
    th2 = two.mean - 2 * h / n
    se = math.hypot(one.stderr, two.stderr)
    return {
        "theta": th1,
        "stderr": one.stderr,
        "horizon": h,
        "theta_doubled": th2,
        "doubling_change": th2 - th1,
        "converged": abs(th2 - th1) < max(se, 1e-12),
        "raw_mean": one.mean,
        "graph": g.label,
    }


def c2(a: float, theta: float) -> float:
    """``int_0^1 exp(psi(u/2) / (theta a)) du`` by adaptive quadrature."""
    val, err = integrate.quad(lambda u: math.exp(psi(u / 2.0) / (theta * a)), 0.0, 1.0, epsabs=1e-10, epsrel=1e-12, limit=200)
    return val


def counterexample_experiment(a: float, m: int, s: float, trials: int, seed: int, degree: int = 4, theta: dict | None = None, theta_trials: int = 2000, graph: Graph | None = None, workers: int = 1, k_max: int = 3) -> ExperimentReport:
    """Second factorial moment of ``Z_s`` on the cycle-times-expander graph.

    Reports ``E[Z^(2)] e^{2s}`` with its stderr, the quadrature value of
    ``c_2`` from the estimated local time and from the exact ``G(o, o)``,
    and the Jensen gap ``c_2 - 1``.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    t0 = time.perf_counter()
    g = counterexample_graph(a, m, degree, seed=seed) if graph is None else graph
    n = g.vertex_count
    E, prov = spectral.exact_Epi_To(g)
    G_oo = spectral.product_green_diagonal(*g.meta["factors"], 0)
    if theta is None:
        theta = theta_estimate(degree, m, theta_trials, seed=seed, graph=g)
    if not np.isfinite(theta["theta"]) or theta["theta"] <= 0:
        raise ValueError("theta estimate unavailable")
    pois = uncovered_poisson_experiment(g, [s], trials, k_max, seed, E=EpiEstimate(E, 0.0, prov), workers=workers, horizon_only=True)
    mom = pois.data["per_s"][float(s)]["moments"]
    val, se = mom[2]["scaled"], mom[2]["scaled_stderr"]
    c2_theta = c2(a, theta["theta"])
    c2_green = c2(a, G_oo)
    rep = ExperimentReport("counterexample", g.label, trials, seed)
    rep.data = {
        "a": a,
        "m": m,
        "s": s,
        "n": n,
        "expander_size": g.meta["factors"][1].vertex_count,
        "expander_gap": g.meta["factors"][1].meta.get("gap"),
        "E_pi_To": E,
        "E_provenance": prov,
        "G_oo": G_oo,
        "theta": theta,
        "second_moment_scaled": val,
        "second_moment_stderr": se,
        "c2": c2_theta,
        "c2_from_G_oo": c2_green,
        "jensen_gap": c2_theta - 1.0,
        "excess_sigma": (val - 1.0) / se if se > 0 else math.nan,
        "c2_sigma": (val - c2_theta) / se if se > 0 else math.nan,
        "moments": mom,
    }
    rep.runtime = time.perf_counter() - t0
    return rep


def third_moment_guard(a: float, m: int, s_values: Sequence[float], trials: int, seed: int, ceiling: float = 50.0, degree: int = 4, graph: Graph | None = None, samples_report: ExperimentReport | None = None) -> ExperimentReport:
    """``E[Z^(3)] e^{3s}`` on a grid of ``s``; asserted finite and below ``ceiling``."""
    g = counterexample_graph(a, m, degree, seed=seed) if graph is None else graph
    if samples_report is None:
        E, prov = spectral.exact_Epi_To(g)
        samples_report = uncovered_poisson_experiment(g, s_values, trials, 3, seed, E=EpiEstimate(E, 0.0, prov), horizon_only=True)
    rows = []
    for s, block in samples_report.data["per_s"].items():
        m3 = block["moments"][3]
        rows.append({"s": s, "scaled": m3["scaled"], "scaled_stderr": m3["scaled_stderr"], "raw": m3["mean"], "raw_stderr": m3["stderr"]})
    ok = all(np.isfinite(r["scaled"]) and r["scaled"] < ceiling for r in rows)
    rep = ExperimentReport("third-moment", g.label, samples_report.trials, seed)
    rep.data = {"rows": rows, "ceiling": ceiling, "within_ceiling": ok}
    return rep


def matthews_sanity(g: Graph, trials: int, seed: int, slack: float = 0.10) -> ExperimentReport:
    """Empirical mean cover time against ``t_hit (1 + log n)``."""
    from .hitting import max_hitting_time

    n = g.vertex_count
    t_hit = max_hitting_time(g) if n > 1 else 0.0
    bound = t_hit * (1.0 + math.log(n)) if n > 1 else 0.0
    if n > 1:
        E, _ = spectral.exact_Epi_To(g)
        cfg = walker.WalkConfig(g, master_seed=seed, start=0, E_pi_To=E)
        ct = np.array([smp.cover_time for smp in walker.run_trials(cfg, trials)])
        mean, se = _mean_se(ct)
    else:
        mean, se = 0.0, 0.0
    rep = ExperimentReport("matthews", g.label, trials, seed)
    rep.data = {"mean_cover": mean, "stderr": se, "t_hit": t_hit, "bound": bound, "holds": mean <= bound * (1 + slack)}
    return rep
