"""Exact hitting times, quasi-stationary pairs and exponential mixtures.

Everything is expressed for the rate-1 continuous-time walk.  The lazy
discrete chain ``K = (I + P) / 2`` is used only inside the fundamental-matrix
routines, whose results are halved once on the way out.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize
from scipy.sparse.csgraph import connected_components

from .graphs import Graph, GraphError, VertexSet, WeightedGraph, as_vertex_set
from .spectral import (
    DEFAULT_SPECTRAL_CAP,
    SpectralCapExceeded,
    check_detailed_balance,
    graph_eigensystem,
    stationary,
    transition,
)

EXACT_TOL = 1e-10
MACROSCOPIC_MASS = 0.25


class BoundViolation(AssertionError):
    """An exact identity or unconditional inequality failed numerically.

    ``name`` identifies the violated relation.
    """

    def __init__(self, name: str, amount: float, detail: str = ""):
        self.name = name
        self.amount = amount
        super().__init__(f"{name} violated by {amount:.3e}" + (f" ({detail})" if detail else ""))


def _check_cap(n, cap):
    if cap is not None and n > cap:
        raise SpectralCapExceeded(f"n={n} exceeds the exact-engine cap {cap}")


def _complement(n, A: VertexSet) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[list(A.ids)] = False
    return np.flatnonzero(mask)


# --------------------------------------------------------------------------
# fundamental-matrix expectations


def fundamental_matrix(K: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """``Z = (I - K + 1 pi^T)^-1`` for an ergodic discrete chain ``K``."""
    n = K.shape[0]
    return linalg.inv(np.eye(n) - K + np.outer(np.ones(n), pi))


def _lazy_stationary_hit(P, pi, j):
    K = 0.5 * (np.eye(P.shape[0]) + P)
    Z = fundamental_matrix(K, pi)
    # sum_m (K^m(j,j) - pi(j)) = Z(j,j) - pi(j)
    lazy = (Z[j, j] - pi[j]) / pi[j]
    return 0.5 * lazy


def hitting_expectation_pi(g, j: int, cap: int | None = DEFAULT_SPECTRAL_CAP) -> float:
    """``E_pi(T_j)`` via the lazy fundamental sum, halved."""
    _check_cap(g.vertex_count, cap)
    if g.vertex_count == 1:
        return 0.0
    return float(_lazy_stationary_hit(transition(g), stationary(g), int(j)))


def collapse(g: Graph, A) -> WeightedGraph:
    """Merge ``A`` into one vertex, placed last; ``B = V \\ A`` keeps its order.

    Parallel edges from a vertex to ``A`` add up as weights and every edge
    inside ``A`` becomes a weight-2 loop, so the merged vertex carries
    stationary mass ``|A| / n``.
    """
    n = g.vertex_count
    A = as_vertex_set(A, n)
    if len(A) == 0 or len(A) == n:
        raise GraphError("collapse needs a nonempty proper subset")
    B = _complement(n, A)
    m = len(B)
    pos = np.full(n, m, dtype=np.int64)
    pos[B] = np.arange(m)
    W = np.zeros((m + 1, m + 1))
    src = np.repeat(np.arange(n), g.degree)
    dst = g.adjacency.ravel()
    ps, pd = pos[src], pos[dst]
    both_a = (ps == m) & (pd == m)
    np.add.at(W, (ps[~both_a], pd[~both_a]), 1.0)
    # each internal edge is seen twice among directed pairs
    W[m, m] = 2.0 * (both_a.sum() / 2)
    return WeightedGraph(W, label=f"{g.label}/A{len(A)}", meta={"B": B, "A": A.ids})


def hitting_expectation_set(g: Graph, A, cap: int | None = DEFAULT_SPECTRAL_CAP) -> float:
    """``E_pi(T_A)`` from the lazy fundamental sum on the collapsed chain."""
    n = g.vertex_count
    A = as_vertex_set(A, n)
    _check_cap(n, cap)
    if len(A) == n:
        return 0.0
    wg = collapse(g, A)
    P = transition(wg)
    pi = stationary(wg)
    return float(_lazy_stationary_hit(P, pi, wg.vertex_count - 1))


def q_ratio(g: Graph, A, o: int | None = None, cap: int | None = DEFAULT_SPECTRAL_CAP) -> float:
    """``q_A = E_pi(T_o) / E_pi(T_A)``; ``o`` defaults to the first point of ``A``."""
    A = as_vertex_set(A, g.vertex_count)
    o = A.ids[0] if o is None else o
    return hitting_expectation_pi(g, o, cap) / hitting_expectation_set(g, A, cap)


def hitting_time_to(g, A) -> np.ndarray:
    """Vector ``E_x(T_A)`` over all ``x`` by the Dirichlet linear solve."""
    n = g.vertex_count
    A = as_vertex_set(A, n)
    P = transition(g)
    B = _complement(n, A)
    out = np.zeros(n)
    if len(B):
        L = np.eye(len(B)) - P[np.ix_(B, B)]
        out[B] = linalg.solve(L, np.ones(len(B)))
    return out


def hitting_time_matrix(g) -> np.ndarray:
    """``H[x, y] = E_x(T_y)``."""
    n = g.vertex_count
    H = np.empty((n, n))
    for y in range(n):
        H[:, y] = hitting_time_to(g, [y])
    return H


def killed_tail(g, A, t: float) -> np.ndarray:
    """``P_x(T_A > t)`` for every ``x`` by the matrix exponential of the killed generator."""
    n = g.vertex_count
    A = as_vertex_set(A, n)
    P = transition(g)
    B = _complement(n, A)
    out = np.zeros(n)
    if len(B):
        Q = np.eye(len(B)) - P[np.ix_(B, B)]
        out[B] = linalg.expm(-t * Q) @ np.ones(len(B))
    return out


def first_hit_probs(g, start, A) -> dict:
    """Harmonic measure ``P_mu(X_{T_A} = a)`` for each ``a`` in ``A``.

    ``start`` is a vertex id, a probability vector, or ``"uniform"``.
    """
    n = g.vertex_count
    A = as_vertex_set(A, n)
    if len(A) == 0:
        raise ValueError("targets must be nonempty")
    mu = _start_vector(n, start)
    P = transition(g)
    B = _complement(n, A)
    probs = {}
    if len(B):
        L = np.eye(len(B)) - P[np.ix_(B, B)]
        rhs = P[np.ix_(B, list(A.ids))]
        try:
            H = linalg.solve(L, rhs)
        except linalg.LinAlgError as exc:
            raise GraphError("harmonic system is singular") from exc
    for col, a in enumerate(A.ids):
        h = np.zeros(n)
        h[a] = 1.0
        if len(B):
            h[B] = H[:, col]
        probs[a] = float(mu @ h)
    return probs


def _start_vector(n, start):
    if isinstance(start, str):
        if start not in ("uniform", "stationary"):
            raise ValueError(f"unknown start {start!r}")
        return np.full(n, 1.0 / n)
    if np.isscalar(start):
        mu = np.zeros(n)
        mu[int(start)] = 1.0
        return mu
    mu = np.asarray(start, dtype=np.float64)
    if mu.shape != (n,) or abs(mu.sum() - 1) > 1e-12 or mu.min() < 0:
        raise ValueError("start distribution must be a probability vector of length n")
    return mu


# --------------------------------------------------------------------------
# killed chain


def _killed_blocks(g, A):
    """Components of ``B`` under the killed chain with their symmetric blocks."""
    n = g.vertex_count
    A = as_vertex_set(A, n)
    if len(A) == 0 or len(A) == n:
        raise GraphError("target set must be nonempty and proper")
    P = transition(g)
    pi = stationary(g)
    check_detailed_balance(P, pi)
    B = _complement(n, A)
    PB = P[np.ix_(B, B)]
    ncomp, labels = connected_components(PB > 0, directed=False)
    blocks = []
    for c in range(ncomp):
        idx = B[labels == c]
        loc = np.flatnonzero(labels == c)
        s = np.sqrt(pi[idx])
        Sb = s[:, None] * PB[np.ix_(loc, loc)] / s[None, :]
        Sb = 0.5 * (Sb + Sb.T)
        gam, phi = linalg.eigh(Sb)
        blocks.append({"idx": idx, "s": s, "gamma": gam[::-1], "phi": phi[:, ::-1], "mass": float(pi[idx].sum())})
    return A, B, pi, blocks


def quasi_stationary(g, A):
    """Quasi-stationary distribution of the chain killed on ``A``.

    Returns ``(alpha, lambda_1, info)`` with ``alpha`` a length-``n`` vector
    supported on the largest component of ``B``.  ``info`` lists the other
    components' total mass.
    """
    A, B, pi, blocks = _killed_blocks(g, A)
    big = [b for b in blocks if b["mass"] > MACROSCOPIC_MASS]
    if len(big) > 1:
        sizes = [len(b["idx"]) for b in blocks]
        masses = [round(b["mass"], 6) for b in blocks]
        raise GraphError(f"ambiguous macroscopic component of B: sizes {sizes}, masses {masses}")
    main = max(blocks, key=lambda b: b["mass"])
    alpha, lam = _perron(main, g.vertex_count)
    P = transition(g)
    resid = np.abs(alpha[main["idx"]] @ P[np.ix_(main["idx"], main["idx"])] - (1 - lam) * alpha[main["idx"]]).sum()
    if resid >= EXACT_TOL:
        raise BoundViolation("quasi_stationary_residual", resid)
    info = {"component_sizes": [len(b["idx"]) for b in blocks], "other_mass": sum(b["mass"] for b in blocks if b is not main), "residual": resid}
    return alpha, lam, info


def _perron(block, n):
    phi1 = block["phi"][:, 0]
    phi1 = phi1 if phi1.sum() >= 0 else -phi1
    phi1 = np.clip(phi1, 0.0, None)
    a = block["s"] * phi1
    alpha = np.zeros(n)
    alpha[block["idx"]] = a / a.sum()
    return alpha, float(1.0 - block["gamma"][0])


@dataclass(frozen=True, eq=False)
class HittingMixture:
    """``P_pi(T_A > t) = sum_i w_i exp(-lam_i t)`` with ``w_i = c_i^2``.

    Modes are sorted by rate; mode 0 is the quasi-stationary mode, whose
    eigenfunction ``f[:, 0]`` is proportional to ``alpha / pi``.  The ``f``
    columns are ``pi``-orthonormal functions on ``V`` vanishing on ``A``.
    """

    A: VertexSet
    weights: np.ndarray
    rates: np.ndarray
    f: np.ndarray
    c: np.ndarray
    alpha: np.ndarray
    lambda1: float
    alpha_pi_l2: float
    pi: np.ndarray
    t_rel: float
    meta: dict = field(default_factory=dict)

    @property
    def pi_A(self) -> float:
        return float(self.pi[list(self.A.ids)].sum())

    @property
    def pi_B(self) -> float:
        return 1.0 - self.pi_A

    @property
    def E_alpha(self) -> float:
        return 1.0 / self.lambda1

    @property
    def secondary_mass(self) -> float:
        """``p = sum_{i>=2} c_i^2``."""
        return float(self.weights[1:].sum())

    @property
    def E_pi(self) -> float:
        return float(np.sum(self.weights / self.rates))

    def tail(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        return np.exp(-np.outer(t, self.rates)) @ self.weights

    def tail_from(self, t: float) -> np.ndarray:
        """``P_x(T_A > t)`` for all ``x`` from the eigen-expansion."""
        return self.f @ (self.c * np.exp(-self.rates * t))


def mixture(g, A, cap: int | None = DEFAULT_SPECTRAL_CAP) -> HittingMixture:
    """Exponential-mixture representation of the stationary hitting tail."""
    n = g.vertex_count
    _check_cap(n, cap)
    A, B, pi, blocks = _killed_blocks(g, A)
    rates, fs, cs, comp = [], [], [], []
    for bi, b in enumerate(blocks):
        for i in range(len(b["idx"])):
            f = np.zeros(n)
            f[b["idx"]] = b["phi"][:, i] / b["s"]
            rates.append(1.0 - b["gamma"][i])
            fs.append(f)
            cs.append(float(np.dot(b["s"], b["phi"][:, i])))
            comp.append((bi, i))
    rates = np.array(rates)
    # quasi-stationary mode: slowest Perron mode, ties broken by component mass
    perrons = [k for k, (bi, i) in enumerate(comp) if i == 0]
    q = min(perrons, key=lambda k: (round(rates[k], 12), -blocks[comp[k][0]]["mass"]))
    rest = sorted((k for k in range(len(rates)) if k != q), key=lambda k: rates[k])
    order = [q] + rest
    rates = rates[order]
    F = np.column_stack([fs[k] for k in order])
    c = np.array([cs[k] for k in order])
    if c[0] < 0:
        c[0], F[:, 0] = -c[0], -F[:, 0]
    alpha, lam1 = _perron(blocks[comp[q][0]], n)
    weights = c**2
    cache = graph_eigensystem(g, cap=cap)
    return HittingMixture(
        A=A,
        weights=weights,
        rates=rates,
        f=F,
        c=c,
        alpha=alpha,
        lambda1=lam1,
        alpha_pi_l2=float(np.sum(alpha[B] ** 2 / pi[B])),
        pi=pi,
        t_rel=cache.t_rel,
        meta={"components": len(blocks)},
    )


def tail_expm(g, A, t) -> np.ndarray:
    """``P_pi(T_A > t)`` by direct matrix exponential (independent route)."""
    pi = stationary(g)
    return np.array([float(pi @ killed_tail(g, A, s)) for s in np.atleast_1d(t)])


# --------------------------------------------------------------------------
# bounds


@dataclass
class ABReport:
    t: np.ndarray
    exact: np.ndarray
    classic_lower: np.ndarray
    classic_upper: np.ndarray
    refined_main: np.ndarray
    refined_slack: np.ndarray
    integrated: dict
    violations: dict

    @property
    def max_violation(self) -> float:
        return max(self.violations.values()) if self.violations else 0.0

    def to_dict(self) -> dict:
        return {
            "t": self.t.tolist(),
            "exact": self.exact.tolist(),
            "classic_lower": self.classic_lower.tolist(),
            "classic_upper": self.classic_upper.tolist(),
            "refined_main": self.refined_main.tolist(),
            "refined_slack": self.refined_slack.tolist(),
            "integrated": self.integrated,
            "violations": self.violations,
        }


def ab_bounds(mix: HittingMixture, t_grid, tol: float = EXACT_TOL, strict: bool = True) -> ABReport:
    """Aldous-Brown sandwich and its refinement on ``t_grid``.

    Checked relations (name: inequality)

    - ``aldous_brown_sandwich``: ``e^{-t/E_a} (1 - t_rel/E_a) <= P_pi(T_A>t) <= e^{-t/E_a} (1 - pi(A))``
    - ``refined_tail``: ``0 <= P_pi(T_A>t) - e^{-t/E_a}/||a/pi||^2 <= p e^{-t/t_rel}``
    - ``refined_mean``: ``0 <= E_pi - E_a/||a/pi||^2 <= p t_rel``
    - ``alpha_vs_pi_mean``: ``0 <= E_a - E_pi <= (1 - 1/||a/pi||^2) E_a``

    With ``strict`` a violation above ``tol`` raises :class:`BoundViolation`.
    """
    t = np.asarray(t_grid, dtype=np.float64)
    Ea, trel, norm2 = mix.E_alpha, mix.t_rel, mix.alpha_pi_l2
    p_alpha = np.exp(-t / Ea)
    exact = mix.tail(t)
    lower = p_alpha * (1.0 - trel / Ea)
    upper = p_alpha * (1.0 - mix.pi_A)
    p = (norm2 - 1.0) / norm2 - mix.pi_A
    main = p_alpha / norm2
    slack = p * np.exp(-t / trel)
    Epi = mix.E_pi
    integ = {
        "E_pi": Epi,
        "E_alpha": Ea,
        "refined_mean_gap": Epi - Ea / norm2,
        "refined_mean_cap": p * trel,
        "alpha_gap": Ea - Epi,
        "alpha_gap_cap": (norm2 - 1.0) / norm2 * Ea,
        "p": p,
    }
    viol = {
        "aldous_brown_sandwich": float(max(np.max(lower - exact), np.max(exact - upper), 0.0)),
        "refined_tail": float(max(np.max(main - exact), np.max(exact - main - slack), 0.0)),
        "refined_mean": float(max(-integ["refined_mean_gap"], integ["refined_mean_gap"] - integ["refined_mean_cap"], 0.0)),
        "alpha_vs_pi_mean": float(max(-integ["alpha_gap"], integ["alpha_gap"] - integ["alpha_gap_cap"], 0.0)),
    }
    rep = ABReport(t=t, exact=exact, classic_lower=lower, classic_upper=upper, refined_main=main, refined_slack=slack, integrated=integ, violations=viol)
    if strict:
        for name, v in viol.items():
            scale = max(1.0, abs(Epi)) if "mean" in name else 1.0
            if v > tol * scale:
                raise BoundViolation(name, v)
    return rep


def log_grid(mix: HittingMixture, points: int = 50, lo: float | None = None, hi: float | None = None) -> np.ndarray:
    lo = 1e-3 * mix.t_rel if lo is None else lo
    hi = 10.0 * mix.E_alpha if hi is None else hi
    return np.geomspace(lo, hi, points)


def t_med(mix: HittingMixture, rtol: float = 1e-12, strict: bool = True) -> float:
    """Solve ``sum_{i>=2} c_i^2 (1 - e^{-lam_i t})^2 = p / 2``.

    ``p = 0`` gives 0.  The root always satisfies ``t <= ln(2 + sqrt 2) / lam_2``
    (each secondary term is at least ``p/2`` there); with ``strict`` this is
    asserted.
    """
    w, lam = mix.weights[1:], mix.rates[1:]
    p = float(w.sum())
    # modes orthogonal to 1_B by symmetry leave roundoff-level weights
    if len(w) == 0 or p <= 1e-14 * mix.pi_B:
        return 0.0

    def fn(t):
        return float(np.dot(w, (1.0 - np.exp(-lam * t)) ** 2)) - 0.5 * p

    lam2 = float(lam.min())
    hi = math.log(2.0 + math.sqrt(2.0)) / lam2
    f_hi = fn(hi)
    if f_hi < 0 and f_hi >= -1e-12 * p:
        # a single secondary mode puts the root exactly on the cap
        return hi
    if f_hi < 0:
        # only reachable through rounding; widen
        while fn(hi) < 0:
            hi *= 2.0
        if strict:
            raise BoundViolation("t_med_bracket", hi * lam2 - math.log(2 + math.sqrt(2)))
    return float(optimize.bisect(fn, 0.0, hi, rtol=rtol, xtol=1e-300, maxiter=400))


def t_med_report(mix: HittingMixture) -> dict:
    tm = t_med(mix)
    lam2 = float(mix.rates[1:].min()) if len(mix.rates) > 1 else math.inf
    return {
        "t_med": tm,
        "t_rel": mix.t_rel,
        "ratio_to_t_rel": tm / mix.t_rel if mix.t_rel > 0 else 0.0,
        "below_t_rel_over_sqrt2": tm <= mix.t_rel / math.sqrt(2.0) * (1 + 1e-12),
        "provable_cap": math.log(2.0 + math.sqrt(2.0)) / lam2 if np.isfinite(lam2) else 0.0,
    }


def dsep_identity_check(g, A, mix: HittingMixture | None = None, tol: float = 1e-8, strict: bool = True) -> dict:
    """Check ``p = 2 sum_{x in B} pi(x) P_x[T_A <= t]^2 - 2 c_1^2 (1 - e^{-lam_1 t})^2``.

    ``t`` is :func:`t_med`, and ``P_x[T_A <= t]`` comes from the matrix
    exponential of the killed generator, not from the mixture.  The sum runs
    over ``x`` outside ``A``: points of ``A`` have ``P_x[T_A <= t] = 1`` and
    would add ``2 pi(A)``.
    """
    mix = mixture(g, A) if mix is None else mix
    tm = t_med(mix)
    n = g.vertex_count
    B = _complement(n, mix.A)
    hit = 1.0 - killed_tail(g, mix.A, tm)
    lhs = mix.secondary_mass
    rhs = 2.0 * float(np.sum(mix.pi[B] * hit[B] ** 2)) - 2.0 / mix.alpha_pi_l2 * (1.0 - math.exp(-mix.lambda1 * tm)) ** 2
    resid = abs(lhs - rhs)
    if strict and resid >= tol:
        raise BoundViolation("secondary_mass_identity", resid)
    return {"t_med": tm, "p": lhs, "rhs": rhs, "residual": resid}


def cheap_norm_bound(mix: HittingMixture) -> tuple[float, float]:
    """``((||a/pi||^2 - 1) / ||a/pi||^2, t_rel / E_alpha)``; first <= second."""
    n2 = mix.alpha_pi_l2
    return (n2 - 1.0) / n2, mix.t_rel / mix.E_alpha


def collapsed_relaxation(g: Graph, A) -> float:
    """Relaxation time of the collapsed lazy chain (continuous scaling doubles it)."""
    wg = collapse(g, A)
    P = transition(wg)
    K = 0.5 * (np.eye(P.shape[0]) + P)
    from .spectral import eigensystem

    cache = eigensystem(K, stationary(wg), cap=None)
    return cache.t_rel


def vt_bound_check(g: Graph, A, m: int, R: float, E_pi_To: float | None = None, mix=None) -> dict:
    """Implied constant in the transitive-graph bound on ``p / (d k)^2``.

    ``m`` selects the growth case; the bracket is evaluated and the ratio
    reported.  Only positivity and finiteness are asserted.
    """
    from .graphs import diameter

    if m < 2:
        raise ValueError("m must be >= 2 (cases 2, 3, 4, >=5)")
    n, d = g.vertex_count, g.degree
    A = as_vertex_set(A, n)
    k = len(A)
    D = diameter(g)
    E = hitting_expectation_pi(g, 0) if E_pi_To is None else E_pi_To
    mix = mixture(g, A) if mix is None else mix
    p = mix.secondary_mass
    lhs = p / (d * k) ** 2
    if m == 2:
        rhs = (d**2 * D**4 + n * (D**2 - R**2)) / (R * E**2)
    elif m == 3:
        rhs = (d**2 * D**4 + n * (math.log(1 + R) + D / R)) / E**2
    elif m == 4:
        rhs = (n * math.log(D / R) / R + d**2 * D**4) / E**2
    else:
        rhs = 1.0 / n
    if not (np.isfinite(lhs) and np.isfinite(rhs) and rhs > 0 and lhs >= -EXACT_TOL):
        raise BoundViolation("vt_bound_finite", abs(lhs))
    return {"m": m, "R": R, "D": D, "n": n, "lhs": lhs, "rhs": rhs, "implied_constant": lhs / rhs, "D^m R": D**m * R}


def union_bound_check(g, A, t: float, o: int | None = None) -> dict:
    """``P_pi(T_A <= t) <= |A| P_pi(T_o <= t)`` evaluated exactly."""
    A = as_vertex_set(A, g.vertex_count)
    o = A.ids[0] if o is None else o
    lhs = 1.0 - tail_expm(g, A, t)[0]
    single = 1.0 - tail_expm(g, [o], t)[0]
    return {"lhs": lhs, "rhs": len(A) * single, "ok": lhs <= len(A) * single + EXACT_TOL}


def cross_term_check(g, Ai, Aj, t: float, o: int = 0) -> dict:
    """Joint-hit bound ``P(E_i, E_j) <= 2 |Ai||Aj| P_pi(T_o<t) max P_x(T_y<t)``.

    ``E_i`` is the event that a stationary walk run for time ``t`` meets
    ``Ai``; the maximum runs over ``x in Ai``, ``y in Aj``.
    """
    Ai = as_vertex_set(Ai, g.vertex_count)
    Aj = as_vertex_set(Aj, g.vertex_count)
    hit = lambda S: 1.0 - tail_expm(g, S, t)[0]
    joint = hit(Ai) + hit(Aj) - hit(sorted(set(Ai.ids) | set(Aj.ids)))
    pmax = max(1.0 - killed_tail(g, [y], t)[x] for x in Ai.ids for y in Aj.ids)
    rhs = 2.0 * len(Ai) * len(Aj) * hit([o]) * pmax
    return {"joint": joint, "rhs": rhs, "ok": joint <= rhs + EXACT_TOL}


# --------------------------------------------------------------------------
# cover-time oracle


def expected_cover_time(g: Graph, start="uniform", max_n: int = 14) -> float:
    """Exact mean cover time by solving the covered-set chain.

    States are ``(S, x)`` with ``x in S``; sets are processed from the full
    set downwards so each level is one linear solve over the positions.
    """
    n = g.vertex_count
    if n > max_n:
        raise ValueError(f"cover-time enumeration refused for n={n} > {max_n}")
    if n == 1:
        return 0.0
    full = (1 << n) - 1
    d = g.degree
    adj = g.adjacency
    value: dict[int, np.ndarray] = {full: np.zeros(n)}
    for size in range(n - 1, 0, -1):
        for combo in itertools.combinations(range(n), size):
            S = 0
            for v in combo:
                S |= 1 << v
            pos = {v: i for i, v in enumerate(combo)}
            M = np.eye(size)
            rhs = np.ones(size)
            for v, i in pos.items():
                for y in adj[v]:
                    y = int(y)
                    if S >> y & 1:
                        M[i, pos[y]] -= 1.0 / d
                    else:
                        rhs[i] += value[S | (1 << y)][y] / d
            sol = linalg.solve(M, rhs)
            vec = np.zeros(n)
            vec[list(combo)] = sol
            value[S] = vec
        # drop levels no longer needed
        for key in [k for k in value if bin(k).count("1") == size + 1]:
            del value[key]
    if isinstance(start, str):
        return float(np.mean([value[1 << v][v] for v in range(n)]))
    v = int(start)
    return float(value[1 << v][v])


def max_hitting_time(g) -> float:
    return float(hitting_time_matrix(g).max())
