"""Dense spectral engine for the rate-1 continuous-time walk.

All quantities refer to the generator ``I - P``.  With ``beta_i`` its
eigenvalues and ``f_i`` the eigenfunctions normalised in ``l2(pi)``,

    p_t(x, y) = pi(y) * sum_i f_i(x) f_i(y) exp(-beta_i t).

The Green function is the continuous-time one, ``G(x, y) = int_0^inf
(p_t(x, y) - pi(y)) dt``; the lazy discrete chain gives exactly twice it.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .graphs import Graph, GraphError, VertexSet, WeightedGraph, as_vertex_set, bfs_distances, diameter

DEFAULT_SPECTRAL_CAP = 1500
BALANCE_TOL = 1e-12
EIGEN_RESIDUAL_TOL = 1e-10
EXHAUSTIVE_PROFILE_MAX = 18


class SpectralCapExceeded(RuntimeError):
    """The dense engine refused a graph above its size cap."""


class DetailedBalanceError(ValueError):
    pass


# --------------------------------------------------------------------------
# operators


def transition(g) -> np.ndarray:
    """Dense row-stochastic transition matrix."""
    if isinstance(g, WeightedGraph):
        w = g.weights
        return w / w.sum(axis=1, keepdims=True)
    if g.vertex_count == 1:
        return np.ones((1, 1))
    return g.csr().toarray() / g.degree


def stationary(g) -> np.ndarray:
    """Reversible measure, proportional to total vertex weight."""
    if isinstance(g, WeightedGraph):
        tw = g.total_weight
        return tw / tw.sum()
    n = g.vertex_count
    return np.full(n, 1.0 / n)


@dataclass(frozen=True, eq=False)
class SpectralCache:
    """Eigen-decomposition of ``I - P`` in the ``pi`` inner product.

    ``f[:, i]`` is the ``i``-th eigenfunction, ``beta`` ascending with
    ``beta[0] == 0`` and ``f[:, 0] == 1``.
    """

    beta: np.ndarray
    f: np.ndarray
    pi: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.pi.shape[0]

    @property
    def gap(self) -> float:
        return float(self.beta[1]) if self.n > 1 else math.inf

    @property
    def t_rel(self) -> float:
        return 1.0 / self.gap if self.n > 1 else 0.0


def check_detailed_balance(P, pi, tol=BALANCE_TOL) -> float:
    flow = pi[:, None] * P
    err = float(np.abs(flow - flow.T).max())
    if err > tol:
        raise DetailedBalanceError(f"detailed balance violated by {err:.3e} (tol {tol:g})")
    return err


def eigensystem(P, pi, cap: int | None = DEFAULT_SPECTRAL_CAP) -> SpectralCache:
    """Full eigensystem of a reversible pair ``(P, pi)``.

    Diagonalises the symmetric matrix ``D^1/2 (I - P) D^-1/2`` with
    ``D = diag(pi)``.
    """
    P = np.asarray(P, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.float64)
    n = pi.shape[0]
    if cap is not None and n > cap:
        raise SpectralCapExceeded(f"n={n} exceeds the dense spectral cap {cap}")
    check_detailed_balance(P, pi)
    s = np.sqrt(pi)
    sym = np.eye(n) - s[:, None] * P / s[None, :]
    sym = 0.5 * (sym + sym.T)
    try:
        beta, phi = linalg.eigh(sym)
    except linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"symmetric eigensolver failed: {exc}") from exc
    resid = np.abs(sym @ phi - phi * beta).max()
    if resid > EIGEN_RESIDUAL_TOL * max(1.0, n ** 0.5):
        raise RuntimeError(f"eigen residual {resid:.2e} above tolerance")
    f = phi / s[:, None]
    # the generator has a simple zero eigenvalue on a connected chain
    beta = beta.copy()
    beta[0] = 0.0
    f[:, 0] = 1.0
    if n > 1 and beta[1] <= 1e-12:
        raise GraphError("chain is reducible (second eigenvalue is zero)")
    return SpectralCache(beta=beta, f=f, pi=pi)


def graph_eigensystem(g, cap: int | None = DEFAULT_SPECTRAL_CAP) -> SpectralCache:
    return eigensystem(transition(g), stationary(g), cap=cap)


def heat_kernel(cache: SpectralCache, t: float, x=None, y=None):
    """``p_t(x, y)``; the full matrix when ``x`` and ``y`` are omitted."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    w = np.exp(-cache.beta * t)
    fx = cache.f if x is None else cache.f[x]
    fy = cache.f if y is None else cache.f[y]
    piy = cache.pi if y is None else cache.pi[y]
    if x is None and y is None:
        return (fx * w) @ fy.T * piy[None, :]
    if x is None:
        return (fx * w) @ fy * piy
    if y is None:
        return (fy * w) @ fx * piy
    return float(np.dot(fx * w, fy) * piy)


def green(cache: SpectralCache, x=None, y=None):
    """Continuous-time Green function ``sum_{i>=2} f_i(x) f_i(y) pi(y) / beta_i``."""
    inv = np.zeros_like(cache.beta)
    inv[1:] = 1.0 / cache.beta[1:]
    f = cache.f
    if x is None and y is None:
        return (f * inv) @ f.T * cache.pi[None, :]
    if x is None or y is None:
        raise ValueError("give both x and y, or neither")
    return float(np.dot(f[x] * inv, f[y]) * cache.pi[y])


def eigentime(cache: SpectralCache) -> float:
    """``sum_{i>=2} 1 / beta_i``."""
    return float(np.sum(1.0 / cache.beta[1:]))


def export_cache_json(cache: SpectralCache, path=None) -> str:
    """JSON pinning format for tiny graphs (``n <= 32``)."""
    if cache.n > 32:
        raise ValueError("cache export is limited to n <= 32")
    payload = {
        "n": cache.n,
        "beta": cache.beta.tolist(),
        "f": cache.f.ravel().tolist(),
        "pi": cache.pi.tolist(),
    }
    text = json.dumps(payload)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def load_cache_json(text: str) -> SpectralCache:
    d = json.loads(text)
    n = d["n"]
    return SpectralCache(beta=np.array(d["beta"]), f=np.array(d["f"]).reshape(n, n), pi=np.array(d["pi"]))


# --------------------------------------------------------------------------
# closed-form spectra for tori and strong products


def cycle_adjacency_spectrum(m: int) -> np.ndarray:
    return 2.0 * np.cos(2.0 * np.pi * np.arange(m) / m)


def torus_generator_spectrum(sides) -> np.ndarray:
    """All ``beta`` of the torus walk, ``1 - mean_a cos(2 pi k_a / L_a)``."""
    sides = list(sides)
    dim = len(sides)
    acc = np.zeros(1)
    for L in sides:
        c = np.cos(2.0 * np.pi * np.arange(L) / L) / dim
        acc = (acc[:, None] + c[None, :]).ravel()
    return 1.0 - acc


def torus_return_probability(sides, t) -> np.ndarray:
    """``p_t(o, o)`` on a torus as a product of one-dimensional kernels.

    Each axis moves at rate ``1/dim``, so the axis kernel is the cycle
    kernel evaluated at ``t / dim``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    dim = len(sides)
    out = np.ones_like(t)
    for L in sides:
        b = 1.0 - np.cos(2.0 * np.pi * np.arange(L) / L)
        out *= np.exp(-np.outer(t / dim, b)).mean(axis=1)
    return out


def _factor_adjacency_eig(g: Graph):
    kind = g.meta.get("kind")
    if kind == "cycle":
        m = g.vertex_count
        vals = cycle_adjacency_spectrum(m)
        # real Fourier basis
        x = np.arange(m)
        vecs = np.empty((m, m))
        vecs[:, 0] = 1.0 / math.sqrt(m)
        col = 1
        for k in range(1, m // 2 + 1):
            if 2 * k == m:
                vecs[:, col] = np.cos(np.pi * x) / math.sqrt(m)
                col += 1
            else:
                vecs[:, col] = np.cos(2 * np.pi * k * x / m) * math.sqrt(2.0 / m)
                vecs[:, col + 1] = np.sin(2 * np.pi * k * x / m) * math.sqrt(2.0 / m)
                col += 2
        order = [0]
        for k in range(1, m // 2 + 1):
            order += [k] if 2 * k == m else [k, m - k]
        return vals[order], vecs
    a = g.csr().toarray()
    vals, vecs = np.linalg.eigh(a)
    return vals, vecs


def product_generator_spectrum(g1: Graph, g2: Graph, with_vectors: bool = False):
    """Generator spectrum of ``g1 x g2`` (strong product).

    The product adjacency is ``(A1 + I) (x) (A2 + I) - I``.
    """
    a1, u1 = _factor_adjacency_eig(g1)
    a2, u2 = _factor_adjacency_eig(g2)
    deg = (g1.degree + 1) * (g2.degree + 1) - 1
    beta = 1.0 - (np.outer(a1 + 1.0, a2 + 1.0) - 1.0) / deg
    if with_vectors:
        return beta, u1, u2
    return beta


def product_green_diagonal(g1: Graph, g2: Graph, o: int = 0) -> float:
    """``G(o, o)`` on a strong product from the factor eigenvectors."""
    beta, u1, u2 = product_generator_spectrum(g1, g2, with_vectors=True)
    n2 = g2.vertex_count
    o1, o2 = divmod(int(o), n2)
    w = np.outer(u1[o1] ** 2, u2[o2] ** 2)
    zero = np.abs(beta) < 1e-10
    if zero.sum() != 1:
        raise GraphError("product chain must have a simple zero eigenvalue")
    return float(np.sum(w[~zero] / beta[~zero]))


def exact_Epi_To(g: Graph, cap: int | None = DEFAULT_SPECTRAL_CAP, o: int | None = None):
    """Exact ``E_pi(T_o)`` and the route used, as ``(value, provenance)``.

    With ``o=None`` the value is the average over ``o``, which by the
    eigentime identity is ``sum_{i>=2} 1/beta_i``; on transitive graphs it
    equals ``E_pi(T_o)`` for every ``o``.  Tori use the Fourier spectrum,
    strong products the factor spectra, anything else the dense engine.
    """
    kind = g.meta.get("kind")
    n = g.vertex_count
    if n == 1:
        return 0.0, "exact-trivial"
    if kind == "torus" and (o is None or g.vertex_transitive):
        beta = torus_generator_spectrum(g.meta["sides"])
        beta = np.sort(beta)[1:]
        return float(np.sum(1.0 / beta)), "exact-fourier"
    if kind == "strong_product":
        g1, g2 = g.meta["factors"]
        if o is None:
            return product_eigentime(g1, g2), "exact-product"
        return n * product_green_diagonal(g1, g2, o), "exact-product"
    if cap is not None and n > cap:
        raise SpectralCapExceeded(f"n={n} exceeds cap {cap} and no closed-form route applies")
    cache = graph_eigensystem(g, cap=cap)
    if o is None:
        return eigentime(cache), "exact-dense"
    return float(green(cache, o, o) / cache.pi[o]), "exact-dense"


def product_eigentime(g1: Graph, g2: Graph) -> float:
    beta = product_generator_spectrum(g1, g2).ravel()
    beta = beta[np.abs(beta) >= 1e-10]
    return float(np.sum(1.0 / beta))


# --------------------------------------------------------------------------
# conductance


@dataclass(frozen=True)
class ConductanceRecord:
    set: VertexSet
    pi_S: float
    Q: float
    phi: float


def _q_flow(P, pi, mask):
    return float((pi[mask, None] * P[np.ix_(mask, ~mask)]).sum())


def conductance(g, S, P=None, pi=None) -> ConductanceRecord:
    """``Phi(S) = Q(S, S^c) / pi(S)`` with ``Q(A, B) = sum pi(a) P(a, b)``."""
    n = g.vertex_count
    S = as_vertex_set(S, n)
    if len(S) == 0 or len(S) == n:
        raise ValueError("conductance needs a nonempty proper subset")
    P = transition(g) if P is None else P
    pi = stationary(g) if pi is None else pi
    mask = np.zeros(n, dtype=bool)
    mask[list(S.ids)] = True
    q = _q_flow(P, pi, mask)
    ps = float(pi[mask].sum())
    return ConductanceRecord(set=S, pi_S=ps, Q=q, phi=q / ps)


@dataclass(frozen=True)
class ConductanceProfile:
    """Lower envelope ``phi(u) = inf {Phi(S) : pi(S) <= u}``.

    ``masses`` are the sorted distinct set masses seen and ``values`` the
    running minimum, so ``phi`` is a right-continuous step function.
    ``exhaustive`` is False when the family was sampled; ``phi`` is then an
    upper bound on the true profile.
    """

    masses: np.ndarray
    values: np.ndarray
    exhaustive: bool
    family: str

    def __call__(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=np.float64))
        idx = np.searchsorted(self.masses, u * (1 + 1e-12), side="right") - 1
        out = np.full(u.shape, np.inf)
        ok = idx >= 0
        out[ok] = self.values[idx[ok]]
        return out


def _envelope(masses, phis, exhaustive, family):
    masses = np.asarray(masses)
    phis = np.asarray(phis)
    order = np.argsort(masses, kind="stable")
    masses, phis = masses[order], phis[order]
    uniq, start = np.unique(np.round(masses, 14), return_index=True)
    mins = np.minimum.reduceat(phis, start)
    return ConductanceProfile(masses=uniq, values=np.minimum.accumulate(mins), exhaustive=exhaustive, family=family)


def profile(g, family: str = "auto", samples: int = 2000, seed: int = 0, max_mass: float = 0.5) -> ConductanceProfile:
    """Conductance profile over sets of mass at most ``max_mass``.

    ``family="auto"`` enumerates every subset when ``n <= 18`` and otherwise
    uses BFS balls plus uniformly sampled connected-ish sets.
    """
    n = g.vertex_count
    P = transition(g)
    pi = stationary(g)
    if family == "auto":
        family = "exhaustive" if n <= EXHAUSTIVE_PROFILE_MAX else "sampled"
    if family == "exhaustive":
        if n > EXHAUSTIVE_PROFILE_MAX:
            raise ValueError(f"exhaustive profile refused for n={n} > {EXHAUSTIVE_PROFILE_MAX}")
        masks = np.arange(1, 2**n - 1, dtype=np.int64)
        bits = ((masks[:, None] >> np.arange(n)) & 1).astype(np.float64)
        pis = bits @ pi
        # Q(S, S^c) = sum_{x in S} pi(x) - sum_{x,y in S} pi(x) P(x,y)
        flow = pi[:, None] * P
        inner = np.einsum("si,ij,sj->s", bits, flow, bits) if n <= 12 else _inner_chunked(bits, flow)
        q = pis - inner
        keep = pis <= max_mass + 1e-12
        return _envelope(pis[keep], (q / pis)[keep], True, "exhaustive")
    if family != "sampled":
        raise ValueError(f"unknown set family {family!r}")
    rng = np.random.default_rng(seed)
    masses, phis = [], []
    centres = range(n) if n <= 200 else rng.choice(n, 200, replace=False)
    for v in centres:
        dist = bfs_distances(g, int(v)) if isinstance(g, Graph) else None
        if dist is None:
            break
        for r in range(int(dist.max()) + 1):
            mask = dist <= r
            ps = float(pi[mask].sum())
            if ps > max_mass + 1e-12 or mask.all():
                break
            masses.append(ps)
            phis.append(_q_flow(P, pi, mask) / ps)
    for _ in range(samples):
        k = int(rng.integers(1, max(2, int(max_mass * n)) + 1))
        mask = np.zeros(n, dtype=bool)
        mask[rng.choice(n, size=min(k, n - 1), replace=False)] = True
        ps = float(pi[mask].sum())
        if ps > max_mass + 1e-12:
            continue
        masses.append(ps)
        phis.append(_q_flow(P, pi, mask) / ps)
    return _envelope(masses, phis, False, "balls+sampled")


def _inner_chunked(bits, flow, chunk=8192):
    out = np.empty(bits.shape[0])
    for s in range(0, bits.shape[0], chunk):
        b = bits[s : s + chunk]
        out[s : s + chunk] = np.einsum("si,si->s", b @ flow, b)
    return out


@dataclass
class EvolvingSetReport:
    eps: float
    x: int
    T: float
    p_T: float
    threshold: float
    margin: float
    certified: bool

    @property
    def passed(self) -> bool:
        return self.margin >= 0


def isoperimetric_time(prof: ConductanceProfile, lo: float, hi: float) -> float:
    """Exact ``int_lo^hi 8 du / (u phi(u)^2)`` for the step profile."""
    if hi <= lo:
        return 0.0
    cuts = prof.masses[(prof.masses > lo) & (prof.masses < hi)]
    edges = np.concatenate([[lo], cuts, [hi]])
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        ph = float(prof(a)[0])
        if not np.isfinite(ph) or ph <= 0:
            return math.inf
        total += 8.0 * math.log(b / a) / ph**2
    return total


def evolving_set_check(g, eps: float, x: int = 0, prof: ConductanceProfile | None = None, cache=None) -> EvolvingSetReport:
    """Compare the exact ``p_T(x, x)`` with ``(1 + eps) pi(x)``.

    ``T`` is the isoperimetric time from ``4 pi(x)`` to ``4 / eps``.  The
    admissible range is ``8 <= eps <= n`` (so that ``4/eps <= 1/2`` and the
    integration range is nonempty).
    """
    n = g.vertex_count
    if not (8 <= eps <= n):
        raise ValueError(f"eps={eps} outside [8, n={n}]")
    prof = profile(g) if prof is None else prof
    cache = graph_eigensystem(g) if cache is None else cache
    pix = float(cache.pi[x])
    T = isoperimetric_time(prof, 4 * pix, 4.0 / eps)
    pT = heat_kernel(cache, T, x, x) if np.isfinite(T) else pix
    thr = (1 + eps) * pix
    return EvolvingSetReport(eps=eps, x=x, T=T, p_T=pT, threshold=thr, margin=thr - pT, certified=prof.exhaustive)


# --------------------------------------------------------------------------
# heat-kernel diagnostics


@dataclass
class HKFit:
    C: float
    t_argmax: float
    m: int
    R: float
    t_grid: np.ndarray
    ratio: np.ndarray


def hk_bound_fit(g: Graph, m: int, R: float, points: int = 200, cache=None) -> HKFit:
    """Smallest ``C`` with ``p_t(o,o) <= C max(t^-(m+1)/2, 1/(R t^(m/2)))``.

    The fit runs over a log grid of ``1 <= t <= D^2``.  Tori use the closed
    product kernel, anything else the dense engine.
    """
    if m < 2:
        raise ValueError("hk_bound_fit requires m >= 2")
    if not g.vertex_transitive:
        raise ValueError("hk_bound_fit needs a vertex-transitive construction")
    D = diameter(g)
    t = np.geomspace(1.0, max(1.0, D**2), points)
    if g.meta.get("kind") == "torus":
        p = torus_return_probability(g.meta["sides"], t)
    else:
        cache = graph_eigensystem(g) if cache is None else cache
        p = np.array([heat_kernel(cache, s, 0, 0) for s in t])
    envelope = np.maximum(t ** (-(m + 1) / 2), 1.0 / (R * t ** (m / 2)))
    ratio = p / envelope
    i = int(np.argmax(ratio))
    return HKFit(C=float(ratio[i]), t_argmax=float(t[i]), m=m, R=R, t_grid=t, ratio=ratio)


def effective_resistance(g, x: int, y: int) -> float:
    """Resistance between ``x`` and ``y`` with unit conductance per edge."""
    if x == y:
        return 0.0
    if isinstance(g, WeightedGraph):
        w = g.weights.copy()
    else:
        w = g.csr().toarray()
    np.fill_diagonal(w, 0.0)
    lap = np.diag(w.sum(axis=1)) - w
    n = lap.shape[0]
    keep = np.array([i for i in range(n) if i != y])
    b = np.zeros(n)
    b[x] = 1.0
    try:
        v = linalg.solve(lap[np.ix_(keep, keep)], b[keep], assume_a="sym")
    except linalg.LinAlgError as exc:
        raise GraphError("grounded Laplacian is singular (disconnected graph)") from exc
    pos = int(np.searchsorted(keep, x))
    return float(v[pos])


def commute_time_check(g: Graph, x: int, y: int) -> dict:
    """``E_x T_y + E_y T_x`` against ``d n R(x <-> y)``."""
    from .hitting import hitting_time_to

    lhs = float(hitting_time_to(g, y)[x] + hitting_time_to(g, x)[y])
    rhs = g.degree * g.vertex_count * effective_resistance(g, x, y)
    return {"x": x, "y": y, "commute": lhs, "dnR": rhs, "rel_err": abs(lhs - rhs) / max(abs(rhs), 1e-300)}


def poincare_check(g: Graph, cache: SpectralCache | None = None, o: int = 0) -> list[dict]:
    """Relaxation decay of ``p_t(o,o) - 1/n`` beyond ``t = D^2``."""
    cache = graph_eigensystem(g) if cache is None else cache
    n, d, D = g.vertex_count, g.degree, diameter(g)
    D2 = float(D * D)
    base = heat_kernel(cache, D2, o, o)
    rows = []
    for t in (D2, 2 * D2, 4 * D2):
        lhs = heat_kernel(cache, t, o, o) - 1.0 / n
        rhs = math.exp(-(t - D2) / (d * D2)) * base
        rows.append({"t": t, "lhs": lhs, "rhs": rhs, "ok": lhs <= rhs + 1e-12})
    return rows


def relaxation_diffusive_bound(g: Graph, cache=None) -> tuple[float, float]:
    """``(t_rel, d D^2)``; the first never exceeds the second on transitive graphs."""
    cache = graph_eigensystem(g) if cache is None else cache
    D = diameter(g)
    return cache.t_rel, float(g.degree * D * D)


def reconstruction_error(g, cache: SpectralCache, t: float = 1.0) -> float:
    """Max deviation between the spectral ``P_t`` and ``expm(-t (I - P))``."""
    P = transition(g)
    direct = linalg.expm(-t * (np.eye(P.shape[0]) - P))
    return float(np.abs(heat_kernel(cache, t) - direct).max())


def warn_cap(n: int, cap: int) -> None:
    warnings.warn(f"n={n} above spectral cap {cap}; falling back to Monte Carlo", RuntimeWarning, stacklevel=2)
