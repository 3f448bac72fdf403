"""Monte Carlo engine for the rate-1 continuous-time simple random walk.

The walk is simulated as its jump chain plus an independent Poisson clock.
Rather than drawing one exponential per jump, the clock is sampled only
where it matters:

* the jump counts ``N(b_j)`` at every boundary time ``b_j`` (snapshots,
  horizon, cap) come from independent Poisson increments;
* given those counts, the time of the ``K``-th jump inside an interval is
  an order statistic of uniforms, i.e. a scaled Beta variable, drawn
  sequentially when several events share an interval.

This has exactly the law of the continuous-time walk.  Each trial owns two
Philox streams derived from ``(master_seed, trial)``: stream 0 drives the
jump chain, stream 1 the clock and the starting point.  Results therefore do
not depend on the number of workers.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .graphs import Graph, as_vertex_set

UNTIL_COVER = "until-cover"
MAX_BUFFER_WORDS = 1 << 20
CAP_FACTOR = 4.0
CAP_SLACK = 40.0


def trial_streams(master_seed: int, trial: int):
    """``(jump_bitgen, clock_rng)`` for one trial, counter-derived from the seed."""
    jump = np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=(trial, 0)))
    clock = np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=(trial, 1))))
    return jump, clock


class _Words:
    """Raw 64-bit word buffer that refills without reordering the stream."""

    def __init__(self, bitgen, first: int):
        self.bitgen = bitgen
        self.size = max(64, min(MAX_BUFFER_WORDS, int(first)))
        self.buf = bitgen.random_raw(self.size)

    def refill(self, state):
        tail = self.buf[state[K.WORD]:]
        self.size = min(MAX_BUFFER_WORDS, self.size * 2)
        self.buf = np.concatenate([tail, self.bitgen.random_raw(self.size)])
        state[K.WORD] = 0


@dataclass(frozen=True)
class WalkConfig:
    """Trial specification.

    ``start`` is a vertex id or ``"uniform"``; ``horizon`` a time or
    ``"until-cover"``.  ``k_targets`` asks for the stopping times ``tau_k``
    at which ``k`` vertices remain uncovered.  ``E_pi_To`` sets the
    until-cover safety cap ``cap_factor * E_pi(T_o) * (log n + 40)``.
    """

    graph: Graph
    master_seed: int
    start: object = "uniform"
    horizon: object = UNTIL_COVER
    snapshot_times: tuple = ()
    k_targets: tuple = ()
    store_sets: bool = True
    E_pi_To: float | None = None
    cap_factor: float = CAP_FACTOR

    def __post_init__(self):
        snaps = tuple(float(t) for t in self.snapshot_times)
        if any(b < a for a, b in zip(snaps, snaps[1:])):
            raise ValueError("snapshot times must be sorted")
        if snaps and snaps[0] < 0:
            raise ValueError("snapshot times must be nonnegative")
        ks = tuple(int(k) for k in self.k_targets)
        if any(b >= a for a, b in zip(ks, ks[1:])):
            raise ValueError("k_targets must be strictly decreasing")
        if ks and ks[-1] < 1:
            raise ValueError("k_targets must be >= 1")
        if self.horizon != UNTIL_COVER:
            h = float(self.horizon)
            if h < 0:
                raise ValueError("horizon must be nonnegative")
            if snaps and snaps[-1] > h:
                raise ValueError("snapshot beyond the horizon")
        if self.master_seed is None:
            raise ValueError("master_seed is required")
        object.__setattr__(self, "snapshot_times", snaps)
        object.__setattr__(self, "k_targets", ks)

    def cap_time(self) -> float:
        n = self.graph.vertex_count
        if n == 1:
            return 0.0
        E = self.E_pi_To
        if E is None:
            from .spectral import exact_Epi_To

            E = exact_Epi_To(self.graph)[0]
        return self.cap_factor * E * (math.log(n) + CAP_SLACK)


@dataclass
class Snapshot:
    time: float
    Z: int
    position: int
    jumps: int
    uncovered: np.ndarray | None = None


@dataclass
class CoverSample:
    """One trial.  ``cover_time`` is NaN when the trial stopped first."""

    trial: int
    start: int
    cover_time: float
    complete: bool
    tau_k: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)
    steps: int = 0

    @property
    def Z(self) -> list:
        return [s.Z for s in self.snapshots]


def _event_times(steps, bounds, counts, rng):
    """Times of jumps number ``steps`` (sorted) given cumulative boundary counts.

    Inside ``(b_{j-1}, b_j]`` the ``r`` jump times are uniform order
    statistics; conditioning on the previous event at ``u`` (index ``i0``)
    the ``i``-th one is ``u + (b_j - u) Beta(i - i0, r - i + 1)``.
    """
    out = []
    j = 0
    base = 0
    cur_t, cur_i = 0.0, 0
    for s in steps:
        if s == 0:
            out.append(0.0)
            continue
        while counts[j] < s:
            base = int(counts[j])
            cur_t, cur_i = bounds[j], 0
            j += 1
        r = int(counts[j]) - base
        i = s - base
        t = cur_t + (bounds[j] - cur_t) * rng.beta(i - cur_i, r - i + 1)
        out.append(t)
        cur_t, cur_i = t, i
    return out


def _run_one(cfg: WalkConfig, trial: int, cap: float) -> CoverSample:
    g = cfg.graph
    n = g.vertex_count
    jump, clock = trial_streams(cfg.master_seed, trial)
    start = int(clock.integers(n)) if cfg.start == "uniform" else int(cfg.start)
    until_cover = cfg.horizon == UNTIL_COVER
    final = cap if until_cover else float(cfg.horizon)
    bounds = sorted(set(cfg.snapshot_times) | {final})
    incr = clock.poisson(np.diff(np.concatenate([[0.0], bounds])))
    counts = np.cumsum(incr).astype(np.int64)
    snap_counts = [int(counts[bounds.index(t)]) for t in cfg.snapshot_times]
    final_count = int(counts[-1])

    covered = np.zeros(n, dtype=np.uint8)
    covered[start] = 1
    state = np.zeros(K.STATE_SIZE, dtype=np.int64)
    state[K.POS], state[K.UNCOVERED] = start, n - 1
    est = final_count if not until_cover else min(final_count, 2 * n * max(1, int(math.log(n + 1))) + 64)
    words = _Words(jump, est // 2 + 64)

    ks = [k for k in cfg.k_targets]
    tau_steps: dict[int, tuple] = {}
    while ks and state[K.UNCOVERED] <= ks[0]:
        tau_steps[ks.pop(0)] = (0, K.uncovered_ids(covered))
    cover_step = 0 if state[K.UNCOVERED] == 0 else None
    snaps = []
    si = 0
    adj = g.adjacency
    factors = g.meta.get("factors") if g.meta.get("kind") == "strong_product" else None
    if factors is not None:
        f1, f2 = factors[0].adjacency, factors[1].adjacency
        chunk = lambda stop, k: K.product_cover_chunk(f1, f2, covered, state, words.buf, stop, k)
    else:
        chunk = lambda stop, k: K.cover_chunk(adj, covered, state, words.buf, stop, k)
    while True:
        if cover_step is not None and si >= len(snap_counts):
            break
        if si < len(snap_counts):
            stop = snap_counts[si]
        else:
            stop = final_count
        k_next = ks[0] if ks else 0
        if cover_step is not None or n == 1:
            k_next = 0
        code = chunk(stop, k_next) if n > 1 else K.REACHED_STOP
        if code == K.BUFFER_EMPTY:
            words.refill(state)
        elif code == K.REACHED_STOP:
            if si < len(snap_counts) and state[K.STEP] >= snap_counts[si]:
                ids = K.uncovered_ids(covered) if cfg.store_sets else None
                snaps.append((si, int(state[K.STEP]), int(state[K.UNCOVERED]), int(state[K.POS]), ids))
                si += 1
            else:
                break
        elif code == K.REACHED_K:
            tau_steps[ks.pop(0)] = (int(state[K.STEP]), K.uncovered_ids(covered))
        elif code == K.COVERED:
            cover_step = int(state[K.STEP])
            for k in ks:
                tau_steps[k] = (cover_step, np.empty(0, dtype=np.int64))
            ks = []

    # convert event steps to times; boundary hits keep their exact times
    events = sorted({s for s, _ in tau_steps.values()} | ({cover_step} if cover_step is not None else set()))
    times = dict(zip(events, _event_times(events, bounds, counts, clock)))
    tau = {k: (times[s], ids) for k, (s, ids) in tau_steps.items()}
    # a snapshot keeps the count of jumps by its time
    snapshots = [Snapshot(time=cfg.snapshot_times[i], Z=z, position=p, jumps=st, uncovered=ids) for i, st, z, p, ids in snaps]
    complete = not ks and (cover_step is not None or not until_cover)
    ct = times[cover_step] if cover_step is not None else math.nan
    return CoverSample(trial=trial, start=start, cover_time=ct, complete=complete, tau_k=tau, snapshots=snapshots, steps=int(state[K.STEP]))


def run_trials(cfg: WalkConfig, trials: int, workers: int = 1, first_trial: int = 0) -> list[CoverSample]:
    """Run ``trials`` independent walks; the output is ordered by trial index."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    cap = cfg.cap_time() if cfg.horizon == UNTIL_COVER else math.inf
    idx = range(first_trial, first_trial + trials)
    if workers == 1:
        return [_run_one(cfg, i, cap) for i in idx]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda i: _run_one(cfg, i, cap), idx))


# --------------------------------------------------------------------------
# local times and first hits


@dataclass(frozen=True)
class LocalTimeEstimate:
    x: int
    y: int
    t: float
    trials: int
    mean: float
    stderr: float


def local_time(g: Graph, x: int, y: int, t: float, trials: int, seed: int) -> LocalTimeEstimate:
    """Estimate ``E_x L_y(t)``, the expected time spent at ``y`` before ``t``.

    Given the jump chain and ``N = N(t)``, the ``N + 1`` holding intervals
    each have mean length ``t / (N + 1)``; each trial reports
    ``t V / (N + 1)`` with ``V`` the number of visits to ``y`` among the
    ``N + 1`` positions, which is unbiased and has lower variance than the
    raw occupation time.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    vals = np.empty(trials)
    adj = g.adjacency
    for i in range(trials):
        jump, clock = trial_streams(seed, i)
        N = int(clock.poisson(t))
        state = np.zeros(K.STATE_SIZE, dtype=np.int64)
        state[K.POS] = x
        counter = np.zeros(1, dtype=np.int64)
        if g.degree > 0:
            words = _Words(jump, N // 2 + 64)
            while K.visit_chunk(adj, y, state, words.buf, N, counter) == K.BUFFER_EMPTY:
                words.refill(state)
        V = counter[0] + (1 if x == y else 0)
        vals[i] = t * V / (N + 1)
    se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return LocalTimeEstimate(x=x, y=y, t=t, trials=trials, mean=float(vals.mean()), stderr=se)


@dataclass
class HittingSample:
    targets: tuple
    counts: dict
    frequencies: dict
    stderr: dict
    times: np.ndarray
    hit: np.ndarray
    starts: np.ndarray

    def tail(self, t: float) -> tuple[float, float]:
        """Empirical ``P(T_A > t)`` and its standard error."""
        ind = (self.times > t).astype(float)
        return float(ind.mean()), float(ind.std(ddof=1) / math.sqrt(len(ind)))


def hitting_first(g: Graph, start, targets, trials: int, seed: int) -> HittingSample:
    """First point of ``targets`` reached and the hitting time, per trial.

    ``start`` is a vertex or ``"uniform"``.  The hit time after ``K`` jumps
    is a Gamma(K) variable from the clock stream.
    """
    n = g.vertex_count
    A = as_vertex_set(targets, n)
    if len(A) == 0:
        raise ValueError("targets must be nonempty")
    mask = np.zeros(n, dtype=np.uint8)
    mask[list(A.ids)] = 1
    times = np.empty(trials)
    hit = np.empty(trials, dtype=np.int64)
    starts = np.empty(trials, dtype=np.int64)
    big = np.iinfo(np.int64).max
    for i in range(trials):
        jump, clock = trial_streams(seed, i)
        x0 = int(clock.integers(n)) if start in ("uniform", "stationary") else int(start)
        state = np.zeros(K.STATE_SIZE, dtype=np.int64)
        state[K.POS] = x0
        words = _Words(jump, 256)
        while K.hit_chunk(g.adjacency, mask, state, words.buf, big) == K.BUFFER_EMPTY:
            words.refill(state)
        steps = int(state[K.STEP])
        times[i] = clock.gamma(steps) if steps > 0 else 0.0
        hit[i] = state[K.POS]
        starts[i] = x0
    counts = {a: int(np.sum(hit == a)) for a in A.ids}
    freqs = {a: c / trials for a, c in counts.items()}
    se = {a: math.sqrt(f * (1 - f) / trials) for a, f in freqs.items()}
    return HittingSample(targets=A.ids, counts=counts, frequencies=freqs, stderr=se, times=times, hit=hit, starts=starts)


# --------------------------------------------------------------------------
# output


def samples_to_csv(samples: Sequence[CoverSample], path, cfg: WalkConfig | None = None) -> None:
    """One row per trial: cover time, ``tau_k`` times and snapshot ``Z``/positions."""
    ks = sorted({k for s in samples for k in s.tau_k}, reverse=True)
    nsnap = max((len(s.snapshots) for s in samples), default=0)
    header = ["trial", "start", "complete", "cover_time", "steps"]
    header += [f"tau_{k}" for k in ks]
    for j in range(nsnap):
        header += [f"Z_{j}", f"X_{j}", f"N_{j}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if cfg is not None and cfg.snapshot_times:
            w.writerow(["# snapshot_times"] + [repr(t) for t in cfg.snapshot_times])
        w.writerow(header)
        for s in samples:
            row = [s.trial, s.start, int(s.complete), repr(s.cover_time), s.steps]
            row += [repr(s.tau_k[k][0]) if k in s.tau_k else "" for k in ks]
            for snap in s.snapshots:
                row += [snap.Z, snap.position, snap.jumps]
            w.writerow(row)


def samples_sets_json(samples: Sequence[CoverSample], path) -> None:
    payload = {}
    for s in samples:
        payload[str(s.trial)] = {
            "tau_k": {str(k): ids.tolist() for k, (_, ids) in s.tau_k.items()},
            "snapshots": [None if sn.uncovered is None else sn.uncovered.tolist() for sn in s.snapshots],
        }
    with open(path, "w") as fh:
        json.dump(payload, fh)
