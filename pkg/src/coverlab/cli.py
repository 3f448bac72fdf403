"""Batch front-end: ``coverlab build-graph | check | experiment``.

A run is described by a YAML file (``--config``) whose values command-line
flags override.  Exact checks are hard assertions and decide the exit
status; Monte Carlo experiments only ever write to the report.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__, graphs, gumbel_lab, hitting, spectral
from .graphs import Graph

EXACT_TASKS = ("exact-identities", "ab-bounds", "diagnostics")
MC_TASKS = ("gumbel", "poisson", "product-law", "last-k", "counterexample")
TASKS = EXACT_TASKS + MC_TASKS

DEFAULT_TOL = {"identity": 1e-8, "bound": 1e-10}


class ConfigError(ValueError):
    """Schema violation; the message starts with the offending field path."""


# --------------------------------------------------------------------------
# graph specs


def parse_graph_spec(spec) -> dict:
    """Normalise a graph spec to a dict with a ``kind`` key.

    Strings look like ``"cycle 8"``, ``"torus:12,12,12"``,
    ``"expander:1060,4,0"``, ``"file:path"`` or two of those joined by
    ``" x "`` for a strong product.
    """
    if isinstance(spec, dict):
        if "kind" not in spec:
            raise ConfigError("graph.kind: missing")
        return dict(spec)
    if not isinstance(spec, str):
        raise ConfigError(f"graph: expected a string or mapping, got {type(spec).__name__}")
    if " x " in spec:
        left, right = spec.split(" x ", 1)
        return {"kind": "product", "factors": [parse_graph_spec(left.strip()), parse_graph_spec(right.strip())]}
    head, _, rest = spec.strip().replace(":", " ", 1).partition(" ")
    args = [a for a in rest.replace(",", " ").split() if a]
    kind = head.lower()
    try:
        if kind == "file":
            return {"kind": "file", "path": rest.strip()}
        nums = [int(a) for a in args]
    except ValueError as exc:
        raise ConfigError(f"graph: bad parameters in {spec!r}") from exc
    if kind == "cycle" and len(nums) == 1:
        return {"kind": "cycle", "m": nums[0]}
    if kind == "complete" and len(nums) == 1:
        return {"kind": "complete", "n": nums[0]}
    if kind == "torus" and nums:
        return {"kind": "torus", "sides": nums}
    if kind == "vertex" and not nums:
        return {"kind": "vertex"}
    if kind == "expander" and len(nums) in (2, 3):
        return {"kind": "expander", "size": nums[0], "degree": nums[1], "seed": nums[2] if len(nums) == 3 else 0}
    raise ConfigError(f"graph: cannot parse {spec!r}")


_GRAPH_KEYS = {
    "cycle": {"m"},
    "complete": {"n"},
    "torus": {"sides"},
    "vertex": set(),
    "expander": {"size", "degree", "seed", "gap_floor"},
    "product": {"factors"},
    "counterexample": {"a", "m", "degree", "seed"},
    "file": {"path"},
}


def build_graph(spec: dict) -> Graph:
    kind = spec["kind"]
    if kind not in _GRAPH_KEYS:
        raise ConfigError(f"graph.kind: unknown kind {kind!r}")
    extra = set(spec) - _GRAPH_KEYS[kind] - {"kind"}
    if extra:
        raise ConfigError(f"graph.{sorted(extra)[0]}: unknown key for kind {kind!r}")
    try:
        if kind == "cycle":
            return graphs.build_cycle(int(spec["m"]))
        if kind == "complete":
            return graphs.build_complete(int(spec["n"]))
        if kind == "torus":
            return graphs.build_torus([int(s) for s in spec["sides"]])
        if kind == "vertex":
            return graphs.single_vertex()
        if kind == "expander":
            return graphs.build_expander(int(spec["size"]), int(spec["degree"]), seed=int(spec.get("seed", 0)), gap_floor=float(spec.get("gap_floor", 0.1)))
        if kind == "product":
            f = spec["factors"]
            if len(f) != 2:
                raise ConfigError("graph.factors: need exactly two factors")
            return graphs.strong_product(build_graph(parse_graph_spec(f[0])), build_graph(parse_graph_spec(f[1])))
        if kind == "counterexample":
            return gumbel_lab.counterexample_graph(float(spec["a"]), int(spec["m"]), int(spec.get("degree", 4)), seed=int(spec.get("seed", 0)))
        return graphs.load_graph(spec["path"])
    except KeyError as exc:
        raise ConfigError(f"graph.{exc.args[0]}: missing") from exc


# --------------------------------------------------------------------------
# config


@dataclass
class RunConfig:
    graph: dict
    tasks: list
    trials: int = 1000
    seed: int | None = None
    workers: int = 1
    out: str = "coverlab-out"
    spectral_cap: int = spectral.DEFAULT_SPECTRAL_CAP
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOL))
    pairs: int = 5
    s_values: list = field(default_factory=lambda: [0.0, 1.0])
    k_max: int = 3
    k: int = 2
    s: float = 1.0
    a: float | None = None
    m: int | None = None
    degree: int = 4
    delta: int | None = None
    theta_trials: int = 2000
    emit_plotdata: bool = False
    figures: bool = True


_FIELDS = set(RunConfig.__dataclass_fields__) | {"task"}


def parse_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Read and validate a run config; ``overrides`` (flag values) win over the file."""
    raw: dict = {}
    if path is not None:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigError("<root>: expected a mapping")
    for key, val in (overrides or {}).items():
        if val is not None:
            raw[key] = val
    unknown = sorted(set(raw) - _FIELDS)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key")
    if "task" in raw:
        t = raw.pop("task")
        raw.setdefault("tasks", [t] if isinstance(t, str) else list(t))
    if "graph" not in raw:
        raise ConfigError("graph: missing")
    if not raw.get("tasks"):
        raise ConfigError("tasks: at least one task is required")
    raw["graph"] = parse_graph_spec(raw["graph"])
    tasks = list(raw["tasks"])
    for i, t in enumerate(tasks):
        if t not in TASKS:
            raise ConfigError(f"tasks[{i}]: unknown task {t!r}")
    raw["tasks"] = tasks
    if "tolerances" in raw:
        tol = dict(DEFAULT_TOL)
        bad = sorted(set(raw["tolerances"]) - set(DEFAULT_TOL))
        if bad:
            raise ConfigError(f"tolerances.{bad[0]}: unknown key")
        tol.update({k: float(v) for k, v in raw["tolerances"].items()})
        raw["tolerances"] = tol
    cfg = RunConfig(**raw)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    for name in ("trials", "workers", "pairs", "theta_trials", "k_max", "spectral_cap"):
        v = getattr(cfg, name)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{name}: expected an integer")
        if v < 1:
            raise ConfigError(f"{name}: must be >= 1, got {v}")
    if any(t in MC_TASKS for t in cfg.tasks) and cfg.seed is None:
        raise ConfigError("seed: required for Monte Carlo tasks")
    if cfg.seed is not None and (not isinstance(cfg.seed, int) or cfg.seed < 0):
        raise ConfigError("seed: must be a nonnegative integer")
    if "counterexample" in cfg.tasks:
        missing = [f for f in ("a", "m") if getattr(cfg, f) is None]
        if missing:
            raise ConfigError(f"{' and '.join(missing)}: required by the counterexample task")
    if not 1 <= cfg.k_max <= 4:
        raise ConfigError("k_max: must be in 1..4")
    if cfg.k not in (1, 2, 3):
        raise ConfigError("k: must be 1, 2 or 3")
    cfg.s_values = [float(s) for s in cfg.s_values]


# --------------------------------------------------------------------------
# tasks


def _random_sets(g: Graph, count: int, seed: int, kmax: int = 3) -> list[tuple]:
    rng = np.random.default_rng(seed)
    n = g.vertex_count
    out = []
    for _ in range(count):
        k = int(rng.integers(1, min(kmax, n - 1) + 1))
        out.append(tuple(sorted(int(v) for v in rng.choice(n, size=k, replace=False))))
    return out


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def task_exact_identities(g: Graph, cfg: RunConfig, run) -> dict:
    tol = cfg.tolerances["identity"]
    rows = []
    seed = 0 if cfg.seed is None else cfg.seed
    for A in _random_sets(g, cfg.pairs, seed):
        mix = hitting.mixture(g, A, cap=cfg.spectral_cap)
        E_col = hitting.hitting_expectation_set(g, A, cap=cfg.spectral_cap)
        r_mass = _rel(float(mix.weights.sum()), mix.pi_B)
        r_norm = _rel(float(mix.weights[0]), 1.0 / mix.alpha_pi_l2)
        r_mean = _rel(mix.E_pi, E_col)
        ds = hitting.dsep_identity_check(g, A, mix, tol=tol, strict=False)
        rows.append({"A": " ".join(map(str, A)), "mass_residual": r_mass, "norm_residual": r_norm, "mean_residual": r_mean, "secondary_residual": ds["residual"]})
        for name, r in (("mixture_mass", r_mass), ("alpha_norm", r_norm), ("collapsed_mean", r_mean), ("secondary_mass_identity", ds["residual"])):
            run.hard(name, r < tol, f"A={A} residual {r:.3e}")
    cache = spectral.graph_eigensystem(g, cap=cfg.spectral_cap)
    out = {"rows": rows}
    if g.vertex_transitive:
        E0 = hitting.hitting_expectation_pi(g, 0, cap=cfg.spectral_cap)
        r = _rel(spectral.eigentime(cache), E0)
        out["eigentime_residual"] = r
        run.hard("eigentime_identity", r < tol, f"residual {r:.3e}")
    rng = np.random.default_rng(seed + 1)
    comm = []
    for _ in range(cfg.pairs):
        x, y = (int(v) for v in rng.choice(g.vertex_count, size=2, replace=False))
        c = spectral.commute_time_check(g, x, y)
        comm.append(c)
        run.hard("commute_time_identity", c["rel_err"] < tol, f"({x},{y}) residual {c['rel_err']:.3e}")
    out["commute"] = comm
    trel, cap = spectral.relaxation_diffusive_bound(g, cache)
    out["t_rel"], out["d_D2"] = trel, cap
    if g.vertex_transitive:
        run.hard("relaxation_diffusive_bound", trel <= cap * (1 + 1e-12), f"t_rel={trel} > dD^2={cap}")
    run.table("identities", rows)
    return out


def task_ab_bounds(g: Graph, cfg: RunConfig, run) -> dict:
    tol = cfg.tolerances["bound"]
    rows = []
    seed = 0 if cfg.seed is None else cfg.seed
    for A in _random_sets(g, cfg.pairs, seed):
        mix = run.mixture(g, A, cap=cfg.spectral_cap)
        rep = hitting.ab_bounds(mix, hitting.log_grid(mix, 50), tol=tol, strict=False)
        for name, v in rep.violations.items():
            scale = max(1.0, abs(mix.E_pi)) if "mean" in name else 1.0
            run.hard(name, v <= tol * scale, f"A={A} violation {v:.3e}")
        tm = hitting.t_med_report(mix)
        run.hard("t_med_provable_cap", tm["t_med"] <= tm["provable_cap"] * (1 + 1e-12), f"A={A}")
        rows.append({"A": " ".join(map(str, A)), **{f"viol_{k}": v for k, v in rep.violations.items()}, "t_med": tm["t_med"], "t_rel": tm["t_rel"], "t_med_below_t_rel_over_sqrt2": tm["below_t_rel_over_sqrt2"]})
        if run.figures and len(rows) == 1:
            from . import plotting

            run.figure(f"ab_bounds_{len(rows)}.png", lambda p: plotting.hitting_tail(rep.t, rep.exact, rep.classic_lower, rep.classic_upper, p, title=f"A={A}"))
    run.table("ab_bounds", rows)
    return {"rows": rows}


def task_diagnostics(g: Graph, cfg: RunConfig, run) -> dict:
    out = {}
    cache = spectral.graph_eigensystem(g, cap=cfg.spectral_cap)
    err = spectral.reconstruction_error(g, cache)
    out["reconstruction_error"] = err
    run.hard("heat_kernel_reconstruction", err < cfg.tolerances["identity"], f"{err:.3e}")
    n = g.vertex_count
    if n <= spectral.EXHAUSTIVE_PROFILE_MAX and n >= 8:
        prof = spectral.profile(g)
        rows = []
        for eps in sorted({8.0, float(n) / 2 if n >= 16 else 8.0, float(n)}):
            r = spectral.evolving_set_check(g, eps, prof=prof, cache=cache)
            rows.append(asdict(r))
            run.hard("evolving_set_return_bound", r.passed, f"eps={eps} margin {r.margin:.3e}")
        out["evolving_sets"] = rows
        run.table("evolving_sets", rows)
    out["poincare"] = spectral.poincare_check(g, cache)
    return out


def _E(g: Graph, cfg: RunConfig) -> gumbel_lab.EpiEstimate:
    return gumbel_lab.estimate_Epi_To(g, "auto", trials=2000, seed=cfg.seed, cap=cfg.spectral_cap)


def task_gumbel(g, cfg, run) -> dict:
    rep = gumbel_lab.gumbel_experiment(g, cfg.trials, cfg.seed, E=_E(g, cfg), workers=cfg.workers)
    d = rep.to_dict()
    run.table("gumbel_tails", [{"s": s, **v} for s, v in rep.data["tails"].items()])
    if cfg.emit_plotdata:
        run.table("plotdata_gumbel_ecdf", [{"s": s, "F": F} for s, F in zip(rep.tables["ecdf"]["s"], rep.tables["ecdf"]["F"])])
    if run.figures:
        from . import plotting

        run.figure("gumbel_ecdf.png", lambda p: plotting.gumbel_ecdf(d, p))
    d.pop("tables")
    return d


def task_poisson(g, cfg, run) -> dict:
    rep = gumbel_lab.uncovered_poisson_experiment(g, cfg.s_values, cfg.trials, cfg.k_max, cfg.seed, E=_E(g, cfg), workers=cfg.workers, horizon_only=True)
    run.table("poisson_moments", rep.tables["moments"])
    d = rep.to_dict()
    if run.figures:
        from . import plotting

        run.figure("factorial_moments.png", lambda p: plotting.factorial_moments(d, p))
    return d


def task_product_law(g, cfg, run) -> dict:
    rep = gumbel_lab.product_law_checks(g, cfg.s, cfg.trials, cfg.seed, delta=cfg.delta, E=_E(g, cfg), workers=cfg.workers)
    return rep.to_dict()


def task_last_k(g, cfg, run) -> dict:
    rep = gumbel_lab.last_k_experiment(g, cfg.k, cfg.trials, cfg.seed, E=_E(g, cfg), workers=cfg.workers)
    d = rep.to_dict()
    if run.figures and "mindist" in rep.tables:
        from . import plotting

        run.figure("last_k_mindist.png", lambda p: plotting.mindist_qq(d, p))
    return d


def task_counterexample(g, cfg, run) -> dict:
    if g.meta.get("kind") != "strong_product":
        g = gumbel_lab.counterexample_graph(cfg.a, cfg.m, cfg.degree, seed=cfg.seed)
    rep = gumbel_lab.counterexample_experiment(cfg.a, cfg.m, cfg.s, cfg.trials, cfg.seed, degree=cfg.degree, graph=g, workers=cfg.workers, theta_trials=cfg.theta_trials)
    d = rep.data
    run.hard("c2_exceeds_one", d["c2"] > 1.0, f"c2={d['c2']}")
    run.table("counterexample_moments", [{"k": k, **v} for k, v in d["moments"].items()])
    if run.figures:
        from . import plotting

        run.figure("c2_curve.png", lambda p: plotting.c2_curve([0.25, 0.5, 1, 2, 4, 10, 100], d["theta"]["theta"], p))
    return rep.to_dict()


HANDLERS = {
    "exact-identities": task_exact_identities,
    "ab-bounds": task_ab_bounds,
    "diagnostics": task_diagnostics,
    "gumbel": task_gumbel,
    "poisson": task_poisson,
    "product-law": task_product_law,
    "last-k": task_last_k,
    "counterexample": task_counterexample,
}


# --------------------------------------------------------------------------
# run


class Run:
    """Collects hard-assertion outcomes, tables and figures for one run."""

    def __init__(self, out: Path, figures: bool = True):
        self.out = out
        self.figures = figures
        self.violations: list[str] = []
        self.checked = 0
        self.tables: list[str] = []
        self.figure_files: list[str] = []
        # exposed for fault-injection tests
        self.mixture = hitting.mixture

    def hard(self, name: str, ok: bool, detail: str = "") -> None:
        self.checked += 1
        if not ok:
            self.violations.append(f"{name}: {detail}")

    def table(self, name: str, rows: list[dict]) -> None:
        if not rows:
            return
        path = self.out / "tables" / f"{name}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        keys = list(rows[0])
        for r in rows[1:]:
            keys += [k for k in r if k not in keys]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            for r in rows:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
        self.tables.append(str(path.relative_to(self.out)))

    def figure(self, name: str, draw) -> None:
        path = self.out / "figures" / name
        path.parent.mkdir(parents=True, exist_ok=True)
        draw(path)
        self.figure_files.append(str(path.relative_to(self.out)))


def run(cfg: RunConfig, mixture_fn=None) -> int:
    """Execute every task and write the artifacts; returns the exit status."""
    t0 = time.perf_counter()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    g = build_graph(cfg.graph)
    r = Run(out, figures=cfg.figures)
    if mixture_fn is not None:
        r.mixture = mixture_fn
    results = {}
    for task in cfg.tasks:
        ts = time.perf_counter()
        try:
            results[task] = HANDLERS[task](g, cfg, r)
        except hitting.BoundViolation as exc:
            r.hard(exc.name, False, str(exc))
            results[task] = {"error": str(exc)}
        except spectral.SpectralCapExceeded as exc:
            results[task] = {"skipped": str(exc)}
        results[task + "_runtime"] = time.perf_counter() - ts
    report = {
        "graph": {"label": g.label, "n": g.vertex_count, "degree": g.degree, "spec": cfg.graph},
        "tasks": results,
        "hard_assertions": {"checked": r.checked, "violations": r.violations},
    }
    _dump(out / "report.json", report)
    manifest = {
        "config": asdict(cfg),
        "seed": cfg.seed,
        "versions": _versions(),
        "wall_time": time.perf_counter() - t0,
        "tables": r.tables,
        "figures": r.figure_files,
    }
    _dump(out / "manifest.json", manifest)
    if r.violations:
        print(f"hard assertion failed: {r.violations[0]}", file=sys.stderr)
        return 1
    return 0


def _dump(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(gumbel_lab._jsonable(obj), fh, indent=2, sort_keys=True, default=str)


def _versions() -> dict:
    import matplotlib
    import networkx
    import numba
    import scipy

    return {
        "coverlab": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "networkx": networkx.__version__,
        "matplotlib": matplotlib.__version__,
    }


# --------------------------------------------------------------------------
# argument parsing


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coverlab", description="Cover and hitting times of random walks on transitive graphs.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-graph", help="build a graph and save its adjacency table")
    b.add_argument("--graph", required=True)
    b.add_argument("--out", required=True, help="output file")

    for name, help_ in (("check", "exact identities and inequalities"), ("experiment", "Monte Carlo experiments")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config")
        s.add_argument("--graph")
        s.add_argument("--task", action="append", dest="tasks")
        s.add_argument("--trials", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--workers", type=int)
        s.add_argument("--out")
        s.add_argument("--spectral-cap", type=int, dest="spectral_cap")
        s.add_argument("--emit-plotdata", action="store_true", default=None, dest="emit_plotdata")
        s.add_argument("--no-figures", action="store_false", default=None, dest="figures")
        s.add_argument("--a", type=float)
        s.add_argument("--m", type=int)
        s.add_argument("--s", type=float)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "build-graph":
            g = build_graph(parse_graph_spec(args.graph))
            graphs.save_graph(g, args.out)
            print(f"{g.label}: n={g.vertex_count} d={g.degree} -> {args.out}")
            return 0
        over = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
        if over.get("out") is None:
            over["out"] = os.environ.get("COVERLAB_OUT")
        cfg = parse_config(args.config, over)
        bad = [t for t in cfg.tasks if t not in (EXACT_TASKS if args.command == "check" else MC_TASKS)]
        if bad:
            raise ConfigError(f"tasks: {bad[0]!r} does not belong to the {args.command} command")
    except (ConfigError, graphs.GraphError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    status = run(cfg)
    print(f"wrote {cfg.out}/report.json (exit {status})")
    return status


if __name__ == "__main__":
    sys.exit(main())
