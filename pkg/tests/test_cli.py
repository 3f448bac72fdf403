import dataclasses
import json

import pytest
import yaml

from coverlab import cli, hitting


def write_cfg(tmp_path, **kw):
    p = tmp_path / "run.yaml"
    p.write_text(yaml.safe_dump(kw))
    return p


def test_minimal_config_is_valid(tmp_path):
    cfg = cli.parse_config(write_cfg(tmp_path, graph="cycle 8", task="exact-identities"))
    assert cfg.graph == {"kind": "cycle", "m": 8}
    assert cfg.tasks == ["exact-identities"]


@pytest.mark.parametrize(
    "kw,field",
    [
        ({"graph": "cycle 8", "task": "gumbel", "seed": 1, "trials": -5}, "trials"),
        ({"graph": "cycle 8", "task": "gumbel"}, "seed"),
        ({"graph": "cycle 8", "task": "exact-identities", "colour": 3}, "colour"),
        ({"graph": "cycle 8", "task": "nonsense"}, "tasks[0]"),
        ({"graph": "cycle 8", "task": "exact-identities", "workers": 0}, "workers"),
        ({"graph": "cycle 8", "task": "exact-identities", "tolerances": {"foo": 1}}, "tolerances.foo"),
    ],
)
def test_config_rejections(tmp_path, kw, field):
    with pytest.raises(cli.ConfigError) as err:
        cli.parse_config(write_cfg(tmp_path, **kw))
    assert str(err.value).startswith(field)


def test_counterexample_requires_a_and_m(tmp_path):
    with pytest.raises(cli.ConfigError) as err:
        cli.parse_config(write_cfg(tmp_path, graph="cycle 8", task="counterexample", seed=1))
    assert "a" in str(err.value).split(":")[0] and "m" in str(err.value).split(":")[0]


def test_flags_override_file(tmp_path):
    cfg = cli.parse_config(write_cfg(tmp_path, graph="cycle 8", task="exact-identities", pairs=3), {"pairs": 7, "seed": None})
    assert cfg.pairs == 7


@pytest.mark.parametrize(
    "spec,kind",
    [("torus:12,12,12", "torus"), ("complete 5", "complete"), ("expander 10 3 1", "expander"), ("cycle 5 x complete 3", "product")],
)
def test_graph_spec_parsing(spec, kind):
    d = cli.parse_graph_spec(spec)
    assert d["kind"] == kind
    cli.build_graph(d)
    with pytest.raises(cli.ConfigError):
        cli.parse_graph_spec("blob 3")


def test_exact_identities_cycle8(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["check", "--graph", "cycle 8", "--task", "exact-identities", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["hard_assertions"]["violations"] == []
    assert (out / "tables" / "identities.csv").exists()
    man = json.loads((out / "manifest.json").read_text())
    assert {"config", "versions", "wall_time", "seed"} <= set(man)


def test_corrupted_mixture_fails_sandwich(tmp_path):
    def corrupt(g, A, cap=None):
        mix = hitting.mixture(g, A, cap=cap)
        return dataclasses.replace(mix, weights=mix.weights * 1.5)

    cfg = cli.parse_config(None, {"graph": "cycle 8", "tasks": ["ab-bounds"], "out": str(tmp_path / "o"), "figures": False})
    status = cli.run(cfg, mixture_fn=corrupt)
    assert status != 0
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["hard_assertions"]["violations"][0].startswith("aldous_brown_sandwich")


def test_ab_bounds_and_diagnostics_pass(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["check", "--graph", "torus 3,4", "--task", "ab-bounds", "--task", "diagnostics", "--out", str(out)]) == 0
    assert (out / "figures" / "ab_bounds_1.png").exists()


def test_statistical_tasks_never_fail_the_run(tmp_path, monkeypatch):
    out = tmp_path / "o"
    monkeypatch.setenv("COVERLAB_OUT", str(out))
    status = cli.main(["experiment", "--graph", "torus 4,4,4", "--task", "gumbel", "--task", "poisson", "--trials", "40", "--seed", "3", "--emit-plotdata"])
    assert status == 0
    report = json.loads((out / "report.json").read_text())
    assert 0 <= report["tasks"]["gumbel"]["data"]["ks"] <= 1
    assert (out / "tables" / "plotdata_gumbel_ecdf.csv").exists()
    assert (out / "figures" / "gumbel_ecdf.png").exists()
    assert (out / "figures" / "factorial_moments.png").exists()


def test_csv_outputs_reproducible(tmp_path):
    args = ["experiment", "--graph", "torus 4,4", "--task", "poisson", "--trials", "60", "--seed", "9", "--no-figures"]
    cli.main(args + ["--out", str(tmp_path / "a")])
    cli.main(args + ["--out", str(tmp_path / "b"), "--workers", "3"])
    a = (tmp_path / "a" / "tables" / "poisson_moments.csv").read_bytes()
    b = (tmp_path / "b" / "tables" / "poisson_moments.csv").read_bytes()
    assert a == b


def test_command_task_mismatch(tmp_path, capsys):
    assert cli.main(["check", "--graph", "cycle 8", "--task", "gumbel", "--seed", "1", "--out", str(tmp_path)]) == 2
    assert "does not belong" in capsys.readouterr().err


def test_build_graph_command(tmp_path):
    path = tmp_path / "g.txt"
    assert cli.main(["build-graph", "--graph", "torus 3,3", "--out", str(path)]) == 0
    assert path.read_text().splitlines()[0].startswith("9 4")
    cfg = cli.parse_config(None, {"graph": f"file:{path}", "tasks": ["exact-identities"]})
    assert cli.build_graph(cfg.graph).vertex_count == 9
