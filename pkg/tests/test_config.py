import json
from pathlib import Path

import numpy as np
import pytest

from nonlocal_logistic.config import (
    OUTDIR_ENV,
    ConfigError,
    RunConfig,
    load_config,
    parse_profile,
    read_kernel_table,
    spec_from_dict,
    write_kernel_table,
)
from nonlocal_logistic.model import RadialConvolution, Separable, Tabulated, make_analytic_instance
from nonlocal_logistic.problem import discretize
from nonlocal_logistic.verify import is_rank_one_oracle

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("name", ["analytic", "rank1", "rank1_gamma1.5", "gaussian", "exp_weight"])
def test_shipped_configs_load(name):
    cfg = load_config(CONFIGS / f"{name}.json")
    assert cfg.problem.dim == 3
    assert cfg.grid["R_max"] == 200
    assert all(v > 0 for k, v in cfg.solver.items() if k.endswith("tol"))


def test_analytic_config_matches_builtin():
    spec = load_config(CONFIGS / "analytic.json").problem
    ref = make_analytic_instance()
    a = discretize(spec, 50.0, 100, 5.0)
    b = discretize(ref, 50.0, 100, 5.0)
    assert np.array_equal(a.f, b.f) and np.array_equal(a.P, b.P)
    assert np.allclose(a.nonlocal_op.table, b.nonlocal_op.table, rtol=1e-15)
    assert is_rank_one_oracle(spec)
    assert not is_rank_one_oracle(load_config(CONFIGS / "gaussian.json").problem)


def test_profile_forms():
    f, label = parse_profile({"name": "exp", "scale": 2.0, "amplitude": 3.0, "power": 2.0})
    assert f(np.array([2.0]))[0] == pytest.approx(3.0 * np.exp(-2.0))
    assert "exp" in label
    g, label = parse_profile({"r": [0.0, 1.0, 2.0], "values": [1.0, 0.5, 0.25]})
    assert label == "tabulated"
    # log-linear inside, power law r^{-1} continued past the last sample
    assert np.allclose(g(np.array([0.0, 0.5, 1.0, 4.0])), [1.0, 2**-0.5, 0.5, 0.125])
    h, _ = parse_profile({"name": "P", "power": 0.5}, {"P": lambda r: (1 + r * r) ** -2})
    assert h(np.array([1.0]))[0] == pytest.approx(0.5)


@pytest.mark.parametrize("bad", ["nope", 3, {"r": [0, 1], "values": [1, -1]}, {"r": [1, 0], "values": [1, 1]}])
def test_profile_errors(bad):
    with pytest.raises(ConfigError):
        parse_profile(bad)


def test_spec_errors():
    with pytest.raises(ConfigError):
        spec_from_dict({"dim": 3, "gamma": 1.0})
    with pytest.raises(ConfigError):
        spec_from_dict({"dim": 3, "gamma": 1.0, "f": "exp", "P": "exp", "kernel": {"type": "what"}})


def test_nonpositive_tolerance_rejected():
    with pytest.raises(ConfigError):
        RunConfig(make_analytic_instance(), solver={"eig_tol": 0.0})


def test_malformed_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


@pytest.mark.parametrize("suffix", [".npz", ".csv"])
def test_kernel_table_roundtrip(tmp_path, suffix):
    spec = make_analytic_instance()
    pb = discretize(spec, 30.0, 40, 3.0)
    path = tmp_path / f"k{suffix}"
    write_kernel_table(path, pb.r, pb.nonlocal_op.table)
    nodes, table = read_kernel_table(path)
    assert np.array_equal(nodes, pb.r) and np.array_equal(table, pb.nonlocal_op.table)
    cfg = {"dim": 3, "gamma": 1.0, "f": "inv_quad_sq", "P": "inv_quad_sq",
           "kernel": {"type": "tabulated", "file": path.name}}
    tab_spec = spec_from_dict(cfg, tmp_path)
    assert isinstance(tab_spec.kernel, Tabulated)
    assert np.array_equal(discretize(tab_spec, 30.0, 40, 3.0).nonlocal_op.table, pb.nonlocal_op.table)


def test_kernel_table_bad_suffix(tmp_path):
    with pytest.raises(ConfigError):
        write_kernel_table(tmp_path / "k.txt", np.zeros(2), np.zeros((2, 2)))


def test_output_dir_env_override(tmp_path, monkeypatch):
    cfg = json.loads((CONFIGS / "gaussian.json").read_text())
    cfg["output_dir"] = "from_config"
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert load_config(p).output_dir == Path("from_config")
    monkeypatch.setenv(OUTDIR_ENV, str(tmp_path / "env"))
    rc = load_config(p)
    assert rc.output_dir == tmp_path / "env"
    assert isinstance(rc.problem.kernel, RadialConvolution)
    assert isinstance(load_config(CONFIGS / "rank1.json").problem.kernel, Separable)
