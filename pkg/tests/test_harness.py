import csv
import hashlib
import json
import os

import numpy as np
import pytest

from tdl import harness
from tdl.cli import main
from tdl.errors import ConfigError, NonFiniteDetected
from tdl.fields import load_field
from tdl.harness import validate_config


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run(tmp_path, cfg, kind, out="out", extra=()):
    out_dir = tmp_path / out
    code = main([kind, "--config", write_cfg(tmp_path, cfg), "--out", str(out_dir), *extra])
    return code, out_dir


def manifest(out_dir):
    return json.loads((out_dir / "manifest.json").read_text())


def test_count_sweep_pass_and_deterministic(tmp_path):
    cfg = {"kind": "count-sweep", "alpha": [1.0, 1.3], "N": [8, 16, 32]}
    code, out = run(tmp_path, cfg, "count-sweep")
    assert code == 0
    m = manifest(out)
    assert m["status"] == "OK" and m["exit_code"] == 0 and m["schema_version"] == 1
    assert m["config"]["width"] == 1.0 and m["seed"] == 0
    assert {"slope", "intercept", "residual", "samples"} <= set(m["fits"]["count_vs_N"])
    for o in m["outputs"]:
        assert hashlib.sha256((out / o["path"]).read_bytes()).hexdigest() == o["sha256"]
    rows = list(csv.reader(open(out / "counts.csv")))
    assert rows[0] == ["d", "theta1", "theta2", "N", "ell", "width", "count"] and len(rows) == 4
    code2, out2 = run(tmp_path, cfg, "count-sweep", out="again")
    assert code2 == 0
    assert (out / "counts.csv").read_bytes() == (out2 / "counts.csv").read_bytes()


def test_claim_failure_exit_1(tmp_path):
    code, out = run(tmp_path, {"alpha": [1.0, 1.3], "N": [2, 3]}, "count-sweep")
    assert code == 1
    assert manifest(out)["checks"][0]["passed"] is False


@pytest.mark.parametrize("cfg", [
    {"alpha": [1.0, 1.3], "N": [4, 8], "bogus": 1},
    {"alpha": [1.0, 3.0], "N": [4, 8]},
    {"alpha": [1.0], "N": [4]},
    {"alpha": [1.0], "N": 8, "dt": -0.1, "t_end": 1.0, "kind": "simulate"},
    {"kind": "picard", "alpha": [1.0], "N": 4, "iters": 3},
    {"kind": "picard", "alpha": [1.0], "N": 4, "T": 0.1, "iters": 1},
    {"alpha": [1.0, 1.0], "N": [2, 4], "mode": "diagonal"},
])
def test_config_errors_write_nothing(tmp_path, cfg):
    code, out = run(tmp_path, cfg, cfg.get("kind", "count-sweep"))
    assert code == 2
    assert not out.exists()


def test_kind_mismatch(tmp_path):
    code, out = run(tmp_path, {"kind": "picard", "alpha": [1.0], "N": 4, "T": 0.1, "iters": 3}, "simulate")
    assert code == 2 and not out.exists()


def test_unreadable_configs(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["picard", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert main(["picard", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["picard"]) == 2
    assert main(["no-such-kind", "--config", str(bad)]) == 2


def test_thread_env_validation(tmp_path, monkeypatch):
    monkeypatch.setenv("TDL_THREADS", "many")
    code, out = run(tmp_path, {"alpha": [1.0], "N": [2, 4]}, "count-sweep")
    assert code == 2 and not out.exists()
    monkeypatch.setenv("TDL_THREADS", "1")
    code, out = run(tmp_path, {"alpha": [1.0, 1.0], "N": [4, 8]}, "count-sweep")
    assert manifest(out)["threads"] == 1


def test_validate_defaults_and_kind():
    cfg = validate_config({"alpha": [1.0], "N": 4, "T": 0.1, "iters": 3}, "picard", seed=9)
    assert cfg.params["precision_bits"] == 160 and cfg.seed == 9
    with pytest.raises(ConfigError):
        validate_config({"alpha": [1.0]})
    with pytest.raises(ConfigError):
        validate_config([1, 2], "picard")
    with pytest.raises(ConfigError):
        validate_config({"alpha": [1.0, 1.0], "N": [2, 3], "max_iters": 2, "screen": [3, 1]}, "strichartz-sweep")


def test_runtime_error_exit_3(tmp_path, capsys):
    # d = 1 has no counting exponent: the run fails after the table is built
    code, out = run(tmp_path, {"alpha": [1.0], "N": [4, 8]}, "count-sweep")
    assert code == 3
    m = manifest(out)
    assert m["status"] == "FAILED" and m["error"]["type"] == "ValueError"
    assert len(list(csv.reader(open(out / "counts.csv")))) == 3
    assert "runtime error" in capsys.readouterr().err


def test_partial_flush_on_nonfinite(tmp_path, monkeypatch):
    real = harness.run_simulation

    def exploding(cfg, start, *, trace, **kw):
        real(cfg.__class__(cfg.geometry, cfg.N, cfg.dt, 0.05, cfg.record_stride, cfg.sobolev_orders),
             start, trace=trace, **kw)
        raise NonFiniteDetected("boom", 0.06)

    monkeypatch.setattr(harness, "run_simulation", exploding)
    cfg = {"alpha": [1.0, 1.3], "N": 4, "dt": 0.01, "t_end": 1.0}
    code, out = run(tmp_path, cfg, "simulate")
    assert code == 3
    m = manifest(out)
    assert m["error"]["time"] == 0.06
    rows = list(csv.reader(open(out / "trace.csv")))
    assert len(rows) == 1 + 6  # header, t = 0 and five steps


def test_simulate_resume_matches_full(tmp_path):
    base = {"alpha": [1.0, 1.3], "N": 6, "dt": 0.01, "record_stride": 3, "checkpoint_every": 5,
            "growth": {"s": 2, "t_min": 0.1}}
    code, full = run(tmp_path, {**base, "t_end": 0.5}, "simulate", out="full")
    assert code == 0
    code, part = run(tmp_path, {**base, "t_end": 0.25}, "simulate", out="part")
    assert code == 0
    code, part = run(tmp_path, {**base, "t_end": 0.5, "resume": True}, "simulate", out="part")
    assert code == 0
    assert (part / "trace.csv").read_bytes() == (full / "trace.csv").read_bytes()
    f, t = load_field(part / "checkpoint.tdlf")
    assert t == pytest.approx(0.5)
    m = manifest(full)
    growth = [c for c in m["checks"] if "growth" in c["name"]]
    assert growth and growth[0]["enforced"] is False
    assert m["notes"]["mass_relative_drift"] < 1e-12


def test_picard_cli(tmp_path):
    cfg = {"alpha": [1.0], "N": 4, "T": 0.05, "iters": 4, "n_time": 21, "precision_bits": None}
    code, out = run(tmp_path, cfg, "picard")
    assert code == 0
    rows = list(csv.reader(open(out / "picard.csv")))
    assert rows[0] == ["k", "delta", "ratio"] and len(rows) == 5


def test_geometry_cli(tmp_path):
    cfg = {"alpha": [1.0, 1.3], "X": {"min": 100, "max": 2000, "count": 5}}
    code, out = run(tmp_path, cfg, "geometry-sweep")
    m = manifest(out)
    assert code in (0, 1) and m["status"] == "OK"
    assert m["notes"]["levels_used"] == 5
    rows = list(csv.reader(open(out / "geometry.csv")))
    assert len(rows) == 6
    assert all(float(r[1]) >= float(r[0]) for r in rows[1:])


def test_strichartz_and_bilinear_cli(tmp_path):
    cfg = {"alpha": [1.0, 1.3], "N": [1, 2], "trials": 2, "max_iters": 4, "quadrature": {"n_time": 101}}
    code, out = run(tmp_path, cfg, "strichartz-sweep")
    assert code == 0
    f, t = load_field(out / "argmax_N2.tdlf")
    assert f.N == 2 and t is None
    assert np.isclose(f.l2_norm(), 1.0)
    cfg = {"alpha": [1.0, 1.3], "N1": [1, 2], "N2_factor": 2, "trials": 2, "max_iters": 3,
           "screen": [2, 1], "precision": "single", "quadrature": {"n_time": 101, "t_end": 0.5}}
    code, out = run(tmp_path, cfg, "bilinear-sweep", extra=("--seed", "3"))
    assert code == 0
    assert manifest(out)["seed"] == 3
    rows = list(csv.reader(open(out / "bilinear.csv")))
    assert [r[1] for r in rows[1:]] == ["2", "4"]


def test_default_out_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = write_cfg(tmp_path, {"alpha": [1.0, 1.0], "N": [2, 4]})
    assert main(["count-sweep", "--config", cfg]) == 0
    assert os.path.exists(tmp_path / "tdl-out" / "count-sweep" / "manifest.json")


def test_shipped_configs_validate():
    root = os.path.join(os.path.dirname(__file__), os.pardir, "docs", "configs")
    names = sorted(os.listdir(root))
    assert len(names) == 7
    for name in names:
        cfg = harness.load_config(os.path.join(root, name))
        assert cfg.kind in harness.KINDS
