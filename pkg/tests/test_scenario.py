import hashlib
import json

import numpy as np
import pytest
import yaml

from sntc.continuation import ContinuationSettings, Curve, continue_equilibrium, continue_fold_curve, fold_seed
from sntc.errors import ConfigurationError, PreconditionError
from sntc.models import get_system, normal_form, oracle_fold_curve
from sntc.scenario import (
    bundled_scenarios,
    emit_curve_csv,
    load_config,
    read_curve_csv,
    run_scenario,
    verify_special_record,
)

CUSP = {
    "name": "cusp-small",
    "system": "cusp",
    "params": {"a": -5.0, "b": -3.0},
    "settings": {"h0": 0.01, "h_max": 0.05},
    "tasks": [
        {"id": "eq", "type": "continue-equilibrium", "seed": {"state": [2.28]}, "free": "a", "range": [-5.5, 5.5]},
        {"id": "sn", "type": "continue-fold", "seed": {"from": "eq", "kind": "Fold"},
         "bounds": {"b": [-4.5, 0.5]}, "oracle_tol": 1e-7, "oracle_range": [-4.0, 0.0]},
        {"id": "codim2", "type": "detect-codim2", "curves": ["sn"]},
    ],
}


def _cfg(**task_updates):
    cfg = json.loads(json.dumps(CUSP))
    for i, upd in task_updates.items():
        cfg["tasks"][int(i[1:])].update(upd)
    return cfg


def _error(cfg) -> str:
    with pytest.raises(ConfigurationError) as exc:
        load_config(cfg)
    return str(exc.value)


def test_bundled_scenarios_validate():
    names = set(bundled_scenarios())
    assert {"normal-form-oracles", "kooi-single-zero", "kooi-double-zero", "kooi-time-series"} <= names
    for name in names:
        load_config(name)


def test_schema_errors_carry_paths():
    assert "tasks[0].type" in _error(_cfg(t0={"type": "continue-sideways"}))
    assert "tasks[1].seed" in _error(_cfg(t1={"seed": {"from": "eq", "state": [1.0]}}))
    assert "tasks[0].range" in _error(_cfg(t0={"range": [1.0]}))
    bad = dict(CUSP)
    bad.pop("tasks")
    assert "tasks" in _error(bad)
    assert "<root>: Additional properties are not allowed ('colour'" in _error(dict(CUSP, colour="blue"))


def test_semantic_errors_carry_paths():
    assert "tasks[0].free" in _error(_cfg(t0={"free": "c"}))
    assert "tasks[0].range" in _error(_cfg(t0={"range": [1.0, -1.0]}))
    assert "tasks[0].seed.state" in _error(_cfg(t0={"seed": {"state": [1.0, 2.0]}}))
    assert "tasks[1].seed.from" in _error(_cfg(t1={"seed": {"from": "later"}}))
    assert "tasks[1].bounds.c" in _error(_cfg(t1={"bounds": {"c": [0.0, 1.0]}}))
    assert "tasks[2].curves[0]" in _error(_cfg(t2={"curves": ["nope"]}))
    assert "tasks[0].pinned" in _error(_cfg(t0={"pinned": [0]}))
    assert "tasks[0].system" in _error(_cfg(t0={"system": "lorenz"}))
    assert "tasks[0].system" in _error(_cfg(t0={"system": "sntc-minimal", "constants": {"eps": 0.5}}))
    dup = _cfg()
    dup["tasks"][1]["id"] = "eq"
    assert "duplicate" in _error(dup)
    assert "unknown parameter" in _error(dict(CUSP, params={"zeta": 1.0}))


def test_yaml_file_and_parse_error(tmp_path):
    good = tmp_path / "good.yaml"
    good.write_text(yaml.safe_dump(CUSP))
    assert load_config(good).name == "cusp-small"
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: [unclosed\n")
    assert "YAML" in _error(bad)
    assert "neither a file nor a bundled scenario" in _error("no-such-scenario")


def test_emit_curve_csv(tmp_path):
    sys = normal_form("cusp")
    seed = fold_seed(sys, [1.0], {"a": 2.0, "b": -3.0}, ("a", "b"))
    c = continue_fold_curve(sys, seed, ContinuationSettings(h0=0.01, h_max=0.05), bounds={"b": (-4.0, -0.1)})
    data = read_curve_csv(emit_curve_csv(c, tmp_path / "sn.csv"))
    assert data["system"] == "cusp" and data["kind"] == "Fold"
    assert data["names"] == ["index", "a", "b", "x1", "gamma", "alpha", "beta_cusp", "beta_bt", "max_re_eig"]
    a, b = data["columns"]["a"], data["columns"]["b"]
    assert len(a) == len(c)
    assert np.max(np.abs(a * a / 4 + b**3 / 27)) <= 1e-8

    eq = continue_equilibrium(sys, [2.28], {"a": -5.0, "b": -3.0}, "a", (-5.5, 5.5))
    path = emit_curve_csv(eq, tmp_path / "eq.csv")
    data = read_curve_csv(path)
    assert data["params"] == "b=-3.0"
    for col in ("alpha", "beta_cusp", "beta_bt"):
        assert np.all(np.isnan(data["columns"][col]))
    assert np.all(np.isfinite(data["columns"]["gamma"]))
    assert sorted(s["a"] for s in data["specials"]) == pytest.approx([-2.0, 2.0], abs=1e-8)
    assert {s["kind"] for s in data["specials"]} == {"Fold"}

    with pytest.raises(PreconditionError):
        emit_curve_csv(Curve("Fold", sys, ("a", "b"), {}), tmp_path / "empty.csv")


@pytest.fixture(scope="module")
def oracle_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("oracles")
    return [run_scenario("normal-form-oracles", root / f"run{i}") for i in range(2)]


def test_oracle_scenario_report(oracle_runs):
    rep = oracle_runs[0]
    assert rep.ok
    kinds = {r["kind"] for r in rep.specials}
    assert {"Cusp", "SntcSingleZero", "SntcDoubleZero", "BogdanovTakens"} <= kinds
    for t in rep.tasks:
        if "max_oracle_dev" in t.summary:
            assert t.summary["max_oracle_dev"] <= 1e-7
    on_disk = json.loads((rep.output_dir / "report.json").read_text())
    assert on_disk["ok"] and [t["id"] for t in on_disk["tasks"]] == [t.id for t in rep.tasks]


def test_manifest_lists_every_file(oracle_runs):
    rep = oracle_runs[0]
    out = rep.output_dir
    manifest = json.loads((out / "manifest.json").read_text())
    listed = {f["path"] for f in manifest["files"]}
    present = {p.name for p in out.iterdir()} - {"manifest.json"}
    assert listed == present
    for f in manifest["files"]:
        assert hashlib.sha256((out / f["path"]).read_bytes()).hexdigest() == f["sha256"]


def test_runs_are_deterministic(oracle_runs):
    a, b = (r.output_dir for r in oracle_runs)
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        if n != "manifest.json":
            assert (a / n).read_bytes() == (b / n).read_bytes(), n
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert ma["files"] == mb["files"]


def test_specials_round_trip(oracle_runs, tmp_path):
    rep = oracle_runs[0]
    records = json.loads((rep.output_dir / "specials.json").read_text())
    assert records
    for rec in records:
        assert set(rec) >= {"kind", "params", "state", "diagnostics"}
        assert set(rec["diagnostics"]) >= {"alpha", "beta_cusp", "beta_bt", "eigenvalues"}
        sys = get_system(rec["system"], **rec.get("constants", {}))
        assert verify_special_record(rec, sys) <= 1e-8


def test_kooi_single_zero_round_trip(tmp_path):
    rep = run_scenario("kooi-single-zero", tmp_path)
    assert rep.ok
    records = json.loads((tmp_path / "specials.json").read_text())
    assert any(r.get("transversal") is not None for r in records)
    assert any(r.get("q") is not None for r in records)
    for rec in records:
        assert verify_special_record(rec) <= 1e-8
    sz = [r for r in records if r["kind"] == "SntcSingleZero" and r["curve_kind"] == "Fold"]
    assert len(sz) == 1


def test_failed_and_skipped_tasks(tmp_path):
    cfg = _cfg(t0={"range": [-5.5, -5.2]})
    rep = run_scenario(cfg, tmp_path)
    assert not rep.ok
    assert rep.task("eq").status == "ok"
    assert rep.task("sn").status == "error" and "Fold" in rep.task("sn").message
    assert rep.task("codim2").status == "skipped"
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert "eq.csv" in {f["path"] for f in manifest["files"]}


def test_oracle_tolerance_violation_is_an_error(tmp_path):
    cfg = _cfg(t1={"oracle_tol": 1e-30})
    rep = run_scenario(cfg, tmp_path)
    assert rep.task("sn").status == "error"
    assert "oracle" in rep.task("sn").message
