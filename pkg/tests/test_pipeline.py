import copy
import json

import pytest

from cubeforge.errors import BuildError, ConfigError
from cubeforge.pipeline import (
    PipelineConfig,
    RunReport,
    emit_report,
    run_pipeline,
)

DELTA = 1.0 / 144.0

REFERENCE = {
    "space": {"kind": "geometric_line", "levels": 3, "delta": DELTA},
    "delta": DELTA,
    "mode": "strict",
    "seed": 20260501,
    "checks": ["net", "cubes", "covering", "mc_boundary", "chain",
               "analysis"],
    "mc": {"N": 1000, "tau_list": [0.1, 0.01, 0.001], "points": [0]},
    "analysis": {"p_list": [1.5, 2.0], "n_random_functions": 3},
}


def small_config(**overrides):
    doc = copy.deepcopy(REFERENCE)
    doc.update(overrides)
    return PipelineConfig.from_json(doc)


def strip_timing(doc: dict) -> dict:
    doc = json.loads(json.dumps(doc))
    for stage in doc["stages"]:
        stage.pop("seconds")
    return doc


def test_reference_config_all_checks_pass():
    with open("demos/configs/strict.json") as fh:
        cfg = PipelineConfig.from_json(json.load(fh))
    report = run_pipeline(cfg)
    assert report.passed
    assert [s["name"] for s in report.stages] == ["space", "nets", "labels",
                                                  "family"]
    assert set(report.checks) == set(REFERENCE["checks"])
    for name, doc in report.checks.items():
        assert doc["passed"], name
    assert len(report.tables["boundary"]) == 3
    assert all(row["pass"] for row in report.tables["boundary"])
    assert report.tables["bounds"]
    assert report.tables["maximal"]


def test_empty_checks_build_stages_only():
    report = run_pipeline(small_config(checks=[]))
    assert [s["name"] for s in report.stages] == ["space", "nets", "labels",
                                                  "family"]
    assert report.checks == {}
    assert report.tables == {}
    assert report.passed  # vacuous


def test_runs_are_deterministic_modulo_timing():
    a = run_pipeline(small_config())
    b = run_pipeline(small_config())
    assert strip_timing(a.to_json()) == strip_timing(b.to_json())


def test_config_field_paths_in_errors():
    bad = [
        ({}, "space:"),
        ({**REFERENCE, "space": {"levels": 3}}, "space:"),
        ({**REFERENCE, "delta": 1.5}, "delta:"),
        ({**REFERENCE, "mode": "fast"}, "mode:"),
        ({**REFERENCE, "seed": -1}, "seed:"),
        ({**REFERENCE, "seed": 2 ** 64}, "seed:"),
        ({**REFERENCE, "distinguished": "x"}, "distinguished:"),
        ({**REFERENCE, "checks": ["nets"]}, "checks:"),
        ({**REFERENCE, "checks": "net"}, "checks:"),
        ({**REFERENCE, "mc": {"N": 0}}, "mc.N:"),
        ({**REFERENCE, "mc": {"tau_list": []}}, "mc.tau_list:"),
        ({**REFERENCE, "mc": {"tau_list": [-0.1]}}, "mc.tau_list:"),
        ({**REFERENCE, "mc": {"points": [0, -2]}}, "mc.points:"),
        ({**REFERENCE, "mc": {"k": "top"}}, "mc.k:"),
        ({**REFERENCE, "analysis": {"p_list": [1.0]}}, "analysis.p_list:"),
        ({**REFERENCE, "analysis": {"n_random_functions": 0}},
         "analysis.n_random_functions:"),
        ({**REFERENCE, "extra": 1}, "config:"),
    ]
    for doc, prefix in bad:
        with pytest.raises(ConfigError) as e:
            PipelineConfig.from_json(doc)
        assert str(e.value).startswith(prefix), (doc, str(e.value))


def test_strict_product_violation_is_a_config_error():
    cfg = small_config(
        space={"kind": "geometric_line", "levels": 3, "delta": 0.01},
        delta=0.01, checks=[])
    with pytest.raises(ConfigError) as e:
        run_pipeline(cfg)
    assert str(e.value).startswith("delta:")


def test_build_failures_carry_the_stage_name():
    # the descriptor shape passes config validation but no such generator
    # exists,
    # so the failure surfaces in the space stage
    cfg = small_config(space={"kind": "moebius_strip"}, checks=[])
    with pytest.raises(BuildError) as e:
        run_pipeline(cfg)
    assert "stage space" in str(e.value)


def test_checks_report_and_continue_on_precondition_errors():
    # exploratory hierarchies cannot back a boundary decay estimate; the
    # check must come back failed while the rest of the run completes
    cfg = small_config(
        space={"kind": "geometric_line", "levels": 3, "delta": 0.01},
        delta=0.01, mode="exploratory", checks=["net", "mc_boundary"])
    report = run_pipeline(cfg)
    assert report.checks["net"]["passed"]
    assert not report.checks["mc_boundary"]["passed"]
    note = report.checks["mc_boundary"]["checks"][0]["note"]
    assert "PreconditionFail" in note
    assert not report.passed


def test_emit_json_round_trips(tmp_path):
    report = run_pipeline(small_config(checks=["net", "mc_boundary"]))
    paths = emit_report(report, "json", str(tmp_path))
    assert [p.endswith("report.json") for p in paths] == [True]
    with open(paths[0]) as fh:
        assert json.load(fh) == json.loads(json.dumps(report.to_json()))


def test_emit_csv_schema(tmp_path):
    report = run_pipeline(small_config(checks=["mc_boundary", "analysis"]))
    paths = emit_report(report, "csv", str(tmp_path))
    names = sorted(p.rsplit("/", 1)[1] for p in paths)
    assert names == ["boundary.csv", "bounds.csv", "maximal.csv"]
    with open(tmp_path / "boundary.csv") as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "# cubeforge-report v1"
    assert lines[1] == "x,k,tau,N,hits,p_hat,wilson_upper,bound_C2_tau_eta,pass"
    assert len(lines) == 2 + 3  # one row per tau
    assert all(line.endswith("true") for line in lines[2:])


def test_emit_handles_empty_reports(tmp_path):
    report = RunReport(config={})
    for path in emit_report(report, "csv", str(tmp_path)):
        with open(path) as fh:
            lines = fh.read().splitlines()
        assert lines[0] == "# cubeforge-report v1"
        assert len(lines) == 2  # version comment + column header
    paths = emit_report(report, "json", str(tmp_path))
    with open(paths[0]) as fh:
        doc = json.load(fh)
    assert doc["passed"] and doc["checks"] == {}


def test_emit_rejects_unknown_formats(tmp_path):
    with pytest.raises(ConfigError):
        emit_report(RunReport(config={}), "xml", str(tmp_path))


def test_run_pipeline_writes_artifacts(tmp_path):
    report = run_pipeline(small_config(checks=[]), out_dir=str(tmp_path))
    assert set(report.artifacts) == {"space", "hierarchy", "family",
                                     "report"}
    for path in report.artifacts.values():
        with open(path) as fh:
            json.load(fh)
