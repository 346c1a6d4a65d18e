"""Batch driver: one JSON config in, builds plus checks out, reports to disk.

The pipeline always runs the four build stages (space, nets, labels,
family) and then whatever checks the config requests. Check failures are
recorded and never abort the run, so a single invocation surfaces every
violation at once. All randomness is derived from config.seed; two runs of
the same config differ only in the recorded stage timings.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .adjacent import build_adjacent_family, verify_covering
from .analysis import (
    doubling_constant,
    maximal_function,
    verify_comparability,
    verify_weighted_bounds,
)
from .cubes import verify_cube_axioms
from .errors import BuildError, ConfigError, CubeforgeError, ModeViolation
from .labeling import build_labels, verify_new_point_axioms
from .nets import build_reference_hierarchy, check_mode, verify_net_axioms
from .random_systems import (
    OmegaSampler,
    estimate_boundary_probability,
    realize_system,
    sample_outcome,
    scan_chain_separation,
)
from .report import VerificationReport
from .space import generate_space

KNOWN_CHECKS = ("net", "cubes", "covering", "mc_boundary", "chain",
                "analysis")
MODES = ("strict", "exploratory")
CHAIN_SCAN_SAMPLES = 10
CSV_VERSION_LINE = "# cubeforge-report v1"


@dataclass
class PipelineConfig:
    space: dict
    delta: float
    mode: str = "strict"
    seed: int = 0
    distinguished: Optional[int] = None
    checks: list = field(default_factory=list)
    mc: dict = field(default_factory=dict)
    analysis: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, doc: dict) -> "PipelineConfig":
        """Validate a parsed JSON document; errors carry the field path."""
        if not isinstance(doc, dict):
            raise ConfigError("config: expected a JSON object")
        unknown = set(doc) - {"space", "delta", "mode", "seed",
                              "distinguished", "checks", "mc", "analysis"}
        if unknown:
            raise ConfigError(f"config: unknown fields {sorted(unknown)}")
        space = doc.get("space")
        if not isinstance(space, dict) or "kind" not in space:
            raise ConfigError("space: expected an object with a 'kind'")
        delta = doc.get("delta")
        if not isinstance(delta, (int, float)) or not 0.0 < delta < 1.0:
            raise ConfigError(f"delta: expected a ratio in (0, 1), "
                              f"got {delta!r}")
        mode = doc.get("mode", "strict")
        if mode not in MODES:
            raise ConfigError(f"mode: expected one of {MODES}, got {mode!r}")
        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            raise ConfigError(f"seed: expected an unsigned 64-bit integer, "
                              f"got {seed!r}")
        dist = doc.get("distinguished")
        if dist is not None and (not isinstance(dist, int) or dist < 0):
            raise ConfigError(f"distinguished: expected a point id, "
                              f"got {dist!r}")
        checks = doc.get("checks", [])
        if not isinstance(checks, list):
            raise ConfigError("checks: expected a list")
        for c in checks:
            if c not in KNOWN_CHECKS:
                raise ConfigError(f"checks: unknown check {c!r}, expected a "
                                  f"subset of {list(KNOWN_CHECKS)}")
        mc = doc.get("mc", {})
        if not isinstance(mc, dict):
            raise ConfigError("mc: expected an object")
        if "N" in mc and (not isinstance(mc["N"], int) or mc["N"] < 1):
            raise ConfigError(f"mc.N: expected a positive integer, "
                              f"got {mc['N']!r}")
        if "tau_list" in mc:
            taus = mc["tau_list"]
            if not isinstance(taus, list) or not taus \
                    or any(not isinstance(t, (int, float)) or t <= 0
                           for t in taus):
                raise ConfigError("mc.tau_list: expected a non-empty list of "
                                  "positive thresholds")
        if "points" in mc:
            pts = mc["points"]
            if not isinstance(pts, list) \
                    or any(not isinstance(x, int) or x < 0 for x in pts):
                raise ConfigError("mc.points: expected a list of point ids")
        if "k" in mc and not isinstance(mc["k"], int):
            raise ConfigError(f"mc.k: expected an integer level, "
                              f"got {mc['k']!r}")
        analysis = doc.get("analysis", {})
        if not isinstance(analysis, dict):
            raise ConfigError("analysis: expected an object")
        if "p_list" in analysis:
            ps = analysis["p_list"]
            if not isinstance(ps, list) \
                    or any(not isinstance(p, (int, float)) or p <= 1
                           for p in ps):
                raise ConfigError("analysis.p_list: expected a list of "
                                  "exponents above 1")
        nrf = analysis.get("n_random_functions", 3)
        if not isinstance(nrf, int) or nrf < 1:
            raise ConfigError("analysis.n_random_functions: expected a "
                              f"positive integer, got {nrf!r}")
        return cls(space=space, delta=float(delta), mode=mode, seed=seed,
                   distinguished=dist, checks=list(checks), mc=dict(mc),
                   analysis=dict(analysis))

    def to_json(self):
        out = {"space": self.space, "delta": self.delta, "mode": self.mode,
               "seed": self.seed, "checks": list(self.checks)}
        if self.distinguished is not None:
            out["distinguished"] = self.distinguished
        if self.mc:
            out["mc"] = self.mc
        if self.analysis:
            out["analysis"] = self.analysis
        return out


@dataclass
class RunReport:
    config: dict
    stages: list = field(default_factory=list)   # {"name", "seconds"}
    checks: dict = field(default_factory=dict)   # name -> report json
    tables: dict = field(default_factory=dict)   # flat rows for the CSVs
    artifacts: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def to_json(self):
        return {"config": self.config, "stages": self.stages,
                "checks": self.checks, "tables": self.tables,
                "artifacts": self.artifacts, "passed": self.passed}


def _stage(report: RunReport, name: str, fn):
    t0 = time.perf_counter()
    try:
        value = fn()
    except CubeforgeError as e:
        raise BuildError(f"stage {name}: {e}") from e
    report.stages.append({"name": name,
                          "seconds": time.perf_counter() - t0})
    return value


def _run_check(report: RunReport, name: str, fn):
    """Run one requested check; failures and errors are recorded, not
    raised, so the remaining checks still run."""
    try:
        rep = fn()
    except CubeforgeError as e:
        rep = VerificationReport(name)
        rep.add("run", False, 0, note=f"{type(e).__name__}: {e}")
    report.checks[name] = rep.to_json()


def _flatten(title: str, parts) -> VerificationReport:
    """Merge (prefix, VerificationReport) pairs into one flat report."""
    out = VerificationReport(title)
    for prefix, rep in parts:
        for c in rep.checks:
            name = f"{prefix}_{c.name}" if prefix else c.name
            out.add(name, c.passed, c.checked, c.witnesses, c.details,
                    c.note)
    return out


def run_pipeline(config: PipelineConfig,
                 out_dir: Optional[str] = None) -> RunReport:
    report = RunReport(config=config.to_json())

    space = _stage(report, "space", lambda: generate_space(config.space))
    try:
        check_mode(config.mode, space.profile.tri_const, config.delta)
    except ModeViolation as e:
        raise ConfigError(f"delta: {e}") from e
    hier = _stage(report, "nets", lambda: build_reference_hierarchy(
        space, config.delta, mode=config.mode,
        distinguished=config.distinguished))
    labeled = _stage(report, "labels", lambda: build_labels(hier))
    family = _stage(report, "family", lambda: build_adjacent_family(
        labeled, distinguished=config.distinguished))

    for check in config.checks:
        if check == "net":
            _run_check(report, "net", lambda: verify_net_axioms(hier))
        elif check == "cubes":
            _run_check(report, "cubes", lambda: _flatten(
                "cube axioms",
                [(f"t{t}", verify_cube_axioms(family.system(t)))
                 for t in range(1, family.n_systems + 1)]))
        elif check == "covering":
            _run_check(report, "covering", lambda: verify_covering(family))
        elif check == "mc_boundary":
            _run_check(report, "mc_boundary",
                       lambda: _mc_boundary_check(config, labeled, report))
        elif check == "chain":
            _run_check(report, "chain",
                       lambda: _chain_check(config, labeled))
        elif check == "analysis":
            _run_check(report, "analysis",
                       lambda: _analysis_check(config, space, family,
                                               report))

    if out_dir is not None:
        import os
        os.makedirs(out_dir, exist_ok=True)
        for name, doc in (("space", space.to_json()),
                          ("hierarchy", hier.to_json()),
                          ("family", family.to_json())):
            path = os.path.join(out_dir, f"{name}.json")
            with open(path, "w") as fh:
                json.dump(doc, fh, indent=2, sort_keys=True)
            report.artifacts[name] = path
        report.artifacts["report"] = os.path.join(out_dir, "report.json")
        emit_report(report, "json", out_dir)
    return report


def _mc_boundary_check(config: PipelineConfig, labeled,
                       report: RunReport) -> VerificationReport:
    mc = config.mc
    n = mc.get("N", 1000)
    taus = mc.get("tau_list", [0.1])
    points = mc.get("points", [0])
    k = mc.get("k", labeled.k_min)
    sampler = OmegaSampler(labeled, "single", seed=config.seed)
    rep = VerificationReport("boundary decay")
    rows = []
    for x in points:
        for tau in taus:
            est = estimate_boundary_probability(sampler, int(x), k,
                                                float(tau), n)
            rows.append(est.to_json())
            rep.add(f"x{x}_tau{tau:g}", est.passed, n,
                    details=est.to_json())
    report.tables["boundary"] = rows
    return rep


def _chain_check(config: PipelineConfig, labeled) -> VerificationReport:
    """Scan a fixed batch of sampled systems for admissible boundary
    chains; the per-sample admissible counts land in the details."""
    sampler = OmegaSampler(labeled, "single", seed=config.seed)
    parts = []
    for i in range(CHAIN_SCAN_SAMPLES):
        outcome = sample_outcome(sampler, i)
        axioms = verify_new_point_axioms(outcome)
        scan = scan_chain_separation(realize_system(labeled, outcome))
        parts.append((f"sample{i}", _flatten("", [("", axioms),
                                                  ("", scan)])))
    return _flatten("chain separation scans", parts)


def _analysis_check(config: PipelineConfig, space, family,
                    report: RunReport) -> VerificationReport:
    cfg = config.analysis
    p_list = [float(p) for p in cfg.get("p_list", [2.0])]
    n_funcs = cfg.get("n_random_functions", 3)
    mu = np.ones(space.n)
    rng = np.random.default_rng(
        np.random.SeedSequence(config.seed, spawn_key=(1009,)))
    funcs = [rng.uniform(-1.0, 1.0, space.n) for _ in range(n_funcs)]

    parts = []
    c_mu, c_exp = doubling_constant(space, mu)
    doubling = VerificationReport("doubling")
    doubling.add("doubling_sweep", True, space.n,
                 details={"C_mu": c_mu, "exponent": c_exp})
    parts.append(("", doubling))

    comp = verify_comparability(family, mu, funcs)
    parts.append(("comparability", comp))

    bounds_rows = []
    for c in comp.checks:
        rhs = c.details.get("C_a", c.details.get(
            "C_a_prime", c.details.get("constant")))
        if rhs is not None and "empirical" in c.details:
            bounds_rows.append({"name": f"comparability_{c.name}",
                                "lhs": c.details["empirical"], "rhs": rhs,
                                "pass": c.passed})
    for p in p_list:
        omega = rng.uniform(0.5, 2.0, space.n)
        f = rng.uniform(-1.0, 1.0, space.n)
        wrep = verify_weighted_bounds(family, mu, omega, f, p)
        parts.append((f"p{p:g}", wrep))
        for c in wrep.checks:
            for entry in c.details.get("per_system", []):
                bounds_rows.append({
                    "name": f"p{p:g}_{c.name}_t{entry['t']}",
                    "lhs": entry["norm"], "rhs": entry["bound"],
                    "pass": entry["norm"] <= entry["bound"] * (1 + 1e-9)})
    report.tables["bounds"] = bounds_rows

    f0 = funcs[0]
    m_ball = maximal_function(space, mu, f0, "ball")
    per_t = np.stack([
        maximal_function(space, mu, f0, "dyadic", system=family.system(t))
        for t in range(1, family.n_systems + 1)])
    report.tables["maximal"] = [
        {"x": int(x), "ball": float(m_ball[x]),
         "dyadic_max": float(per_t[:, x].max()),
         "dyadic_sum": float(per_t[:, x].sum())}
        for x in range(space.n)]
    return _flatten("analysis", parts)


# -- emission ------------------------------------------------------------------

CSV_SCHEMAS = {
    "boundary": ("boundary.csv", ["x", "k", "tau", "N", "hits", "p_hat",
                                  "wilson_upper", "bound_C2_tau_eta",
                                  "pass"]),
    "bounds": ("bounds.csv", ["name", "lhs", "rhs", "pass"]),
    "maximal": ("maximal.csv", ["x", "ball", "dyadic_max", "dyadic_sum"]),
}


def emit_report(report: RunReport, format: str, out_dir: str = ".") -> list:
    """Write the report to out_dir; returns the written file paths.

    json: the full structured report in one file. csv: one flat table per
    schema (boundary sweeps, norm bounds, pointwise maximal values), each
    starting with a version comment line; tables the run never produced
    come out as header-only files.
    """
    import os
    if format not in ("json", "csv"):
        raise ConfigError(f"format: expected 'json' or 'csv', "
                          f"got {format!r}")
    os.makedirs(out_dir, exist_ok=True)
    if format == "json":
        path = os.path.join(out_dir, "report.json")
        with open(path, "w") as fh:
            json.dump(report.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return [path]
    paths = []
    for key, (fname, columns) in CSV_SCHEMAS.items():
        path = os.path.join(out_dir, fname)
        with open(path, "w") as fh:
            fh.write(CSV_VERSION_LINE + "\n")
            fh.write(",".join(columns) + "\n")
            for row in report.tables.get(key, []):
                fh.write(",".join(_csv_cell(row[c]) for c in columns) + "\n")
        paths.append(path)
    return paths


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)
