"""Scenario driver: resolution ladders, verdicts, JSON/CSV reports.

A scenario names a geometry source, a strictly increasing resolution ladder
and the checks to run.  Ladder entries are independent and may run
concurrently; the report is assembled in ladder order, so results are
bit-reproducible for identical inputs (timings are only included on request
since they would break that).
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

import hklab
from hklab.bvp import capillary_problem, corner_exponent, exact_cap_solution, solve_mixed_bvp
from hklab.caps import AnalyticCap, make_cap
from hklab.containers import Container, as_angle, parse_container
from hklab.domain import mesh_domain
from hklab.errors import HkLabError, WindowError
from hklab.identities import applicable_identities, check_identity, hk_report
from hklab.profiles import ProfileCurve, make_axisymmetric, perturb_profile, profile_from_cap
from hklab.reilly import hk_pipeline, reilly_sides
from hklab.surface import mesh_surface

logger = logging.getLogger("hklab.report")

ALL_CHECKS = ("identities", "hk", "bvp", "reilly", "corner")

RATE_FLOOR = 1e-13


class ConfigError(HkLabError):
    """Invalid scenario configuration."""


@dataclass
class Scenario:
    name: str
    container: str
    theta: float | None
    dim: int
    surface: dict
    ladder: list
    checks: list
    grading: float = 0.5
    perturb: float = 0.0
    tol: float = 1e-10
    max_iter: int | None = None
    jobs: int = 1
    out: str | None = None
    csv: str | None = None
    timings: bool = False

    def __post_init__(self) -> None:
        self.ladder = [int(r) for r in self.ladder]
        if len(self.ladder) == 0 or any(
            b <= a for a, b in zip(self.ladder, self.ladder[1:])
        ):
            raise ConfigError("resolution ladder must be strictly increasing and non-empty")
        if "all" in self.checks:
            self.checks = list(ALL_CHECKS)
        unknown = set(self.checks) - set(ALL_CHECKS)
        if unknown:
            raise ConfigError(f"unknown checks: {sorted(unknown)}")
        if not self.checks:
            raise ConfigError("at least one check is required")
        parse_container(self.container)
        if self.dim not in (1, 2):
            raise ConfigError("dim must be 1 or 2")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "container": self.container,
            "theta": self.theta,
            "dim": self.dim,
            "surface": dict(self.surface),
            "ladder": list(self.ladder),
            "checks": list(self.checks),
            "grading": self.grading,
            "perturb": self.perturb,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "jobs": self.jobs,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        keys = {
            "name", "container", "theta", "dim", "surface", "ladder", "checks",
            "grading", "perturb", "tol", "max_iter", "jobs", "out", "csv", "timings",
        }
        unknown = set(data) - keys
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**data)


def _build_source(scenario: Scenario):
    """Geometry source per the scenario surface spec."""
    kind = scenario.surface.get("kind", "cap")
    container = parse_container(scenario.container)
    if kind == "cap":
        radius = float(scenario.surface.get("radius", 1.0))
        cap = make_cap(container, scenario.theta, radius, scenario.dim)
        if scenario.perturb:
            prof = perturb_profile(profile_from_cap(cap), scenario.perturb)
            return make_axisymmetric(prof, scenario.theta, container)
        return cap
    if kind == "off":
        from hklab.meshio import read_off

        return ("off", read_off(scenario.surface["path"], container, scenario.theta))
    if kind == "profile":
        import json

        data = json.loads(Path(scenario.surface["path"]).read_text(encoding="utf-8"))
        prof = ProfileCurve(
            np.asarray(data["samples"], dtype=float),
            container,
            as_angle(data.get("theta", scenario.theta)),
            dim=int(data.get("dim", scenario.dim)),
        )
        return make_axisymmetric(prof, scenario.theta, container)
    raise ConfigError(f"unknown surface kind {kind!r}")


def _l2_error(domain, values, exact) -> float:
    e = values - exact(domain.vertices)
    ref = exact(domain.vertices)
    num = float(np.sum(domain.cell_volumes * (e[domain.cells] ** 2).mean(axis=1)))
    den = float(np.sum(domain.cell_volumes * (ref[domain.cells] ** 2).mean(axis=1)))
    return math.sqrt(num / den) if den > 0 else math.sqrt(num)


def _run_stage(scenario: Scenario, source, resolution: int) -> dict:
    container = parse_container(scenario.container)
    surface_source = source[1] if isinstance(source, tuple) else source
    if isinstance(source, tuple):
        surface = surface_source  # imported meshes are used as-is
    else:
        surface = mesh_surface(surface_source, resolution)
    result: dict = {"resolution": resolution}

    # derivative recovery is cleanest on ungraded meshes; only the corner fit
    # needs the grading toward Gamma.  Solid (n = 2) domains are capped: the
    # integral checks only need O(h^2) volume accuracy and the solver stages
    # carry the recovery cost.
    res_int = resolution if scenario.dim == 1 else min(resolution, 48)
    res_sol = resolution if scenario.dim == 1 else min(resolution, 24)
    needs_domain = bool({"hk", "bvp", "reilly"} & set(scenario.checks))
    domain = None
    domain_sol = None
    if needs_domain:
        domain = mesh_domain(surface, container, res_int, grading=0.0)
        domain_sol = (
            domain
            if res_sol == res_int
            else mesh_domain(surface, container, res_sol, grading=0.0)
        )

    if "identities" in scenario.checks:
        entries = []
        for ident in applicable_identities(container):
            res = check_identity(ident, surface, scenario.theta)
            entries.append(
                {
                    "identity": res.identity,
                    "residual": {"raw": res.raw, "scale": res.scale, "relative": res.relative},
                }
            )
        result["identities"] = entries

    if "hk" in scenario.checks:
        result["hk"] = hk_report(surface, domain, container, scenario.theta).to_dict()

    solution = None
    if {"bvp", "reilly"} & set(scenario.checks) and container.has_support:
        problem = capillary_problem(domain_sol, scenario.theta)
        solution = solve_mixed_bvp(problem, tol=scenario.tol, max_iter=scenario.max_iter)

    if "bvp" in scenario.checks and solution is not None:
        entry = {
            "iterations": solution.iterations,
            "residual_norm": solution.residual_norm,
            "energy": solution.energy,
            "flux_constant": solution.problem.flux_constant,
            "max_f": float(solution.f.max()),
        }
        if isinstance(surface_source, AnalyticCap):
            entry["l2_error"] = _l2_error(
                domain_sol, solution.f, exact_cap_solution(surface_source)
            )
        result["bvp"] = entry

    if "reilly" in scenario.checks and solution is not None:
        sides = reilly_sides(domain_sol, solution, weighted=False)
        entry = {"unweighted": sides.to_dict()}
        if container is Container.HALF_BALL:
            entry["weighted"] = reilly_sides(domain_sol, solution, weighted=True).to_dict()
        entry["pipeline"] = hk_pipeline(
            container, domain_sol, surface, solution, scenario.theta
        ).to_dict()
        result["reilly"] = entry

    if "corner" in scenario.checks and scenario.dim == 1 and container.has_support:
        graded = mesh_domain(surface, container, resolution, grading=scenario.grading)
        corner_problem = capillary_problem(graded, scenario.theta)
        corner_solution = solve_mixed_bvp(
            corner_problem, tol=scenario.tol, max_iter=scenario.max_iter
        )
        try:
            result["corner"] = corner_exponent(corner_solution, scenario.theta).to_dict()
        except WindowError as exc:
            result["corner"] = {"error": str(exc)}

    return result


def _rates(series: list, ladder: list) -> list:
    """Observed order per refinement step (log ratio normalized by the step)."""
    out = []
    for (a, b), (r0, r1) in zip(zip(series, series[1:]), zip(ladder, ladder[1:])):
        if abs(a) < RATE_FLOOR or abs(b) < RATE_FLOOR:
            out.append(None)
        else:
            out.append(math.log2(abs(a) / abs(b)) / math.log2(r1 / r0))
    return out


def _collect_rates(results: list, ladder: list) -> dict:
    rates: dict = {}
    if len(results) < 2:
        return rates
    if all("identities" in r for r in results):
        by_name: dict[str, list] = {}
        for r in results:
            for item in r["identities"]:
                by_name.setdefault(item["identity"], []).append(item["residual"]["relative"])
        rates["identities"] = {k: _rates(v, ladder) for k, v in by_name.items()}
    if all("hk" in r for r in results):
        rates["hk_gap"] = _rates([r["hk"]["gap"] for r in results], ladder)
    if all("bvp" in r and "l2_error" in r.get("bvp", {}) for r in results):
        rates["bvp_l2"] = _rates([r["bvp"]["l2_error"] for r in results], ladder)
    if all("reilly" in r for r in results):
        rates["reilly_defect"] = _rates(
            [r["reilly"]["unweighted"]["defect"] for r in results], ladder
        )
    return rates


def _verdicts(scenario: Scenario, results: list, rates: dict) -> dict:
    verdicts: dict = {}
    top = results[-1]
    if "identities" in scenario.checks:
        ok = all(item["residual"]["relative"] <= 1e-2 for item in top["identities"])
        if len(results) >= 3:
            for name, rr in rates.get("identities", {}).items():
                vals = [x for x in rr if x is not None]
                if vals and float(np.mean(vals)) < 1.5:
                    residual = [i for i in top["identities"] if i["identity"] == name][0]
                    if residual["residual"]["relative"] > 1e-6:
                        ok = False
        verdicts["identities"] = ok
    if "hk" in scenario.checks:
        hk = top["hk"]
        scale = max(abs(hk["lhs"]), abs(hk["rhs_form2"]), 1e-300)
        forms_agree = abs(hk["rhs_form1"] - hk["rhs_form2"]) <= 1e-2 * scale
        inequality_holds = hk["gap"] >= -2e-2 * scale
        verdicts["hk"] = bool(forms_agree and inequality_holds)
    if "bvp" in scenario.checks and "bvp" in top:
        entry = top["bvp"]
        ok = entry["residual_norm"] <= max(scenario.tol * 10, 1e-8)
        if "l2_error" in entry:
            ok = ok and entry["l2_error"] <= 1e-2
        verdicts["bvp"] = bool(ok)
    if "reilly" in scenario.checks and "reilly" in top:
        entry = top["reilly"]
        ok = entry["unweighted"]["relative_defect"] <= 3e-2
        if "weighted" in entry:
            ok = ok and entry["weighted"]["relative_defect"] <= 5e-2
        ok = ok and all(s["pass"] for s in entry["pipeline"]["steps"])
        verdicts["reilly"] = bool(ok)
    if "corner" in scenario.checks and "corner" in top:
        entry = top["corner"]
        verdicts["corner"] = bool("error" not in entry and not entry.get("low_trust", False))
    return verdicts


def run_scenario(scenario: Scenario) -> dict:
    """Execute every check of the scenario over its ladder; returns the report."""
    source = _build_source(scenario)
    stage_times: list[float] = []

    def stage(res: int) -> tuple[dict, float]:
        t0 = time.perf_counter()
        out = _run_stage(scenario, source, res)
        return out, time.perf_counter() - t0

    if scenario.jobs > 1 and len(scenario.ladder) > 1:
        with ThreadPoolExecutor(max_workers=scenario.jobs) as pool:
            paired = list(pool.map(stage, scenario.ladder))
    else:
        paired = [stage(res) for res in scenario.ladder]
    results = [p[0] for p in paired]
    stage_times = [p[1] for p in paired]

    rates = _collect_rates(results, scenario.ladder)
    verdicts = _verdicts(scenario, results, rates)
    report = {
        "version": hklab.__version__,
        "scenario": scenario.to_dict(),
        "results": results,
        "rates": rates,
        "verdicts": verdicts,
        "passed": bool(all(verdicts.values())) if verdicts else True,
    }
    if scenario.timings:
        report["timings"] = {
            "stages": {str(r): t for r, t in zip(scenario.ladder, stage_times)}
        }
    return report


def write_report(report: dict, path: str | Path) -> None:
    from hklab.meshio import dump_json

    dump_json(report, path)


def write_csv(report: dict, path: str | Path) -> None:
    """Flat (check, name, resolution, value) table for external plotting."""
    rows = []
    for result in report["results"]:
        res = result["resolution"]
        for item in result.get("identities", []):
            rows.append(("identities", item["identity"], res, item["residual"]["relative"]))
        if "hk" in result:
            rows.append(("hk", "gap", res, result["hk"]["gap"]))
            rows.append(("hk", "relative_gap", res, result["hk"]["relative_gap"]))
        if "bvp" in result and "l2_error" in result["bvp"]:
            rows.append(("bvp", "l2_error", res, result["bvp"]["l2_error"]))
        if "reilly" in result:
            rows.append(
                ("reilly", "relative_defect", res, result["reilly"]["unweighted"]["relative_defect"])
            )
            for step in result["reilly"]["pipeline"]["steps"]:
                rows.append(("pipeline", step["name"], res, step["margin"]))
        if "corner" in result and "error" not in result["corner"]:
            rows.append(("corner", "lambda_hat", res, result["corner"]["lambda_hat"]))
            rows.append(("corner", "beta_hat", res, result["corner"]["beta_hat"]))
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["check", "name", "resolution", "value"])
        writer.writerows(rows)
