"""OFF and JSON mesh import/export.

Surface meshes travel as ASCII OFF (counts header, vertex lines, facet
lines; polylines use 2-gon facets with a zero z padding) or as JSON.  Domain
meshes and field data use the JSON schema

    {"vertices": [[x, ...]], "cells": [[i, ...]],
     "facet_tags": [{"facet": [i, ...], "tag": "Sigma" | "T"}],
     "fields": {name: [values]}}

plus a "metadata" block (dim, container, theta).  Serialization is canonical
(sorted keys, fixed float repr), so identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from hklab.containers import Container, as_angle, parse_container
from hklab.domain import DomainMesh
from hklab.errors import HkLabError
from hklab.surface import SurfaceMesh, cell_measures, discrete_geometry


def _canonical(obj):
    if isinstance(obj, dict):
        return {k: _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return None
        return v
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _canonical(obj.tolist())
    return obj


def dump_json(obj, path: str | Path) -> None:
    text = json.dumps(_canonical(obj), sort_keys=True, indent=1)
    Path(path).write_text(text + "\n", encoding="utf-8")


def dumps_json(obj) -> str:
    return json.dumps(_canonical(obj), sort_keys=True, indent=1)


# ---------------------------------------------------------------------------
# OFF
# ---------------------------------------------------------------------------


def write_off(mesh: SurfaceMesh, path: str | Path) -> None:
    lines = ["OFF", f"{mesh.num_vertices} {len(mesh.cells)} 0"]
    for v in mesh.vertices:
        coords = list(v) + [0.0] * (3 - len(v))
        lines.append(" ".join(repr(float(c)) for c in coords))
    for cell in mesh.cells:
        lines.append(f"{len(cell)} " + " ".join(str(int(i)) for i in cell))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_off(
    path: str | Path,
    container: Container | str = Container.HALF_SPACE,
    theta: float | None = None,
) -> SurfaceMesh:
    """Read an OFF surface and populate fields with the discrete estimators."""
    tokens: list[str] = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise HkLabError(f"{path}: not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    verts = np.array(
        [[float(tokens[pos + 3 * i + k]) for k in range(3)] for i in range(nv)]
    )
    pos += 3 * nv
    cells = []
    arity = None
    for _ in range(nf):
        m = int(tokens[pos])
        if arity is None:
            arity = m
        if m != arity:
            raise HkLabError("mixed facet arities are not supported")
        cells.append([int(tokens[pos + 1 + k]) for k in range(m)])
        pos += m + 1
    cells = np.asarray(cells, dtype=np.int64)
    container = parse_container(container)
    if arity == 2:
        vertices = verts[:, :2].copy()
        dim = 1
    elif arity == 3:
        vertices = verts
        dim = 2
    else:
        raise HkLabError(f"unsupported facet arity {arity}")
    areas, _, _ = cell_measures(vertices, cells, dim)
    raw = SurfaceMesh(
        dim=dim,
        container=container,
        theta=as_angle(theta),
        vertices=vertices,
        cells=cells,
        cell_areas=areas,
        normals=np.zeros_like(vertices),
        mean_curvature=np.zeros(nv),
        boundary_loops=[],
        boundary_vertices=np.empty(0, dtype=np.int64),
        boundary_mu=np.empty((0, dim + 1)),
        boundary_conormal_support=np.empty((0, dim + 1)),
        boundary_support_normal=np.empty((0, dim + 1)),
        low_trust=np.zeros(nv, dtype=bool),
        source=None,
    )
    return discrete_geometry(raw)


# ---------------------------------------------------------------------------
# JSON meshes
# ---------------------------------------------------------------------------


def surface_to_dict(mesh: SurfaceMesh) -> dict:
    return {
        "metadata": {
            "kind": "surface",
            "dim": mesh.dim,
            "container": mesh.container.value,
            "theta": None if mesh.theta is None else mesh.theta.radians,
        },
        "vertices": mesh.vertices,
        "cells": mesh.cells,
        "boundary_loops": [loop for loop in mesh.boundary_loops],
        "fields": {
            "normals": mesh.normals,
            "mean_curvature": mesh.mean_curvature,
            "boundary_mu": mesh.boundary_mu,
            "boundary_conormal_support": mesh.boundary_conormal_support,
            "boundary_support_normal": mesh.boundary_support_normal,
        },
    }


def write_surface_json(mesh: SurfaceMesh, path: str | Path) -> None:
    dump_json(surface_to_dict(mesh), path)


def read_surface_json(path: str | Path) -> SurfaceMesh:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    meta = data.get("metadata", {})
    vertices = np.asarray(data["vertices"], dtype=float)
    cells = np.asarray(data["cells"], dtype=np.int64)
    dim = int(meta.get("dim", cells.shape[1] - 1))
    container = parse_container(meta.get("container", "half-space"))
    areas, _, _ = cell_measures(vertices, cells, dim)
    raw = SurfaceMesh(
        dim=dim,
        container=container,
        theta=as_angle(meta.get("theta")),
        vertices=vertices,
        cells=cells,
        cell_areas=areas,
        normals=np.zeros_like(vertices),
        mean_curvature=np.zeros(len(vertices)),
        boundary_loops=[],
        boundary_vertices=np.empty(0, dtype=np.int64),
        boundary_mu=np.empty((0, dim + 1)),
        boundary_conormal_support=np.empty((0, dim + 1)),
        boundary_support_normal=np.empty((0, dim + 1)),
        low_trust=np.zeros(len(vertices), dtype=bool),
        source=None,
    )
    return discrete_geometry(raw)


def domain_to_dict(domain: DomainMesh) -> dict:
    tags = [
        {"facet": [int(i) for i in f], "tag": "Sigma"} for f in domain.sigma_facets
    ] + [{"facet": [int(i) for i in f], "tag": "T"} for f in domain.t_facets]
    fields = {"sigma_H": domain.sigma_H}
    if np.all(np.isfinite(domain.d_gamma)):
        fields["d_gamma"] = domain.d_gamma
    return {
        "metadata": {
            "kind": "domain",
            "dim": domain.dim,
            "container": domain.container.value,
            "theta": None if domain.theta is None else domain.theta.radians,
            "gamma_vertices": domain.gamma_vertices,
        },
        "vertices": domain.vertices,
        "cells": domain.cells,
        "facet_tags": tags,
        "fields": fields,
    }


def write_domain_json(domain: DomainMesh, path: str | Path) -> None:
    dump_json(domain_to_dict(domain), path)


def read_domain_json(path: str | Path) -> DomainMesh:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    meta = data.get("metadata", {})
    vertices = np.asarray(data["vertices"], dtype=float)
    cells = np.asarray(data["cells"], dtype=np.int64)
    sigma, tfac = [], []
    for tag in data["facet_tags"]:
        (sigma if tag["tag"] == "Sigma" else tfac).append(tag["facet"])
    d = vertices.shape[1]
    sigma_facets = np.asarray(sigma, dtype=np.int64).reshape(-1, d)
    t_facets = np.asarray(tfac, dtype=np.int64).reshape(-1, d)
    gamma = np.asarray(meta.get("gamma_vertices", []), dtype=np.int64)
    fields = data.get("fields", {})
    if "d_gamma" in fields:
        d_gamma = np.asarray(fields["d_gamma"], dtype=float)
    elif len(gamma):
        d_gamma = np.min(
            np.linalg.norm(vertices[:, None, :] - vertices[gamma][None, :, :], axis=2), axis=1
        )
    else:
        d_gamma = np.full(len(vertices), np.inf)
    sigma_h = np.asarray(fields.get("sigma_H", np.zeros(len(sigma_facets))), dtype=float)
    return DomainMesh(
        dim=d,
        container=parse_container(meta.get("container", "half-space")),
        theta=as_angle(meta.get("theta")),
        vertices=vertices,
        cells=cells,
        sigma_facets=sigma_facets,
        t_facets=t_facets,
        gamma_vertices=gamma,
        d_gamma=d_gamma,
        sigma_H=sigma_h,
    )


def solution_to_dict(solution) -> dict:
    """Domain schema plus the solution fields {f, grad_f, hessian_frob, f_nu}."""
    data = domain_to_dict(solution.domain)
    data["fields"]["f"] = solution.f
    data["fields"]["grad_f"] = solution.cell_gradients
    data["fields"]["hessian_frob"] = solution.hessian_frobenius()
    data["fields"]["f_nu"] = solution.f_nu_sigma
    data["metadata"]["diagnostics"] = {
        "iterations": solution.iterations,
        "residual_norm": solution.residual_norm,
        "energy": solution.energy,
        "flux_constant": solution.problem.flux_constant,
        "robin_gamma": solution.problem.robin_gamma,
    }
    return data
