"""OFF / JSON serialization: roundtrips, schemas, canonical bytes."""

import json
import math

import jsonschema
import numpy as np

from conftest import THETA3
from hklab import make_cap, mesh_domain, mesh_surface
from hklab.meshio import (
    domain_to_dict,
    dumps_json,
    read_domain_json,
    read_off,
    read_surface_json,
    solution_to_dict,
    write_domain_json,
    write_off,
    write_surface_json,
)

DOMAIN_SCHEMA = {
    "type": "object",
    "required": ["vertices", "cells", "facet_tags", "fields"],
    "properties": {
        "vertices": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "cells": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
        "facet_tags": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["facet", "tag"],
                "properties": {
                    "facet": {"type": "array", "items": {"type": "integer"}},
                    "tag": {"enum": ["Sigma", "T"]},
                },
            },
        },
        "fields": {"type": "object"},
    },
}


def test_off_roundtrip_triangles(hs_cap2, tmp_path):
    mesh = mesh_surface(hs_cap2, 24)
    path = tmp_path / "cap.off"
    write_off(mesh, path)
    back = read_off(path, "half-space", THETA3)
    assert np.max(np.abs(back.vertices - mesh.vertices)) == 0.0
    assert np.array_equal(back.cells, mesh.cells)
    interior = ~back.low_trust
    assert np.max(np.abs(back.mean_curvature[interior] - 2.0)) < 0.06


def test_off_roundtrip_polyline(hs_cap1, tmp_path):
    mesh = mesh_surface(hs_cap1, 32)
    path = tmp_path / "curve.off"
    write_off(mesh, path)
    back = read_off(path, "half-space", THETA3)
    assert back.dim == 1
    assert np.max(np.abs(back.vertices - mesh.vertices)) == 0.0


def test_surface_json_roundtrip(hs_cap2, tmp_path):
    mesh = mesh_surface(hs_cap2, 16)
    path = tmp_path / "cap.json"
    write_surface_json(mesh, path)
    back = read_surface_json(path)
    assert np.max(np.abs(back.vertices - mesh.vertices)) == 0.0
    assert back.theta is not None and abs(back.theta.radians - THETA3) < 1e-15


def test_domain_json_roundtrip_and_schema(hs_domain1, tmp_path):
    path = tmp_path / "dom.json"
    write_domain_json(hs_domain1, path)
    data = json.loads(path.read_text())
    jsonschema.validate(data, DOMAIN_SCHEMA)
    back = read_domain_json(path)
    assert np.max(np.abs(back.vertices - hs_domain1.vertices)) == 0.0
    assert np.array_equal(back.cells, hs_domain1.cells)
    assert np.array_equal(np.sort(back.gamma_vertices), np.sort(hs_domain1.gamma_vertices))
    assert abs(back.volume - hs_domain1.volume) < 1e-15


def test_solution_serialization(hs_solution1):
    data = solution_to_dict(hs_solution1)
    for name in ("f", "grad_f", "hessian_frob", "f_nu"):
        assert name in data["fields"]
    assert len(data["fields"]["f"]) == hs_solution1.domain.num_vertices
    assert len(data["fields"]["f_nu"]) == len(hs_solution1.domain.sigma_facets)
    jsonschema.validate(json.loads(dumps_json(data)), DOMAIN_SCHEMA)


def test_canonical_bytes(hs_domain1):
    a = dumps_json(domain_to_dict(hs_domain1))
    b = dumps_json(domain_to_dict(hs_domain1))
    assert a == b


def test_nan_serializes_as_null():
    assert json.loads(dumps_json({"x": math.nan}))["x"] is None
