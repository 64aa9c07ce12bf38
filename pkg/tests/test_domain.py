"""Domain meshing: measures, tags, corners, grading, quality."""

import math
from collections import Counter

import numpy as np
import pytest

from conftest import THETA3
from hklab import make_cap, mesh_domain, mesh_surface
from hklab.domain import mesh_quality
from hklab.errors import HkLabError


def test_planar_cap_area(hs_surface1):
    ref = math.pi / 3 - math.sqrt(3) / 4
    dom = mesh_domain(hs_surface1, "half-space", 64)
    assert abs(dom.volume - ref) / ref < 5e-3


def test_planar_area_refinement_ratio(hs_cap1):
    ref = math.pi / 3 - math.sqrt(3) / 4
    errs = []
    for res in (32, 64):
        surf = mesh_surface(hs_cap1, res)
        dom = mesh_domain(surf, "half-space", res, grading=0.0)
        errs.append(abs(dom.volume - ref) / ref)
    assert errs[0] / errs[1] >= 3.5


def test_hemisphere_volume():
    cap = make_cap("half-space", math.pi / 2, 1.0, 2)
    dom = mesh_domain(mesh_surface(cap, 24), "half-space", 24)
    ref = 2 * math.pi / 3
    assert abs(dom.volume - ref) / ref < 1e-2


def test_solid_volume_refinement_ratio(hs_cap2):
    ref = 5 * math.pi / 24
    errs = []
    for res in (12, 24):
        dom = mesh_domain(mesh_surface(hs_cap2, res), "half-space", res, grading=0.0)
        errs.append(abs(dom.volume - ref) / ref)
    assert errs[0] / errs[1] >= 3.5


def test_lens_volume_and_height(hb_cap2):
    from hklab.identities import domain_volume_integrals

    dom = mesh_domain(mesh_surface(hb_cap2, 24), "half-ball", 24)
    q = hb_cap2.quantities
    vol, volz = domain_volume_integrals(dom)
    assert abs(vol - q["volume"]) / q["volume"] < 1e-2
    assert abs(volz - q["int_volume_height"]) / q["int_volume_height"] < 1e-2


def test_boundary_tag_partition(hs_domain1):
    # degree-one faces of the cell complex must be exactly Sigma union T
    faces = Counter()
    for cell in hs_domain1.cells:
        m = len(cell)
        for k in range(m):
            faces[tuple(sorted(np.delete(cell, k)))] += 1
    boundary = {f for f, c in faces.items() if c == 1}
    assert not {f for f, c in faces.items() if c > 2}
    tagged = {tuple(sorted(f)) for f in hs_domain1.sigma_facets} | {
        tuple(sorted(f)) for f in hs_domain1.t_facets
    }
    assert tagged == boundary
    overlap = {tuple(sorted(f)) for f in hs_domain1.sigma_facets} & {
        tuple(sorted(f)) for f in hs_domain1.t_facets
    }
    assert not overlap


def test_gamma_is_shared_patch_boundary(hs_domain1):
    sigma_v = set(np.unique(hs_domain1.sigma_facets))
    t_v = set(np.unique(hs_domain1.t_facets))
    assert set(hs_domain1.gamma_vertices) == sigma_v & t_v


def test_gamma_shared_boundary_3d(hs_cap2):
    dom = mesh_domain(mesh_surface(hs_cap2, 16), "half-space", 16)
    sigma_v = set(np.unique(dom.sigma_facets))
    t_v = set(np.unique(dom.t_facets))
    assert set(dom.gamma_vertices) == sigma_v & t_v
    # the corner ring sits on the support circle of the cap
    ring = dom.vertices[dom.gamma_vertices]
    rho = np.linalg.norm(ring[:, :2], axis=1)
    assert np.max(np.abs(rho - math.sin(THETA3))) < 1e-12
    assert np.max(np.abs(ring[:, 2])) < 1e-12


def test_d_gamma_exact_for_caps(hs_domain1):
    corners = hs_domain1.vertices[hs_domain1.gamma_vertices]
    d = np.min(
        np.linalg.norm(hs_domain1.vertices[:, None, :] - corners[None, :, :], axis=2), axis=1
    )
    assert np.max(np.abs(d - hs_domain1.d_gamma)) < 1e-12


def test_grading_refines_toward_corner(hs_surface1):
    graded = mesh_domain(hs_surface1, "half-space", 64, grading=0.5)
    uniform = mesh_domain(hs_surface1, "half-space", 64, grading=0.0)
    # smallest positive corner distance is far smaller on the graded mesh
    g_min = np.min(graded.d_gamma[graded.d_gamma > 0])
    u_min = np.min(uniform.d_gamma[uniform.d_gamma > 0])
    assert g_min < 0.2 * u_min


def test_positive_volumes_and_quality(hs_domain1, hb_cap2):
    assert np.all(hs_domain1.cell_volumes > 0)
    q = mesh_quality(hs_domain1.vertices, hs_domain1.cells)
    assert np.min(q) > 1e-4
    dom3 = mesh_domain(mesh_surface(hb_cap2, 16), "half-ball", 16)
    assert np.all(dom3.cell_volumes > 0)


def test_closed_domains():
    disk = make_cap("closed", None, 1.0, 1)
    dom2 = mesh_domain(mesh_surface(disk, 64), "closed", 64)
    assert abs(dom2.volume - math.pi) / math.pi < 5e-3
    assert len(dom2.t_facets) == 0 and len(dom2.gamma_vertices) == 0
    ball = make_cap("closed", None, 1.0, 2)
    dom3 = mesh_domain(mesh_surface(ball, 20), "closed", 20)
    ref = 4 * math.pi / 3
    assert abs(dom3.volume - ref) / ref < 1e-2


def test_boundary_off_support_rejected(hs_surface1):
    lifted = __import__("dataclasses").replace(
        hs_surface1, vertices=hs_surface1.vertices + np.array([0.0, 0.1])
    )
    with pytest.raises(HkLabError):
        mesh_domain(lifted, "half-space", 32)


def test_sigma_h_matches_cap(hs_domain1, hs_cap1):
    assert np.max(np.abs(hs_domain1.sigma_H - hs_cap1.mean_curvature)) < 1e-12
