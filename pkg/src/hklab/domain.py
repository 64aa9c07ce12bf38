"""Simplicial meshes of the enclosed region with tagged boundary patches.

Planar domains (n = 1) come from a deterministic two-rail strip mesher: the
surface polyline and the support path are joined by straight rungs at graded
parameters, and consecutive rungs are zippered into triangles.  This grades
the mesh into both corners with local size ~ d_Gamma^exponent while the Sigma
and T boundary facets stay on their rails, so tags are never ambiguous.

Solid domains (n = 2) are axisymmetric (cap, lens or ball) and are built as
solids of revolution: the (rho, z) cross-section between the generator curve
and the axis+support path is strip-meshed, then revolved with a fixed
azimuthal count; prisms are split into tetrahedra with the min-vertex
face-diagonal rule, so the mesh is conforming and deterministic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from hklab.caps import AnalyticCap
from hklab.containers import Container, ContactAngle
from hklab.errors import HkLabError, MeshQualityError
from hklab.meshutil import graded_nodes, polyline_interp, zipper_rows
from hklab.surface import SurfaceMesh

logger = logging.getLogger("hklab.domain")


@dataclass
class DomainMesh:
    dim: int  # ambient dimension d = n + 1
    container: Container
    theta: ContactAngle | None
    vertices: np.ndarray  # (nv, d)
    cells: np.ndarray  # (nc, d + 1), positively oriented
    sigma_facets: np.ndarray  # (ns, d) outward-oriented boundary facets on Sigma
    t_facets: np.ndarray  # (nt, d) outward-oriented boundary facets on T
    gamma_vertices: np.ndarray  # corner vertex indices
    d_gamma: np.ndarray  # per-vertex distance to the corner set
    sigma_H: np.ndarray  # mean curvature of the source surface per Sigma facet
    cell_volumes: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        if self.cell_volumes is None:
            self.cell_volumes = simplex_volumes(self.vertices, self.cells)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def volume(self) -> float:
        return float(self.cell_volumes.sum())

    def facet_measures(self, facets: np.ndarray) -> np.ndarray:
        return facet_areas(self.vertices, facets)

    def facet_centroids(self, facets: np.ndarray) -> np.ndarray:
        return self.vertices[facets].mean(axis=1)

    def facet_normals(self, facets: np.ndarray) -> np.ndarray:
        return outward_facet_normals(self.vertices, facets)


# ---------------------------------------------------------------------------
# simplex helpers
# ---------------------------------------------------------------------------


def simplex_volumes(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    p = vertices[cells]
    d = vertices.shape[1]
    edges = p[:, 1:] - p[:, :1]
    dets = np.linalg.det(edges)
    return dets / math.factorial(d)


def facet_areas(vertices: np.ndarray, facets: np.ndarray) -> np.ndarray:
    if len(facets) == 0:
        return np.zeros(0)
    p = vertices[facets]
    if facets.shape[1] == 2:
        return np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def outward_facet_normals(vertices: np.ndarray, facets: np.ndarray) -> np.ndarray:
    """Unit normals implied by the stored facet orientation."""
    if len(facets) == 0:
        return np.zeros((0, vertices.shape[1]))
    p = vertices[facets]
    if facets.shape[1] == 2:
        t = p[:, 1] - p[:, 0]
        t /= np.linalg.norm(t, axis=1, keepdims=True)
        return np.column_stack([t[:, 1], -t[:, 0]])
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return n / np.linalg.norm(n, axis=1, keepdims=True)


def _orient_facets_outward(vertices: np.ndarray, facets: np.ndarray,
                           inner_points: np.ndarray) -> np.ndarray:
    """Flip facet vertex order until the implied normal points away from inner_points."""
    if len(facets) == 0:
        return facets
    normals = outward_facet_normals(vertices, facets)
    centroids = vertices[facets].mean(axis=1)
    flip = np.einsum("ij,ij->i", normals, centroids - inner_points) < 0
    out = facets.copy()
    out[flip] = out[flip, ::-1]
    return out


def mesh_quality(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Shape measure in (0, 1]: normalized volume / longest-edge^d."""
    p = vertices[cells]
    d = vertices.shape[1]
    vols = np.abs(simplex_volumes(vertices, cells))
    m = cells.shape[1]
    hmax = np.zeros(len(cells))
    for a in range(m):
        for b in range(a + 1, m):
            hmax = np.maximum(hmax, np.linalg.norm(p[:, a] - p[:, b], axis=1))
    ref = {2: math.sqrt(3.0) / 4.0, 3: math.sqrt(2.0) / 12.0}[d]
    return vols / (ref * hmax**d)


# ---------------------------------------------------------------------------
# support rails / patches
# ---------------------------------------------------------------------------


def _support_rail(container: Container, p_start: np.ndarray, p_end: np.ndarray,
                  count: int) -> np.ndarray:
    """Polyline along the support from p_start to p_end (through the wetted patch)."""
    if container is Container.HALF_SPACE:
        frac = np.linspace(0.0, 1.0, count + 1)[:, None]
        return (1.0 - frac) * p_start + frac * p_end
    # half-ball: arc of the unit circle through the top
    a0 = math.atan2(p_start[0], p_start[1])
    a1 = math.atan2(p_end[0], p_end[1])
    ang = np.linspace(a0, a1, count + 1)
    return np.column_stack([np.sin(ang), np.cos(ang)])


def _two_rail_mesh(sigma_rail: np.ndarray, t_rail: np.ndarray, sigma_h: np.ndarray,
                   resolution: int, grading: float):
    """Strip mesh between the Sigma polyline and the T polyline.

    Both rails run from corner 0 to corner 1; rail interiors are resampled at
    shared graded parameters, rungs are subdivided by target size, and strips
    between consecutive rungs are zipper-triangulated.
    """
    fracs = graded_nodes(1.0, 1.0 / resolution, grading, sides="both")
    target = 1.0 / resolution
    sigma_pts = polyline_interp(sigma_rail, fracs)
    t_pts = polyline_interp(t_rail, fracs)

    verts: list[np.ndarray] = []
    rows: list[np.ndarray] = []
    row_fracs: list[np.ndarray] = []

    def add_vertex(p) -> int:
        verts.append(np.asarray(p, dtype=float))
        return len(verts) - 1

    scale = max(np.linalg.norm(sigma_rail[0] - sigma_rail[-1]), 1.0)
    for k, u in enumerate(fracs):
        a, b = t_pts[k], sigma_pts[k]
        length = float(np.linalg.norm(b - a))
        if k == 0 or k == len(fracs) - 1 or length < 1e-14:
            idx = np.array([add_vertex(0.5 * (a + b))])
            rows.append(idx)
            row_fracs.append(np.array([0.5]))
            continue
        m = max(1, int(math.ceil(length / (target * scale))))
        s = np.linspace(0.0, 1.0, m + 1)
        pts = (1.0 - s)[:, None] * a + s[:, None] * b
        idx = np.array([add_vertex(p) for p in pts])
        rows.append(idx)
        row_fracs.append(s)

    tris: list[tuple[int, int, int]] = []
    for k in range(len(rows) - 1):
        tris.extend(zipper_rows(rows[k], row_fracs[k], rows[k + 1], row_fracs[k + 1]))

    vertices = np.asarray(verts)
    cells = np.asarray(tris, dtype=np.int64)
    vols = simplex_volumes(vertices, cells)
    flip = vols < 0
    cells[flip] = cells[flip][:, [0, 2, 1]]

    # boundary facets along the rails; interior rows have T first, Sigma last
    t_edges, sigma_edges, sigma_mid_fracs = [], [], []
    for k in range(len(rows) - 1):
        t_edges.append((rows[k][0], rows[k + 1][0]))
        sigma_edges.append((rows[k][-1], rows[k + 1][-1]))
        sigma_mid_fracs.append(0.5 * (fracs[k] + fracs[k + 1]))
    corners = np.array([rows[0][0], rows[-1][0]], dtype=np.int64)
    sigma_facets = np.asarray(sigma_edges, dtype=np.int64)
    t_facets = np.asarray(t_edges, dtype=np.int64)
    sigma_H = np.interp(np.asarray(sigma_mid_fracs), np.linspace(0, 1, len(sigma_h)), sigma_h)
    return vertices, cells, sigma_facets, t_facets, corners, sigma_H


def _mesh_domain_2d(surface: SurfaceMesh, container: Container, resolution: int,
                    grading: float) -> DomainMesh:
    order = _chain_order(surface.cells)
    pts = surface.vertices[order]
    h_along = surface.mean_curvature[order]
    # rails run corner0 -> corner1; the T rail follows the support
    sigma_rail = pts
    if container is Container.HALF_SPACE:
        t_rail = _support_rail(container, pts[0], pts[-1], max(resolution, 8))
    else:
        t_rail = _support_rail(container, pts[0], pts[-1], max(resolution, 8))
    vertices, cells, sig_f, t_f, corners, sigma_H = _two_rail_mesh(
        sigma_rail, t_rail, h_along, resolution, grading
    )
    inner = vertices.mean(axis=0)
    sig_f = _orient_facets_outward(vertices, sig_f, inner)
    t_f = _orient_facets_outward(vertices, t_f, inner)
    d_gamma = np.min(
        np.linalg.norm(vertices[:, None, :] - vertices[corners][None, :, :], axis=2), axis=1
    )
    dom = DomainMesh(
        dim=2,
        container=container,
        theta=surface.theta,
        vertices=vertices,
        cells=cells,
        sigma_facets=sig_f,
        t_facets=t_f,
        gamma_vertices=corners,
        d_gamma=d_gamma,
        sigma_H=sigma_H,
    )
    _validate(dom)
    return dom


def _chain_order(cells: np.ndarray) -> np.ndarray:
    succ = {int(a): int(b) for a, b in cells}
    starts = set(succ) - {v for v in succ.values()}
    if len(starts) != 1:
        raise HkLabError("surface polyline is not an open chain")
    order = [starts.pop()]
    while order[-1] in succ:
        order.append(succ[order[-1]])
    return np.asarray(order, dtype=np.int64)


# ---------------------------------------------------------------------------
# 3-d axisymmetric domains: revolved cross-section
# ---------------------------------------------------------------------------

# prism vertex permutations bringing position p to slot 0 while preserving the
# bottom/top pairing (positions 3..5 sit above 0..2)
_PRISM_PERMS = np.array(
    [
        [0, 1, 2, 3, 4, 5],
        [1, 2, 0, 4, 5, 3],
        [2, 0, 1, 5, 3, 4],
        [3, 4, 5, 0, 1, 2],
        [4, 5, 3, 1, 2, 0],
        [5, 3, 4, 2, 0, 1],
    ],
    dtype=np.int64,
)


def _split_prisms(prisms: np.ndarray) -> np.ndarray:
    """Split prisms (n, 6) into tets with the min-vertex face-diagonal rule.

    Every quad face receives the diagonal through its smallest global vertex
    id, which makes splits of face-sharing elements agree.
    """
    if len(prisms) == 0:
        return np.empty((0, 4), dtype=np.int64)
    gpos = np.argmin(prisms, axis=1)
    w = np.take_along_axis(prisms, _PRISM_PERMS[gpos], axis=1)
    case_a = np.minimum(w[:, 1], w[:, 5]) < np.minimum(w[:, 2], w[:, 4])
    tets = np.empty((len(prisms), 3, 4), dtype=np.int64)
    a = w[case_a]
    tets[case_a, 0] = a[:, [0, 1, 2, 5]]
    tets[case_a, 1] = a[:, [0, 1, 5, 4]]
    tets[case_a, 2] = a[:, [0, 4, 5, 3]]
    b = w[~case_a]
    tets[~case_a, 0] = b[:, [0, 1, 2, 4]]
    tets[~case_a, 1] = b[:, [0, 4, 2, 5]]
    tets[~case_a, 2] = b[:, [0, 4, 5, 3]]
    return tets.reshape(-1, 4)


def _split_quads(quads: np.ndarray) -> np.ndarray:
    """Split quads (n, 4) given as (u0, v0, v1, u1) by the min-vertex diagonal."""
    if len(quads) == 0:
        return np.empty((0, 3), dtype=np.int64)
    diag_a = np.minimum(quads[:, 0], quads[:, 2]) < np.minimum(quads[:, 1], quads[:, 3])
    tris = np.empty((len(quads), 2, 3), dtype=np.int64)
    qa = quads[diag_a]
    tris[diag_a, 0] = qa[:, [0, 1, 2]]
    tris[diag_a, 1] = qa[:, [0, 2, 3]]
    qb = quads[~diag_a]
    tris[~diag_a, 0] = qb[:, [0, 1, 3]]
    tris[~diag_a, 1] = qb[:, [1, 2, 3]]
    return tris.reshape(-1, 3)


def _generator_polyline(surface: SurfaceMesh, resolution: int):
    """(rho, z) generator samples (pole first) and mean curvature along them."""
    source = surface.source
    if isinstance(source, AnalyticCap):
        from hklab.surface import _cap_generator_point, _ladder_angles

        angles = _ladder_angles(source, resolution, 0.0)
        samples = _cap_generator_point(source, angles)
        h = np.full(len(samples), source.mean_curvature)
        return samples, h
    from hklab.profiles import ProfileCurve, profile_mean_curvature, resample_profile

    if isinstance(source, ProfileCurve):
        prof = resample_profile(source, resolution)
        return prof.samples, profile_mean_curvature(prof)
    raise HkLabError("3-d domain meshing needs an analytic cap or profile source")


def _other_rail(container: Container, apex: np.ndarray, corner: np.ndarray,
                count: int) -> np.ndarray:
    """Axis + support path from the apex to the corner of the cross-section."""
    axis_pts = np.column_stack([
        np.zeros(count + 1),
        np.linspace(apex[1], 0.0 if container is Container.HALF_SPACE else 1.0, count + 1),
    ])
    if container is Container.CLOSED:
        return np.column_stack([np.zeros(count + 1),
                                np.linspace(apex[1], corner[1], count + 1)])
    if container is Container.HALF_SPACE:
        support = np.column_stack([
            np.linspace(0.0, corner[0], count + 1), np.zeros(count + 1)
        ])
    else:
        t_g = math.atan2(corner[0], corner[1])
        s = np.linspace(0.0, t_g, count + 1)
        support = np.column_stack([np.sin(s), np.cos(s)])
    return np.vstack([axis_pts, support[1:]])


def _mesh_domain_3d(surface: SurfaceMesh, container: Container, resolution: int,
                    grading: float) -> DomainMesh:
    gen, h_gen = _generator_polyline(surface, resolution)
    apex, corner = gen[0], gen[-1]
    rail_other = _other_rail(container, apex, corner, max(resolution, 8))

    sides = "none" if container is Container.CLOSED else "end"
    fracs = graded_nodes(1.0, 1.0 / resolution, grading, sides=sides)
    gen_pts = polyline_interp(gen, fracs)
    oth_pts = polyline_interp(rail_other, fracs)
    gen_fracs_len = np.linspace(0.0, 1.0, len(gen))

    verts2: list[np.ndarray] = []
    rows: list[np.ndarray] = []
    row_fracs: list[np.ndarray] = []
    scale = max(float(np.linalg.norm(apex - corner)), 1e-12)
    target = 1.0 / resolution

    def add_vertex(p) -> int:
        verts2.append(np.asarray(p, dtype=float))
        return len(verts2) - 1

    for k, u in enumerate(fracs):
        a, b = oth_pts[k], gen_pts[k]
        length = float(np.linalg.norm(b - a))
        if k == 0 or k == len(fracs) - 1 or length < 1e-14:
            rows.append(np.array([add_vertex(0.5 * (a + b))]))
            row_fracs.append(np.array([0.5]))
            continue
        m = max(1, int(math.ceil(length / (target * scale))))
        s = np.linspace(0.0, 1.0, m + 1)
        pts = (1.0 - s)[:, None] * a + s[:, None] * b
        idx = np.array([add_vertex(p) for p in pts])
        rows.append(idx)
        row_fracs.append(s)

    tris2: list[tuple[int, int, int]] = []
    for k in range(len(rows) - 1):
        tris2.extend(zipper_rows(rows[k], row_fracs[k], rows[k + 1], row_fracs[k + 1]))
    vertices2 = np.asarray(verts2)
    cross_cells = np.asarray(tris2, dtype=np.int64)
    areas2 = simplex_volumes(vertices2, cross_cells)
    flipc = areas2 < 0
    cross_cells[flipc] = cross_cells[flipc][:, [0, 2, 1]]
    if np.any(vertices2[:, 0] < -1e-12):
        raise MeshQualityError("cross-section left the rho >= 0 half plane")
    vertices2[:, 0] = np.maximum(vertices2[:, 0], 0.0)

    # boundary chains of the cross-section
    sigma_edges, sigma_h_mid = [], []
    other_edges = []
    for k in range(len(rows) - 1):
        sigma_edges.append((rows[k][-1], rows[k + 1][-1]))
        sigma_h_mid.append(
            float(np.interp(0.5 * (fracs[k] + fracs[k + 1]), gen_fracs_len, h_gen))
        )
        other_edges.append((rows[k][0], rows[k + 1][0]))
    t_edges, t_h = [], []
    for (i0, i1) in other_edges:
        mid_rho = 0.5 * (vertices2[i0, 0] + vertices2[i1, 0])
        if mid_rho > 1e-10 * scale:
            t_edges.append((i0, i1))
    if container is Container.CLOSED:
        t_edges = []

    # revolve: one ring of k_azim copies per off-axis vertex
    rho_max = float(vertices2[:, 0].max())
    k_azim = max(8, int(math.ceil(2.0 * math.pi * rho_max / (target * scale))))
    psi = 2.0 * math.pi * np.arange(k_azim) / k_azim
    cos_psi, sin_psi = np.cos(psi), np.sin(psi)
    on_axis = vertices2[:, 0] <= 1e-12
    vid = np.empty((len(vertices2), k_azim), dtype=np.int64)
    coords: list[np.ndarray] = []
    count = 0
    for i, (rho, z) in enumerate(vertices2):
        if on_axis[i]:
            coords.append(np.array([[0.0, 0.0, z]]))
            vid[i, :] = count
            count += 1
        else:
            ring = np.column_stack([rho * cos_psi, rho * sin_psi, np.full(k_azim, z)])
            coords.append(ring)
            vid[i, :] = np.arange(count, count + k_azim)
            count += k_azim
    vertices = np.vstack(coords)

    jj = np.arange(k_azim)
    jn = (jj + 1) % k_azim
    n_ax = on_axis[cross_cells].sum(axis=1)
    tet_blocks: list[np.ndarray] = []
    # triangles fully off-axis become prism stacks
    for tri in cross_cells[n_ax == 0]:
        prisms = np.stack(
            [vid[tri[0], jj], vid[tri[1], jj], vid[tri[2], jj],
             vid[tri[0], jn], vid[tri[1], jn], vid[tri[2], jn]], axis=1
        )
        tet_blocks.append(_split_prisms(prisms))
    # one axis vertex: pyramid with a quad side
    for tri in cross_cells[n_ax == 1]:
        ax = tri[on_axis[tri]][0]
        off = tri[~on_axis[tri]]
        quads = np.stack(
            [vid[off[0], jj], vid[off[1], jj], vid[off[1], jn], vid[off[0], jn]], axis=1
        )
        tris3 = _split_quads(quads)
        apex_col = np.full((len(tris3), 1), vid[ax, 0], dtype=np.int64)
        tet_blocks.append(np.hstack([apex_col, tris3]))
    # two axis vertices: single tets
    for tri in cross_cells[n_ax == 2]:
        ax = tri[on_axis[tri]]
        off = tri[~on_axis[tri]][0]
        tets = np.stack(
            [np.full(k_azim, vid[ax[0], 0]), np.full(k_azim, vid[ax[1], 0]),
             vid[off, jj], vid[off, jn]], axis=1
        )
        tet_blocks.append(tets)
    cells = np.vstack(tet_blocks).astype(np.int64)
    vols = simplex_volumes(vertices, cells)
    flip = vols < 0
    cells[flip] = cells[flip][:, [0, 1, 3, 2]]

    def revolve_edges(edges):
        facets: list[np.ndarray] = []
        for (i0, i1) in edges:
            if on_axis[i0] or on_axis[i1]:
                ax, off = (i0, i1) if on_axis[i0] else (i1, i0)
                fan = np.stack(
                    [np.full(k_azim, vid[ax, 0]), vid[off, jj], vid[off, jn]], axis=1
                )
                facets.append(fan)
            else:
                quads = np.stack(
                    [vid[i0, jj], vid[i1, jj], vid[i1, jn], vid[i0, jn]], axis=1
                )
                facets.append(_split_quads(quads))
        if not facets:
            return np.empty((0, 3), dtype=np.int64)
        return np.vstack(facets).astype(np.int64)

    sigma_facets = revolve_edges(sigma_edges)
    t_facets = revolve_edges(t_edges)
    # per-facet H: repeat the generator values per revolved edge block
    sigma_H_list = []
    for (i0, i1), h_mid in zip(sigma_edges, sigma_h_mid):
        blocks = k_azim if (on_axis[i0] or on_axis[i1]) else 2 * k_azim
        sigma_H_list.append(np.full(blocks, h_mid))
    sigma_H = np.concatenate(sigma_H_list) if sigma_H_list else np.zeros(0)

    inner = vertices.mean(axis=0)
    sigma_facets = _orient_facets_outward(vertices, sigma_facets, inner)
    t_facets = _orient_facets_outward(vertices, t_facets, inner)

    if container.has_support:
        corner_row = rows[-1][0]
        gamma_vertices = vid[corner_row, :].astype(np.int64)
        rho_g, z_g = vertices2[corner_row]
        r_all = np.linalg.norm(vertices[:, :2], axis=1)
        d_gamma = np.sqrt((r_all - rho_g) ** 2 + (vertices[:, 2] - z_g) ** 2)
    else:
        gamma_vertices = np.empty(0, dtype=np.int64)
        d_gamma = np.full(len(vertices), np.inf)

    dom = DomainMesh(
        dim=3,
        container=container,
        theta=surface.theta,
        vertices=vertices,
        cells=cells,
        sigma_facets=sigma_facets,
        t_facets=t_facets,
        gamma_vertices=gamma_vertices,
        d_gamma=d_gamma,
        sigma_H=sigma_H,
    )
    _validate(dom)
    return dom


# ---------------------------------------------------------------------------
# entry point and checks
# ---------------------------------------------------------------------------


def mesh_domain(
    surface: SurfaceMesh,
    container: Container | str | None = None,
    resolution: int | None = None,
    grading: float = 0.5,
    quality_threshold: float = 1e-4,
) -> DomainMesh:
    """Mesh the region enclosed by the surface and its support patch."""
    from hklab.containers import parse_container, support_deviation

    container = surface.container if container is None else parse_container(container)
    if container is not surface.container:
        raise HkLabError("surface and requested container disagree")
    if resolution is None:
        resolution = max(8, int(round(1.0 / _typical_spacing(surface))))
    if container.has_support:
        loop_pts = surface.vertices[surface.boundary_vertices]
        dev = np.abs(support_deviation(container, loop_pts))
        if np.any(dev > 1e-8):
            raise HkLabError("surface boundary does not lie on the support")
    if surface.dim == 1:
        if container is Container.CLOSED:
            dom = _mesh_disk_2d(surface, resolution, grading)
        else:
            dom = _mesh_domain_2d(surface, container, resolution, grading)
    else:
        dom = _mesh_domain_3d(surface, container, resolution, grading)
    q = mesh_quality(dom.vertices, dom.cells)
    if float(np.min(q)) < quality_threshold:
        bad = int(np.sum(q < quality_threshold))
        logger.warning("domain mesh has %d cells below quality %.1e", bad, quality_threshold)
    return dom


def _mesh_disk_2d(surface: SurfaceMesh, resolution: int, grading: float) -> DomainMesh:
    """Triangulate the region inside a closed curve (fan of scaled loops)."""
    order = _polyline_loop(surface.cells)
    pts = surface.vertices[order]
    seed = pts.mean(axis=0)
    layers = max(2, resolution // 2)
    verts = [pts]
    rows = [np.arange(len(pts))]
    count = len(pts)
    for j in range(1, layers):
        t = 1.0 - j / layers
        keep = max(6, int(round(len(pts) * t)))
        stride_ix = np.linspace(0, len(pts), keep, endpoint=False).astype(int)
        ring = seed + t * (pts[stride_ix] - seed)
        verts.append(ring)
        rows.append(np.arange(count, count + len(ring)))
        count += len(ring)
    verts.append(seed[None, :])
    rows.append(np.array([count]))

    vertices = np.vstack(verts)
    tris: list[tuple[int, int, int]] = []
    from hklab.meshutil import zipper_rings

    for k in range(len(rows) - 1):
        ia, ib = rows[k], rows[k + 1]
        ang_a = np.arange(len(ia)) * 2.0 * math.pi / len(ia)
        if len(ib) == 1:
            tris.extend((int(ia[j]), int(ib[0]), int(ia[(j + 1) % len(ia)]))
                        for j in range(len(ia)))
        else:
            ang_b = np.arange(len(ib)) * 2.0 * math.pi / len(ib)
            tris.extend(zipper_rings(ia, ang_a, ib, ang_b))
    cells = np.asarray(tris, dtype=np.int64)
    vols = simplex_volumes(vertices, cells)
    cells[vols < 0] = cells[vols < 0][:, [0, 2, 1]]

    sigma_facets = np.column_stack([order, np.roll(order, -1)]).astype(np.int64)
    sigma_facets = _orient_facets_outward(vertices, sigma_facets, seed[None, :])
    h_mid = 0.5 * (surface.mean_curvature[order] + surface.mean_curvature[np.roll(order, -1)])
    dom = DomainMesh(
        dim=2,
        container=Container.CLOSED,
        theta=None,
        vertices=vertices,
        cells=cells,
        sigma_facets=sigma_facets,
        t_facets=np.empty((0, 2), dtype=np.int64),
        gamma_vertices=np.empty(0, dtype=np.int64),
        d_gamma=np.full(len(vertices), np.inf),
        sigma_H=h_mid,
    )
    _validate(dom)
    return dom


def _polyline_loop(cells: np.ndarray) -> np.ndarray:
    succ = {int(a): int(b) for a, b in cells}
    start = int(cells[0, 0])
    order = [start]
    cur = succ[start]
    while cur != start:
        order.append(cur)
        cur = succ[cur]
    return np.asarray(order, dtype=np.int64)


def _validate(dom: DomainMesh) -> None:
    if np.any(dom.cell_volumes <= 0):
        nonpos = int(np.sum(dom.cell_volumes <= 0))
        if np.any(dom.cell_volumes < -1e-14):
            raise MeshQualityError(f"{nonpos} negatively oriented cells after fixing")
        logger.warning("%d zero-volume cells retained (degenerate Delaunay faces)", nonpos)
    total_boundary = len(dom.sigma_facets) + len(dom.t_facets)
    if total_boundary == 0:
        raise HkLabError("domain mesh has no boundary facets")
