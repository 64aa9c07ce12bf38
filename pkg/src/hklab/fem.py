"""P1 simplicial finite element kernels.

Assembly is vectorized with a fixed accumulation order, so stiffness and
boundary-mass matrices come out symmetric to the bit and repeated runs are
reproducible.  Derivative recovery is a least-squares linear patch fit of the
cell gradients at each vertex (exact for quadratic fields, including one-sided
boundary patches); cell Hessians are gradients of the recovered nodal
gradient, symmetrized.
"""

from __future__ import annotations

import logging
import math

import numpy as np
import scipy.sparse as sp

from hklab.errors import SolverError

logger = logging.getLogger("hklab.fem")

_DEGENERATE_REL = 1e-12


def p1_gradients(vertices: np.ndarray, cells: np.ndarray):
    """Per-cell P1 basis gradients (nc, d+1, d) and signed volumes (nc,)."""
    d = vertices.shape[1]
    edges = vertices[cells[:, 1:]] - vertices[cells[:, :1]]  # (nc, d, d), rows are edges
    vols = np.linalg.det(edges) / math.factorial(d)
    scale = np.abs(vols).max() if len(vols) else 1.0
    good = np.abs(vols) > _DEGENERATE_REL * scale
    inv = np.zeros_like(edges)
    inv[good] = np.linalg.inv(edges[good])
    grads = np.zeros((len(cells), d + 1, d))
    for k in range(1, d + 1):
        grads[:, k, :] = inv[:, :, k - 1]
    grads[:, 0, :] = -grads[:, 1:, :].sum(axis=1)
    return grads, vols, good


def assemble_stiffness(grads, vols, cells, nv) -> sp.csr_matrix:
    nc, m, _ = grads.shape
    local = np.einsum("cik,cjk->cij", grads, grads) * vols[:, None, None]
    ii = np.repeat(cells, m, axis=1).reshape(nc, m, m)
    jj = np.tile(cells[:, None, :], (1, m, 1))
    mat = sp.coo_matrix((local.ravel(), (ii.ravel(), jj.ravel())), shape=(nv, nv))
    return mat.tocsr()


def assemble_boundary_mass(facets, areas, nv) -> sp.csr_matrix:
    """Consistent mass matrix of the trace space on the given facets."""
    if len(facets) == 0:
        return sp.csr_matrix((nv, nv))
    m = facets.shape[1]
    base = (np.ones((m, m)) + np.eye(m)) / (m * (m + 1))
    local = areas[:, None, None] * base[None, :, :]
    ii = np.repeat(facets, m, axis=1).reshape(len(facets), m, m)
    jj = np.tile(facets[:, None, :], (1, m, 1))
    mat = sp.coo_matrix((local.ravel(), (ii.ravel(), jj.ravel())), shape=(nv, nv))
    return mat.tocsr()


def load_volume(cells, vols, rhs_vertex, nv) -> np.ndarray:
    """Consistent load vector of a P1 right-hand side."""
    m = cells.shape[1]
    h = rhs_vertex[cells]  # (nc, m)
    total = h.sum(axis=1)
    b = np.zeros(nv)
    for k in range(m):
        np.add.at(b, cells[:, k], vols * (total + h[:, k]) / (m * (m + 1)))
    return b


def load_facets(facets, areas, values, nv) -> np.ndarray:
    """Load vector of per-facet constant flux data."""
    b = np.zeros(nv)
    if len(facets) == 0:
        return b
    m = facets.shape[1]
    for k in range(m):
        np.add.at(b, facets[:, k], areas * values / m)
    return b


def pcg(a: sp.csr_matrix, b: np.ndarray, tol: float, max_iter: int):
    """Jacobi-preconditioned conjugate gradients; deterministic, SPD-checked."""
    diag = a.diagonal()
    if np.any(diag <= 0):
        raise SolverError("system diagonal is not positive; matrix cannot be SPD")
    minv = 1.0 / diag
    x = np.zeros_like(b)
    r = b.copy()
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return x, 0, 0.0
    z = minv * r
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, max_iter + 1):
        ap = a @ p
        pap = float(p @ ap)
        if pap <= 0.0:
            raise SolverError("conjugate gradients met a nonpositive curvature direction")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        res = float(np.linalg.norm(r))
        if res <= tol * b_norm:
            return x, it, res / b_norm
        z = minv * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"conjugate gradients did not reach tol {tol:g} in {max_iter} iterations "
        f"(relative residual {res / b_norm:.3e})"
    )


def cell_gradients_of(f: np.ndarray, grads: np.ndarray, cells: np.ndarray) -> np.ndarray:
    return np.einsum("cm,cmd->cd", f[cells], grads)


def _vertex_adjacency(cells: np.ndarray, nv: int) -> list:
    adj: list[set] = [set() for _ in range(nv)]
    m = cells.shape[1]
    for cell in cells:
        for a in range(m):
            for b in range(a + 1, m):
                adj[cell[a]].add(int(cell[b]))
                adj[cell[b]].add(int(cell[a]))
    return adj


def _quadratic_design(offsets: np.ndarray) -> np.ndarray:
    """Monomial rows [1, x_i, x_i x_j / sym] of a local quadratic model."""
    m, d = offsets.shape
    cols = [np.ones(m)]
    cols.extend(offsets[:, i] for i in range(d))
    for i in range(d):
        for j in range(i, d):
            cols.append(offsets[:, i] * offsets[:, j])
    return np.column_stack(cols)


def recover_nodal_gradients(
    vertices: np.ndarray,
    cells: np.ndarray,
    f: np.ndarray,
    vols: np.ndarray,
    good: np.ndarray,
) -> np.ndarray:
    """Nodal gradients from a quadratic least-squares fit of the vertex values.

    Each vertex fits a full quadratic over its 2-hop patch (expanded when the
    patch is too small or too flat).  Offsets are whitened by the patch
    covariance before fitting, so graded anisotropic patches stay well
    conditioned; the recovered gradient is exact for quadratic fields on any
    mesh, one-sided boundary patches included.
    """
    nv, d = vertices.shape
    adj = _vertex_adjacency(cells[good] if not np.all(good) else cells, nv)
    n_param = 1 + d + d * (d + 1) // 2
    nodal = np.zeros((nv, d))
    for v in range(nv):
        patch = set(adj[v])
        patch.add(v)
        last = None
        for _hop in range(2, 5):
            grown = set(patch)
            for u in patch:
                grown.update(adj[u])
            patch = grown
            if len(patch) <= n_param and _hop < 4:
                continue
            ids = np.fromiter(sorted(patch), dtype=np.int64)
            offsets = vertices[ids] - vertices[v]
            cov = offsets.T @ offsets / len(ids)
            evals, evecs = np.linalg.eigh(cov)
            if evals[-1] <= 0:
                continue
            evals = np.maximum(evals, 1e-12 * evals[-1])
            whitener = evecs @ np.diag(1.0 / np.sqrt(evals)) @ evecs.T
            xi = offsets @ whitener
            design = _quadratic_design(xi)
            coef, _, rank, _ = np.linalg.lstsq(design, f[ids], rcond=1e-8)
            last = (whitener, xi, ids)
            if rank == n_param:
                nodal[v] = whitener @ coef[1 : 1 + d]
                break
        else:
            # patch never supported a full quadratic: whitened linear fit
            if last is None:
                continue
            whitener, xi, ids = last
            design = np.column_stack([np.ones(len(ids)), xi])
            coef, *_ = np.linalg.lstsq(design, f[ids], rcond=None)
            nodal[v] = whitener @ coef[1 : 1 + d]
    return nodal


def cell_hessians_of(
    nodal_grads: np.ndarray, grads: np.ndarray, cells: np.ndarray, good: np.ndarray
) -> np.ndarray:
    """Symmetrized per-cell gradient of the recovered nodal gradient field."""
    hess = np.einsum("cma,cmb->cab", nodal_grads[cells], grads)
    hess = 0.5 * (hess + hess.transpose(0, 2, 1))
    hess[~good] = 0.0
    return hess
