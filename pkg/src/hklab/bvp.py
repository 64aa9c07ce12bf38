"""Mixed Dirichlet-Neumann/Robin boundary value problems on domain meshes.

The discrete problem is the P1 Galerkin form of

    laplace f = h in Omega,   f = 0 on Sigma,   d_N f - gamma f = c on int(T),

solved by Jacobi-preconditioned conjugate gradients after eliminating the
Sigma closure (corner vertices are Dirichlet).  The capillary constant c is
always computed from mesh-measured patch integrals so that the discrete
divergence identities close at finite resolution; closed forms serve as
cross-checks only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hklab.containers import Container, ContactAngle, as_angle
from hklab.domain import DomainMesh
from hklab.errors import (
    DegenerateConfigurationError,
    HkLabError,
    SolverError,
    WindowError,
)
from hklab.fem import (
    assemble_boundary_mass,
    assemble_stiffness,
    cell_gradients_of,
    cell_hessians_of,
    load_facets,
    load_volume,
    p1_gradients,
    pcg,
    recover_nodal_gradients,
)

DEFAULT_TOL = 1e-10


@dataclass
class MixedBvpProblem:
    domain: DomainMesh
    rhs: np.ndarray  # per-vertex source of laplace f = rhs
    flux_constant: float  # c in d_N f - gamma f = c on T
    robin_gamma: int = 0
    flux_values: np.ndarray | None = None  # per-T-facet data overriding the constant
    kind: str = "general"

    def __post_init__(self) -> None:
        if self.robin_gamma < 0 or int(self.robin_gamma) != self.robin_gamma:
            raise HkLabError("robin coefficient must be a nonnegative integer")
        self.rhs = np.asarray(self.rhs, dtype=float)
        if self.rhs.shape != (self.domain.num_vertices,):
            raise HkLabError("rhs must be a per-vertex array")
        if len(self.domain.sigma_facets) == 0:
            raise HkLabError("problem needs at least one Sigma facet (else singular)")


@dataclass
class BvpSolution:
    problem: MixedBvpProblem
    f: np.ndarray
    cell_gradients: np.ndarray
    nodal_gradients: np.ndarray
    cell_hessians: np.ndarray
    f_nu_sigma: np.ndarray  # normal derivative per Sigma facet
    iterations: int
    residual_norm: float
    energy: float

    @property
    def domain(self) -> DomainMesh:
        return self.problem.domain

    def hessian_frobenius(self) -> np.ndarray:
        return np.sqrt(np.einsum("cab,cab->c", self.cell_hessians, self.cell_hessians))

    def laplacian(self) -> np.ndarray:
        """Trace of the recovered Hessian (the consistent discrete laplacian)."""
        return np.einsum("caa->c", self.cell_hessians)


# ---------------------------------------------------------------------------
# mesh-measured capillary data
# ---------------------------------------------------------------------------


def gamma_loop_measure(domain: DomainMesh) -> float:
    """|Gamma| on the domain mesh: counting for d=2, ring length for d=3."""
    if domain.dim == 2:
        return float(len(domain.gamma_vertices))
    ring = domain.vertices[domain.gamma_vertices]
    return float(np.linalg.norm(np.roll(ring, -1, axis=0) - ring, axis=1).sum())


def gamma_mu_vertical_integral(domain: DomainMesh) -> float:
    """integral over Gamma of <mu, E_d> with mu estimated from the Sigma facets."""
    gamma = set(int(g) for g in domain.gamma_vertices)
    verts = domain.vertices
    total = 0.0
    if domain.dim == 2:
        for facet in domain.sigma_facets:
            a, b = int(facet[0]), int(facet[1])
            for corner, other in ((a, b), (b, a)):
                if corner in gamma and other not in gamma:
                    mu = verts[corner] - verts[other]
                    mu /= np.linalg.norm(mu)
                    total += float(mu[-1])
        return total
    for facet in domain.sigma_facets:
        ids = [int(v) for v in facet]
        on_gamma = [v in gamma for v in ids]
        if sum(on_gamma) != 2:
            continue
        edge = [v for v, g in zip(ids, on_gamma) if g]
        opp = [v for v, g in zip(ids, on_gamma) if not g][0]
        pa, pb, pc = verts[edge[0]], verts[edge[1]], verts[opp]
        e = pb - pa
        e /= np.linalg.norm(e)
        mid = 0.5 * (pa + pb)
        mu = mid - pc
        mu -= (mu @ e) * e
        mu /= np.linalg.norm(mu)
        total += float(mu[-1]) * float(np.linalg.norm(pb - pa))
    return total


def t_facet_integrals(domain: DomainMesh) -> tuple[float, float]:
    """(|T|, integral of x_d over T) by facet midpoint quadrature."""
    areas = domain.facet_measures(domain.t_facets)
    if len(areas) == 0:
        return 0.0, 0.0
    z = domain.vertices[domain.t_facets][:, :, -1].mean(axis=1)
    return float(areas.sum()), float((areas * z).sum())


def capillary_constant(
    container: Container | str,
    theta: float | ContactAngle,
    n: int,
    area_T: float | None = None,
    measure_gamma: float | None = None,
    int_T_height: float | None = None,
    int_gamma_mu_vertical: float | None = None,
) -> float:
    """The flux constant of the capillary mixed problem.

    Half-space: -n/(n+1) cot(theta) |T| / |Gamma|.
    Half-ball:  -n/(n+1) cos(theta) (int_T x_d) / (int_Gamma <mu, E_d>).
    """
    from hklab.containers import parse_container

    container = parse_container(container)
    angle = as_angle(theta)
    ratio = n / (n + 1.0)
    if container is Container.HALF_SPACE:
        if area_T is None or measure_gamma is None:
            raise HkLabError("half-space constant needs area_T and measure_gamma")
        if measure_gamma <= 0:
            raise DegenerateConfigurationError("|Gamma| vanished")
        return -ratio * angle.cot * area_T / measure_gamma
    if container is Container.HALF_BALL:
        if int_T_height is None or int_gamma_mu_vertical is None:
            raise HkLabError("half-ball constant needs the T and Gamma height integrals")
        if abs(int_gamma_mu_vertical) < 1e-300:
            raise DegenerateConfigurationError("Gamma integral of <mu, E> vanished")
        return -ratio * angle.cos * int_T_height / int_gamma_mu_vertical
    raise HkLabError("closed container has no capillary constant")


def capillary_constant_from_domain(
    domain: DomainMesh, theta: float | ContactAngle | None = None
) -> float:
    angle = as_angle(theta) if theta is not None else domain.theta
    n = domain.dim - 1
    if domain.container is Container.HALF_SPACE:
        area_t, _ = t_facet_integrals(domain)
        return capillary_constant(
            domain.container, angle, n, area_T=area_t, measure_gamma=gamma_loop_measure(domain)
        )
    if domain.container is Container.HALF_BALL:
        _, int_t_z = t_facet_integrals(domain)
        return capillary_constant(
            domain.container,
            angle,
            n,
            int_T_height=int_t_z,
            int_gamma_mu_vertical=gamma_mu_vertical_integral(domain),
        )
    raise HkLabError("closed container has no capillary constant")


def capillary_problem(
    domain: DomainMesh, theta: float | ContactAngle | None = None
) -> MixedBvpProblem:
    """The capillary configuration: unit source, mesh-measured flux constant."""
    angle = as_angle(theta) if theta is not None else domain.theta
    rhs = np.ones(domain.num_vertices)
    if domain.container is Container.CLOSED:
        return MixedBvpProblem(domain, rhs, 0.0, 0, kind="capillary")
    gamma = 1 if domain.container is Container.HALF_BALL else 0
    c = capillary_constant_from_domain(domain, angle)
    return MixedBvpProblem(domain, rhs, c, gamma, kind="capillary")


def make_problem(
    domain: DomainMesh,
    rhs: float | np.ndarray = 1.0,
    flux: float | np.ndarray = 0.0,
    gamma: int = 0,
) -> MixedBvpProblem:
    """General mixed problem with constant or per-vertex/facet data."""
    rhs_v = np.full(domain.num_vertices, float(rhs)) if np.isscalar(rhs) else np.asarray(rhs)
    if np.isscalar(flux):
        return MixedBvpProblem(domain, rhs_v, float(flux), gamma)
    return MixedBvpProblem(domain, rhs_v, 0.0, gamma, flux_values=np.asarray(flux))


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def dirichlet_mask(domain: DomainMesh) -> np.ndarray:
    """Vertices in the Sigma closure (corner vertices are Dirichlet)."""
    mask = np.zeros(domain.num_vertices, dtype=bool)
    if len(domain.sigma_facets):
        mask[np.unique(domain.sigma_facets)] = True
    return mask


def solve_mixed_bvp(
    problem: MixedBvpProblem,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
    method: str = "cg",
) -> BvpSolution:
    """P1 Galerkin solve with strong Dirichlet elimination and CG."""
    domain = problem.domain
    grads, vols, good = p1_gradients(domain.vertices, domain.cells)
    if not np.all(good):
        raise SolverError(f"{int(np.sum(~good))} degenerate cells; cannot assemble")
    nv = domain.num_vertices
    stiff = assemble_stiffness(grads, vols, domain.cells, nv)

    t_areas = domain.facet_measures(domain.t_facets)
    if problem.flux_values is not None:
        flux = problem.flux_values
    else:
        flux = np.full(len(domain.t_facets), problem.flux_constant)
    b = load_facets(domain.t_facets, t_areas, flux, nv) - load_volume(
        domain.cells, vols, problem.rhs, nv
    )
    a = stiff
    if problem.robin_gamma > 0:
        a = stiff - problem.robin_gamma * assemble_boundary_mass(domain.t_facets, t_areas, nv)

    fixed = dirichlet_mask(domain)
    free = ~fixed
    a_ff = a[free][:, free].tocsr()
    b_f = b[free]
    if max_iter is None:
        max_iter = 500 + 100 * int(math.sqrt(nv))

    f = np.zeros(nv)
    if method == "cg":
        x, iters, relres = pcg(a_ff, b_f, tol, max_iter)
    elif method == "direct":
        from scipy.sparse.linalg import spsolve

        x = spsolve(a_ff.tocsc(), b_f)
        iters = 0
        bn = float(np.linalg.norm(b_f))
        relres = float(np.linalg.norm(b_f - a_ff @ x)) / bn if bn > 0 else 0.0
    else:
        raise ValueError(f"unknown method {method!r}")
    f[free] = x
    energy = float(0.5 * x @ (a_ff @ x) - b_f @ x)
    return _package_solution(problem, f, grads, vols, good, iters, relres, energy)


def _package_solution(problem, f, grads, vols, good, iters, relres, energy) -> BvpSolution:
    domain = problem.domain
    cg = cell_gradients_of(f, grads, domain.cells)
    nodal = recover_nodal_gradients(domain.vertices, domain.cells, f, vols, good)
    hess = cell_hessians_of(nodal, grads, domain.cells, good)
    # normal derivative on Sigma from the recovered gradient (facet vertex mean)
    normals = domain.facet_normals(domain.sigma_facets)
    f_nu = np.einsum("fd,fd->f", nodal[domain.sigma_facets].mean(axis=1), normals)
    return BvpSolution(
        problem=problem,
        f=f,
        cell_gradients=cg,
        nodal_gradients=nodal,
        cell_hessians=hess,
        f_nu_sigma=f_nu,
        iterations=iters,
        residual_norm=relres,
        energy=energy,
    )


def solution_from_field(problem: MixedBvpProblem, values) -> BvpSolution:
    """Wrap analytic vertex data in the same recovery pipeline as a solve."""
    domain = problem.domain
    if callable(values):
        f = np.asarray(values(domain.vertices), dtype=float).reshape(-1)
    else:
        f = np.asarray(values, dtype=float)
    if f.shape != (domain.num_vertices,):
        raise HkLabError("field values must be per-vertex")
    grads, vols, good = p1_gradients(domain.vertices, domain.cells)
    return _package_solution(problem, f, grads, vols, good, 0, 0.0, math.nan)


# ---------------------------------------------------------------------------
# the exact cap solution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticField:
    """f = (|x - x0|^2 - R^2) / (2(n+1)): the equality-case solution."""

    center: np.ndarray
    radius: float
    dim: int
    container: Container

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        d2 = np.einsum("ij,ij->i", pts - self.center, pts - self.center)
        return (d2 - self.radius**2) / (2.0 * (self.dim + 1))

    def gradient(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(points) - self.center) / (self.dim + 1)

    def hessian(self) -> np.ndarray:
        return np.eye(self.dim + 1) / (self.dim + 1)

    @property
    def neumann_constant(self) -> float | None:
        """The flux constant this field realizes on T (d_N f with N = -E_d)."""
        if self.container is Container.HALF_SPACE:
            return float(self.center[-1]) / (self.dim + 1)
        if self.container is Container.HALF_BALL:
            h2 = float(self.center @ self.center)
            return (1.0 - h2 + self.radius**2) / (2.0 * (self.dim + 1))
        return None

    @property
    def sigma_normal_derivative(self) -> float:
        return self.radius / (self.dim + 1)


def exact_cap_solution(cap) -> QuadraticField:
    """Closed-form solution of the capillary problem on an analytic cap domain."""
    return QuadraticField(
        center=np.asarray(cap.center, dtype=float),
        radius=float(cap.radius),
        dim=cap.dim,
        container=cap.container,
    )


# ---------------------------------------------------------------------------
# corner exponents
# ---------------------------------------------------------------------------


@dataclass
class CornerFit:
    window: tuple[float, float]
    beta_hat: float
    lambda_from_hessian: float
    lambda_hat: float
    r2_hessian: float
    r2_growth: float
    wedge_reference: float
    low_trust: bool

    def to_dict(self) -> dict:
        return {
            "window": list(self.window),
            "beta_hat": self.beta_hat,
            "lambda_from_hessian": self.lambda_from_hessian,
            "lambda_hat": self.lambda_hat,
            "r2_hessian": self.r2_hessian,
            "r2_growth": self.r2_growth,
            "wedge_reference": self.wedge_reference,
            "low_trust": self.low_trust,
        }


def _hop_distance(domain: DomainMesh, seeds: np.ndarray, max_hops: int) -> np.ndarray:
    """Graph distance from the seed vertices, capped at max_hops + 1."""
    nv = domain.num_vertices
    hop = np.full(nv, max_hops + 1, dtype=np.int64)
    hop[seeds] = 0
    adj: dict[int, set[int]] = {}
    m = domain.cells.shape[1]
    for cell in domain.cells:
        for a in range(m):
            for b in range(a + 1, m):
                adj.setdefault(int(cell[a]), set()).add(int(cell[b]))
                adj.setdefault(int(cell[b]), set()).add(int(cell[a]))
    frontier = [int(s) for s in seeds]
    for level in range(1, max_hops + 1):
        nxt = []
        for v in frontier:
            for w in adj.get(v, ()):
                if hop[w] > level:
                    hop[w] = level
                    nxt.append(w)
        frontier = nxt
    return hop


def _binned_log_fit(d: np.ndarray, vals: np.ndarray, bins: int, agg: str):
    mask = (d > 0) & (vals > 0) & np.isfinite(vals)
    if int(mask.sum()) < 4:
        raise WindowError("not enough samples in the corner window")
    ld = np.log10(d[mask])
    lv = np.log10(vals[mask])
    lo, hi = float(ld.min()), float(ld.max())
    if hi - lo < 0.5:
        raise WindowError("corner window spans less than half a decade")
    edges = np.linspace(lo, hi, bins + 1)
    which = np.clip(np.digitize(ld, edges) - 1, 0, bins - 1)
    xs, ys = [], []
    for b in range(bins):
        sel = which == b
        if not np.any(sel):
            continue
        xs.append(float(np.mean(ld[sel])))
        ys.append(float(np.max(lv[sel]) if agg == "max" else np.mean(lv[sel])))
    if len(xs) < 3:
        raise WindowError("fewer than three populated bins in the corner window")
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def corner_exponent(
    solution: BvpSolution,
    theta: float | ContactAngle | None = None,
    collar_layers: int = 2,
    window_fraction: float = 0.2,
    bins: int = 12,
    min_r2: float = 0.9,
) -> CornerFit:
    """Log-log fits of the Hessian decay and the |f| growth against d_Gamma.

    The window excludes collar_layers layers of cells at Gamma (recovery
    pollution) and caps distances at window_fraction of the domain diameter.
    lambda_hat comes from the |f| growth; the Hessian fit reports
    beta_hat and the implied 3 - 2 beta_hat.
    """
    domain = solution.domain
    if domain.dim != 2:
        raise HkLabError("corner exponent fits are for planar domains (n = 1)")
    if len(domain.gamma_vertices) == 0:
        raise HkLabError("domain has no corners")
    angle = as_angle(theta) if theta is not None else domain.theta

    extent = domain.vertices.max(axis=0) - domain.vertices.min(axis=0)
    diam = float(np.linalg.norm(extent))
    d_hi = window_fraction * diam

    hop = _hop_distance(domain, domain.gamma_vertices, collar_layers)
    cell_hop = hop[domain.cells].min(axis=1)
    centroids = domain.vertices[domain.cells].mean(axis=1)
    gamma_pts = domain.vertices[domain.gamma_vertices]
    d_cell = np.min(
        np.linalg.norm(centroids[:, None, :] - gamma_pts[None, :, :], axis=2), axis=1
    )
    cell_ok = (cell_hop > collar_layers) & (d_cell <= d_hi)
    hess_mag = solution.hessian_frobenius()
    beta_slope, r2_h = _binned_log_fit(d_cell[cell_ok], hess_mag[cell_ok], bins, "mean")
    beta_hat = -beta_slope

    vert_ok = (hop > collar_layers) & (domain.d_gamma <= d_hi)
    growth_slope, r2_g = _binned_log_fit(
        domain.d_gamma[vert_ok], np.abs(solution.f[vert_ok]), bins, "max"
    )

    d_used = d_cell[cell_ok]
    window = (float(d_used.min()), float(d_used.max()))
    wedge_ref = math.pi / (2.0 * angle.radians) if angle is not None else math.nan
    return CornerFit(
        window=window,
        beta_hat=beta_hat,
        lambda_from_hessian=3.0 - 2.0 * beta_hat,
        lambda_hat=growth_slope,
        r2_hessian=r2_h,
        r2_growth=r2_g,
        wedge_reference=wedge_ref,
        low_trust=(r2_g < min_r2),
    )


# ---------------------------------------------------------------------------
# wedge barrier model
# ---------------------------------------------------------------------------


@dataclass
class WedgeBarrier:
    lam: float
    theta: float
    harmonic_residual: float
    neumann_value: float
    min_profile: float
    positivity_ok: bool

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "theta": self.theta,
            "harmonic_residual": self.harmonic_residual,
            "neumann_value": self.neumann_value,
            "min_profile": self.min_profile,
            "positivity_ok": self.positivity_ok,
        }


def wedge_barrier_check(lam: float, theta: float | ContactAngle, grid: int = 128) -> WedgeBarrier:
    """Evaluate the cosine barrier candidate r^lambda cos(lambda eta) on a polar grid.

    Reports (a) the harmonicity residual assembled from the three polar
    Laplacian terms, (b) the Neumann value -phi'(0) at the flat side (zero for
    the pure cosine, which is why a perturbation is needed for a strict
    barrier), and (c) the positivity margin min phi = cos(lambda theta).
    """
    angle = as_angle(theta)
    if grid < 64:
        raise HkLabError("wedge grid must be at least 64")
    upper = math.pi / (2.0 * angle.radians)
    if not (1.0 - 1e-9 <= lam <= upper + 1e-9):
        raise HkLabError(
            f"lambda {lam} outside the admissible window [1, pi/(2 theta)] = [1, {upper}]"
        )
    eta = np.linspace(0.0, angle.radians, grid)
    r = np.linspace(1.0 / grid, 1.0, grid)
    rr, ee = np.meshgrid(r, eta, indexing="ij")
    profile = np.cos(lam * ee)
    radial = rr ** (lam - 2.0)
    term_rr = lam * (lam - 1.0) * radial * profile
    term_r = lam * radial * profile
    term_ee = -(lam**2) * radial * profile
    total = term_rr + term_r + term_ee
    scale = float(np.max(np.abs(term_rr) + np.abs(term_r) + np.abs(term_ee)))
    residual = float(np.max(np.abs(total))) / max(scale, 1e-300)
    min_profile = float(np.min(np.cos(lam * eta)))
    return WedgeBarrier(
        lam=lam,
        theta=angle.radians,
        harmonic_residual=residual,
        neumann_value=float(lam * math.sin(lam * 0.0)),
        min_profile=min_profile,
        positivity_ok=bool(min_profile > 1e-12),
    )


def wedge_model_values(
    domain: DomainMesh, theta: float | ContactAngle | None = None, lam: float | None = None
) -> np.ndarray:
    """Vertex values of a field with the exact wedge behavior at every corner.

    Each corner contributes r^lambda cos(lambda eta) in its own (T-edge,
    inward) frame; the product of the contributions vanishes on Sigma near the
    corners and keeps the pure power law r^lambda at each corner, so corner
    fits on this field recover lambda directly.
    """
    if domain.dim != 2:
        raise HkLabError("wedge model fields are planar")
    angle = as_angle(theta) if theta is not None else domain.theta
    if lam is None:
        lam = math.pi / (2.0 * angle.radians)
    corners = domain.gamma_vertices
    if len(corners) != 2:
        raise HkLabError("wedge model expects exactly two corners")
    verts = domain.vertices
    centroid = verts.mean(axis=0)

    factors = []
    for corner in corners:
        t_dir = None
        for facet in domain.t_facets:
            ids = [int(v) for v in facet]
            if int(corner) in ids:
                other = ids[0] if ids[1] == int(corner) else ids[1]
                t_dir = verts[other] - verts[corner]
                t_dir = t_dir / np.linalg.norm(t_dir)
                break
        if t_dir is None:
            raise HkLabError("corner has no adjacent T facet")
        inward = np.array([-t_dir[1], t_dir[0]])
        if inward @ (centroid - verts[corner]) < 0:
            inward = -inward
        delta = verts - verts[corner]
        rr = np.linalg.norm(delta, axis=1)
        eta = np.arctan2(delta @ inward, delta @ t_dir)
        factors.append(np.where(rr > 0, rr**lam, 0.0) * np.cos(lam * eta))
    span = float(np.linalg.norm(verts[corners[1]] - verts[corners[0]]))
    return factors[0] * factors[1] / span**lam
