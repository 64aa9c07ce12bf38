"""Reilly-formula evaluation and the step-by-step inequality chain replay.

The volume side integrates the recovered Hessian; its trace is used as the
discrete Laplacian so that the Cauchy-Schwarz comparison acts on one
consistent object.  Boundary terms on T use the boundary-condition data (the
tangential gradient of the flux is then known analytically) and the exact
second fundamental form of the support (zero on the hyperplane, the metric on
the unit sphere); the patch Laplacian of f is reduced to a flux through Gamma
by the divergence theorem, which avoids second tangential derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hklab.bvp import BvpSolution, capillary_constant_from_domain, t_facet_integrals
from hklab.containers import Container, ContactAngle, as_angle
from hklab.domain import DomainMesh
from hklab.errors import ConstantMismatchError, HkLabError, MeanConvexityError
from hklab.identities import domain_volume_integrals, integrate_boundary
from hklab.surface import SurfaceMesh

MACHINE_FLOOR = 1e-300
ALGEBRAIC_RTOL = 1e-9
IDENTITY_RTOL = 2e-2


@dataclass
class ReillySides:
    volume_side: float
    boundary_side: float
    weighted: bool
    parts: dict = field(default_factory=dict)

    @property
    def defect(self) -> float:
        return self.volume_side - self.boundary_side

    @property
    def relative_defect(self) -> float:
        scale = max(abs(self.volume_side), abs(self.boundary_side), MACHINE_FLOOR)
        return abs(self.defect) / scale

    def to_dict(self) -> dict:
        return {
            "volume_side": self.volume_side,
            "boundary_side": self.boundary_side,
            "defect": self.defect,
            "relative_defect": self.relative_defect,
            "weighted": self.weighted,
            "parts": dict(self.parts),
        }


@dataclass
class PipelineStep:
    name: str
    lhs: float
    rhs: float
    sense: str  # "=" or ">="
    tolerance: float
    margin: float = 0.0
    passed: bool = False

    def __post_init__(self) -> None:
        self.margin = self.lhs - self.rhs
        scale = max(abs(self.lhs), abs(self.rhs), MACHINE_FLOOR)
        if self.sense == "=":
            self.passed = abs(self.margin) <= self.tolerance * scale
        else:
            self.passed = self.margin >= -self.tolerance * scale

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "sense": self.sense,
            "margin": self.margin,
            "pass": self.passed,
            "tolerance": self.tolerance,
        }


@dataclass
class PipelineTrace:
    container: str
    steps: list
    final_gap: float
    equality_case: bool
    rigidity: dict | None

    @property
    def all_passed(self) -> bool:
        return all(s.passed for s in self.steps)

    def step(self, name: str) -> PipelineStep:
        for s in self.steps:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "container": self.container,
            "steps": [s.to_dict() for s in self.steps],
            "final_gap": self.final_gap,
            "equality_case": self.equality_case,
            "rigidity": self.rigidity,
        }


# ---------------------------------------------------------------------------
# boundary machinery
# ---------------------------------------------------------------------------


def _t_trace_gradients(domain: DomainMesh, f: np.ndarray) -> np.ndarray:
    """Tangential P1 gradient of the trace of f on each T facet."""
    facets = domain.t_facets
    if len(facets) == 0:
        return np.zeros((0, domain.dim))
    pts = domain.vertices[facets]
    if domain.dim == 2:
        edge = pts[:, 1] - pts[:, 0]
        length2 = np.einsum("ij,ij->i", edge, edge)
        df = f[facets[:, 1]] - f[facets[:, 0]]
        return edge * (df / length2)[:, None]
    e1 = pts[:, 1] - pts[:, 0]
    e2 = pts[:, 2] - pts[:, 0]
    g11 = np.einsum("ij,ij->i", e1, e1)
    g12 = np.einsum("ij,ij->i", e1, e2)
    g22 = np.einsum("ij,ij->i", e2, e2)
    det = g11 * g22 - g12 * g12
    d1 = f[facets[:, 1]] - f[facets[:, 0]]
    d2 = f[facets[:, 2]] - f[facets[:, 0]]
    a = (g22 * d1 - g12 * d2) / det
    b = (g11 * d2 - g12 * d1) / det
    return a[:, None] * e1 + b[:, None] * e2


def _t_facet_vertex_mean(domain: DomainMesh, values: np.ndarray) -> np.ndarray:
    if len(domain.t_facets) == 0:
        return np.zeros(0)
    return values[domain.t_facets].mean(axis=1)


def gamma_t_flux(domain: DomainMesh, solution: BvpSolution, weight: str = "1") -> float:
    """integral over Gamma of w * <grad_T f, nu_bar> with facet-planar conormals.

    weight "1" or "z" (evaluated at the Gamma edge midpoint).  nu_bar is the
    in-facet direction perpendicular to the Gamma edge pointing out of T; the
    gradient is the recovered nodal gradient (nu_bar is facet-tangential, so
    no projection is needed and the one-sided trace differences are avoided).
    """
    gamma = set(int(g) for g in domain.gamma_vertices)
    verts = domain.vertices
    nodal = solution.nodal_gradients
    total = 0.0
    if domain.dim == 2:
        for facet in domain.t_facets:
            a, b = int(facet[0]), int(facet[1])
            for corner, other in ((a, b), (b, a)):
                if corner in gamma and other not in gamma:
                    nubar = verts[corner] - verts[other]
                    nubar /= np.linalg.norm(nubar)
                    w = verts[corner][-1] if weight == "z" else 1.0
                    total += w * float(nodal[corner] @ nubar)
        return total
    for facet in domain.t_facets:
        ids = [int(v) for v in facet]
        on_gamma = [v in gamma for v in ids]
        if sum(on_gamma) != 2:
            continue
        edge = [v for v, g in zip(ids, on_gamma) if g]
        opp = [v for v, g in zip(ids, on_gamma) if not g][0]
        pa, pb = verts[edge[0]], verts[edge[1]]
        e = pb - pa
        elen = float(np.linalg.norm(e))
        e /= elen
        mid = 0.5 * (pa + pb)
        nubar = mid - verts[opp]
        nubar -= (nubar @ e) * e
        nubar /= np.linalg.norm(nubar)
        w = mid[-1] if weight == "z" else 1.0
        g_mid = 0.5 * (nodal[edge[0]] + nodal[edge[1]])
        total += w * float(g_mid @ nubar) * elen
    return total


def _sigma_data(domain: DomainMesh, solution: BvpSolution):
    areas = domain.facet_measures(domain.sigma_facets)
    z = domain.vertices[domain.sigma_facets][:, :, -1].mean(axis=1)
    return areas, domain.sigma_H, solution.f_nu_sigma, z


# ---------------------------------------------------------------------------
# the two Reilly sides
# ---------------------------------------------------------------------------


def reilly_sides(domain: DomainMesh, solution: BvpSolution, weighted: bool = False) -> ReillySides:
    """Evaluate both sides of the (weighted) Reilly formula on a solution."""
    problem = solution.problem
    if problem.domain is not domain:
        raise HkLabError("solution was computed on a different domain")
    tr = solution.laplacian()
    h2 = np.einsum("cab,cab->c", solution.cell_hessians, solution.cell_hessians)
    cell_z = domain.vertices[domain.cells][:, :, -1].mean(axis=1)

    if weighted:
        if domain.container is Container.HALF_SPACE:
            raise HkLabError("the weighted formula is for the half-ball (V = 0 on T here)")
        if float(domain.vertices[:, -1].min()) < -1e-12:
            raise HkLabError("weighted Reilly requires x_d >= 0 on the domain")
        if domain.container is Container.HALF_BALL and problem.robin_gamma != 1:
            raise HkLabError("weighted Reilly is set up for the Robin coefficient 1")
        volume_side = float(np.sum(domain.cell_volumes * cell_z * (tr**2 - h2)))
    else:
        volume_side = float(np.sum(domain.cell_volumes * (tr**2 - h2)))

    areas, h_sigma, f_nu, z_sigma = _sigma_data(domain, solution)
    parts: dict[str, float] = {}
    if weighted:
        sigma_part = float(np.sum(areas * z_sigma * h_sigma * f_nu**2))
    else:
        sigma_part = float(np.sum(areas * h_sigma * f_nu**2))
    parts["sigma"] = sigma_part

    c = problem.flux_constant
    gamma = problem.robin_gamma
    n = domain.dim - 1
    t_part = 0.0
    if domain.container is Container.HALF_SPACE:
        flux_gamma = gamma_t_flux(domain, solution, "1")
        parts["gamma_flux"] = flux_gamma
        t_part = c * flux_gamma
        if gamma > 0:
            tg = _t_trace_gradients(domain, solution.f)
            g2 = np.einsum("ij,ij->i", tg, tg)
            t_areas = domain.facet_measures(domain.t_facets)
            t_part -= 2.0 * gamma * float(np.sum(t_areas * g2))
    elif domain.container is Container.HALF_BALL:
        t_areas = domain.facet_measures(domain.t_facets)
        f_t = _t_facet_vertex_mean(domain, solution.f)
        z_t = domain.vertices[domain.t_facets][:, :, -1].mean(axis=1)
        if weighted:
            flux_gamma = gamma_t_flux(domain, solution, "z")
            parts["gamma_flux_weighted"] = flux_gamma
            t_part = c * flux_gamma + n * c**2 * float(np.sum(t_areas * z_t))
        else:
            flux_gamma = gamma_t_flux(domain, solution, "1")
            parts["gamma_flux"] = flux_gamma
            tg = _t_trace_gradients(domain, solution.f)
            g2 = np.einsum("ij,ij->i", tg, tg)
            t_part = (
                c * flux_gamma
                + (1.0 - 2.0 * gamma) * float(np.sum(t_areas * g2))
                + n * float(np.sum(t_areas * (c + gamma * f_t) ** 2))
            )
    parts["t"] = t_part
    boundary_side = sigma_part + t_part
    return ReillySides(volume_side, boundary_side, weighted, parts)


# ---------------------------------------------------------------------------
# proof chain
# ---------------------------------------------------------------------------


def hk_pipeline(
    container: Container | str,
    domain: DomainMesh,
    surface: SurfaceMesh,
    solution: BvpSolution,
    theta: float | ContactAngle | None = None,
    identity_rtol: float = IDENTITY_RTOL,
) -> PipelineTrace:
    """Replay the inequality chain on a discrete solution, step by step."""
    from hklab.containers import parse_container

    container = parse_container(container)
    if container not in (Container.HALF_SPACE, Container.HALF_BALL):
        raise HkLabError("the proof chain is defined for the half-space and half-ball")
    if domain.container is not container or surface.container is not container:
        raise HkLabError("pipeline container mismatch")
    angle = as_angle(theta) if theta is not None else domain.theta
    n = domain.dim - 1

    c_ref = capillary_constant_from_domain(domain, angle)
    c = solution.problem.flux_constant
    if abs(c - c_ref) > 1e-10 * max(abs(c_ref), 1e-12):
        raise ConstantMismatchError(
            f"solution flux constant {c} is not the capillary constant {c_ref}"
        )
    if container is Container.HALF_BALL and solution.problem.robin_gamma != 1:
        raise ConstantMismatchError("half-ball chain needs the Robin coefficient 1")

    ball = container is Container.HALF_BALL
    tr = solution.laplacian()
    h2 = np.einsum("cab,cab->c", solution.cell_hessians, solution.cell_hessians)
    cell_z = domain.vertices[domain.cells][:, :, -1].mean(axis=1)
    wcell = domain.cell_volumes * cell_z if ball else domain.cell_volumes

    areas, h_sigma, f_nu, z_sigma = _sigma_data(domain, solution)
    if float(np.min(h_sigma)) <= 0.0:
        raise MeanConvexityError("pipeline requires H > 0 on Sigma")
    wface = areas * z_sigma if ball else areas

    volume, volume_z = domain_volume_integrals(domain)
    vol_w = volume_z if ball else volume
    area_t, int_t_z = t_facet_integrals(domain)

    sides = reilly_sides(domain, solution, weighted=ball)

    steps: list[PipelineStep] = []
    int_tr2 = float(np.sum(wcell * tr**2))
    steps.append(
        PipelineStep(
            "cauchy_schwarz",
            n / (n + 1.0) * int_tr2,
            sides.volume_side,
            ">=",
            ALGEBRAIC_RTOL,
        )
    )
    steps.append(
        PipelineStep("reilly_identity", sides.volume_side, sides.boundary_side, "=", identity_rtol)
    )

    if ball:
        flux = gamma_t_flux(domain, solution, "z")
        b_mu = integrate_boundary(surface, "mu_z")
        xe_mu = integrate_boundary(surface, "(X+E).mu")
        corner_rhs = (n / (n + 1.0)) * (int_t_z / b_mu) * xe_mu
    else:
        flux = gamma_t_flux(domain, solution, "1")
        corner_rhs = (n / (n + 1.0)) * area_t
    steps.append(PipelineStep("corner_flux", flux, corner_rhs, "=", identity_rtol))

    int_f_nu = float(np.sum(wface * f_nu))
    int_h_f_nu2 = float(np.sum(wface * h_sigma * f_nu**2))
    int_inv_h = float(np.sum(wface / h_sigma))
    t_term = c * (int_t_z if ball else area_t)
    steps.append(PipelineStep("divergence", vol_w, int_f_nu + t_term, "=", identity_rtol))

    if ball:
        correction = (n / (n + 1.0)) * angle.cos * int_t_z**2 / b_mu
    else:
        gamma_measure = float(len(domain.gamma_vertices)) if domain.dim == 2 else None
        if gamma_measure is None:
            ring = domain.vertices[domain.gamma_vertices]
            gamma_measure = float(
                np.linalg.norm(np.roll(ring, -1, axis=0) - ring, axis=1).sum()
            )
        correction = (n / (n + 1.0)) * angle.cot * area_t**2 / gamma_measure
    steps.append(
        PipelineStep("capillary_balance", int_f_nu, vol_w + correction, "=", identity_rtol)
    )
    steps.append(
        PipelineStep(
            "main_inequality", int_f_nu, (n + 1.0) / n * int_h_f_nu2, ">=", identity_rtol
        )
    )
    steps.append(
        PipelineStep("hoelder", int_h_f_nu2 * int_inv_h, int_f_nu**2, ">=", ALGEBRAIC_RTOL)
    )
    final = PipelineStep(
        "heintze_karcher",
        int_inv_h,
        (n + 1.0) / n * vol_w + correction * (n + 1.0) / n,
        ">=",
        identity_rtol,
    )
    steps.append(final)

    eq_steps = [s for s in steps if s.sense == ">="]
    equality_case = all(
        abs(s.margin) <= identity_rtol * max(abs(s.lhs), abs(s.rhs), MACHINE_FLOOR)
        for s in eq_steps
    ) and all(s.passed for s in steps)

    rigidity = None
    if equality_case:
        d = domain.dim
        dev = solution.cell_hessians - np.eye(d)[None, :, :] / (d)
        hess_dev = float(np.sqrt(np.einsum("cab,cab->c", dev, dev)).max())
        shape_dev = float(np.max(np.abs(h_sigma * f_nu / n - 1.0 / (n + 1.0))) * n)
        rigidity = {
            "max_hessian_deviation": hess_dev,
            "max_sigma_shape_deviation": shape_dev,
        }

    return PipelineTrace(
        container=container.value,
        steps=steps,
        final_gap=final.margin,
        equality_case=equality_case,
        rigidity=rigidity,
    )
