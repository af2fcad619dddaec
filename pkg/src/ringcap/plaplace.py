"""P1 finite elements for the p-Laplace capacity problem on a ring.

The potential minimises the regularised energy

    J_eps(u) = sum_T |T| (|grad u_T|^2 + eps^2)^(p/2)

over piecewise-linear u with u = 1 on the inner and u = 0 on the outer
boundary. Each Kacanov step freezes the weight
w = (|grad u|^2 + eps^2)^((p-2)/2) and solves the weighted Laplace problem;
for p <= 2 the step is a majorise-minimise step, so J_eps never increases.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .contour import single_loop
from .errors import ConvergenceError, DomainError, PreconditionError
from .oracle import check_p, is_conformal
from .ringmesh import INNER, OUTER, TriMesh

log = logging.getLogger(__name__)

DEFAULT_EPS = tuple(10.0 ** -k for k in range(2, 9))


@dataclass(frozen=True)
class SolveParams:
    p: float
    eps_schedule: Sequence[float] = DEFAULT_EPS
    tol: float = 1e-10
    max_iters: int = 200
    linear_solver: str = "direct"  # or "cg"

    def __post_init__(self):
        check_p(self.p)
        eps = list(self.eps_schedule)
        if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise DomainError("eps_schedule must be positive and strictly decreasing")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.linear_solver not in ("direct", "cg"):
            raise DomainError(f"unknown linear solver {self.linear_solver!r}")


@dataclass(eq=False)
class ScalarField:
    """Vertex values of a P1 field together with solver bookkeeping."""

    mesh: TriMesh
    values: np.ndarray
    p: float = 2.0
    eps: float = 0.0  # absolute regularisation used in the final stage
    iterations: int = 0
    residual: float = 0.0
    energy_history: List[float] = field(default_factory=list)

    def gradients(self) -> np.ndarray:
        return self.mesh.gradients(self.values)

    def __call__(self, pts) -> np.ndarray:
        return interpolate(self.mesh, self.values, pts)


@dataclass
class CapacityReport:
    p: float
    cap_energy: float
    cap_flux: float
    p_modulus: float
    iterations: int
    final_residual: float
    t_probe: float = 0.5

    def to_json(self) -> dict:
        return {"p": self.p, "cap_energy": self.cap_energy, "cap_flux": self.cap_flux,
                "p_modulus": self.p_modulus, "iterations": self.iterations,
                "residual": self.final_residual}


class _Assembler:
    """Re-weightable stiffness matrix with Dirichlet rows eliminated."""

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        G = mesh.basis_gradients
        self.area = np.abs(mesh.signed_areas)
        self.local = np.einsum("mid,mjd->mij", G, G) * self.area[:, None, None]
        t = mesh.triangles
        self.rows = np.repeat(t, 3, axis=1).ravel()
        self.cols = np.tile(t, (1, 3)).ravel()
        fixed = (mesh.tags == INNER) | (mesh.tags == OUTER)
        if not (mesh.tags == INNER).any() or not (mesh.tags == OUTER).any():
            raise PreconditionError("mesh needs both INNER and OUTER vertices")
        self.free = np.nonzero(~fixed)[0]
        self.fixed = np.nonzero(fixed)[0]
        self.u_fixed = (mesh.tags[self.fixed] == INNER).astype(float)

    def matrix(self, w: np.ndarray) -> sp.csr_matrix:
        n = self.mesh.n_vertices
        data = (self.local * w[:, None, None]).ravel()
        return sp.csr_matrix((data, (self.rows, self.cols)), shape=(n, n))

    def solve(self, w: np.ndarray, method: str = "direct", x0=None) -> np.ndarray:
        K = self.matrix(w)
        Kff = K[self.free][:, self.free]
        rhs = -K[self.free][:, self.fixed] @ self.u_fixed
        if method == "direct":
            # the reduced matrix is SPD: symmetric ordering, no pivoting
            lu = spla.splu(Kff.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                           options={"SymmetricMode": True})
            x = lu.solve(rhs)
        else:
            M = sp.diags(1.0 / Kff.diagonal())
            x, info = spla.cg(Kff, rhs, x0=x0, rtol=1e-12, atol=0.0, M=M, maxiter=20 * len(rhs))
            if info != 0:
                raise ConvergenceError("conjugate gradient did not converge")
        u = np.empty(self.mesh.n_vertices)
        u[self.fixed] = self.u_fixed
        u[self.free] = x
        return u

    def residual(self, w: np.ndarray, u: np.ndarray) -> float:
        K = self.matrix(w)
        r = (K @ u)[self.free]
        ref = np.linalg.norm(K[self.free][:, self.fixed] @ self.u_fixed)
        return float(np.linalg.norm(r) / ref)


def gradient_scale(mesh: TriMesh) -> float:
    """Typical |grad u|: one over the mean ring width."""
    if mesh.ring is not None and mesh.n_phi:
        inner = mesh.vertices[: mesh.n_phi]
        outer = mesh.vertices[-mesh.n_phi:]
        width = float(np.mean(np.hypot(*(outer - inner).T)))
    else:
        width = float(np.ptp(mesh.vertices, axis=0).max())
    return 1.0 / width


def energy(area, grad_sq, p, eps) -> float:
    return float(np.sum(area * (grad_sq + eps * eps) ** (p / 2.0)))


def solve_potential(mesh: TriMesh, params: SolveParams) -> ScalarField:
    """Capacity potential by Kacanov iteration with eps-continuation."""
    p = check_p(params.p)
    asm = _Assembler(mesh)
    u = asm.solve(np.ones(len(asm.area)), params.linear_solver)
    if is_conformal(p):
        res = asm.residual(np.ones(len(asm.area)), u)
        e = energy(asm.area, (mesh.gradients(u) ** 2).sum(-1), 2.0, 0.0)
        return ScalarField(mesh, u, p, 0.0, 1, res, [e])

    scale = gradient_scale(mesh)
    history = []
    total = 1
    eps_list = [e * scale for e in params.eps_schedule]
    for stage, eps in enumerate(eps_list):
        last = stage == len(eps_list) - 1
        gsq = (mesh.gradients(u) ** 2).sum(-1)
        J = energy(asm.area, gsq, p, eps)
        history.append(J)
        converged = False
        for _ in range(params.max_iters):
            w = (gsq + eps * eps) ** ((p - 2.0) / 2.0)
            u_new = asm.solve(w, params.linear_solver, x0=u[asm.free])
            total += 1
            gsq = (mesh.gradients(u_new) ** 2).sum(-1)
            J_new = energy(asm.area, gsq, p, eps)
            history.append(J_new)
            if J_new > J * (1 + 1e-12):
                log.warning("Kacanov energy increased: %.16g -> %.16g", J, J_new)
            change = abs(J - J_new) / J_new
            u, J = u_new, J_new
            if change < params.tol:
                converged = True
                break
        if last and not converged:
            w = (gsq + eps * eps) ** ((p - 2.0) / 2.0)
            raise ConvergenceError(
                f"Kacanov iteration did not converge in {params.max_iters} steps at eps={eps:g}",
                residual=asm.residual(w, u))
    w = (gsq + eps_list[-1] ** 2) ** ((p - 2.0) / 2.0)
    return ScalarField(mesh, u, p, eps_list[-1], total, asm.residual(w, u), history)


def interpolate(mesh: TriMesh, values: np.ndarray, pts) -> np.ndarray:
    """Evaluate a P1 field at arbitrary points inside the mesh."""
    from matplotlib.tri import Triangulation, LinearTriInterpolator

    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    tri = Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.triangles)
    out = LinearTriInterpolator(tri, values)(pts[:, 0], pts[:, 1])
    return np.ma.filled(out, np.nan)


def recovered_gradients(mesh: TriMesh, values: np.ndarray) -> np.ndarray:
    """Continuous vertex gradients, shape (N, 2).

    Interior vertices take the area-weighted mean of the surrounding element
    gradients. On structured ring meshes the two boundary layers are then
    extrapolated linearly along the rays, since one-sided averages there are
    only first-order accurate.
    """
    g = mesh.gradients(values)
    a = np.abs(mesh.signed_areas)
    acc = np.zeros((mesh.n_vertices, 2))
    wsum = np.zeros(mesh.n_vertices)
    for k in range(3):
        np.add.at(acc, mesh.triangles[:, k], g * a[:, None])
        np.add.at(wsum, mesh.triangles[:, k], a)
    gv = acc / wsum[:, None]
    n = mesh.n_phi
    if n and mesh.n_s >= 3:
        V = mesh.vertices.reshape(-1, n, 2)
        G = gv.reshape(-1, n, 2)
        for j0, j1, j2 in ((0, 1, 2), (-1, -2, -3)):
            d01 = np.hypot(*(V[j0] - V[j1]).T)[:, None]
            d12 = np.hypot(*(V[j1] - V[j2]).T)[:, None]
            G[j0] = G[j1] + (G[j1] - G[j2]) * d01 / d12
        gv = G.reshape(-1, 2)
    return gv


def eval_in_triangles(mesh: TriMesh, vertex_values: np.ndarray, tri_ids, pts) -> np.ndarray:
    """Linear interpolation of vertex data at points known to lie in ``tri_ids``."""
    tri = mesh.triangles[tri_ids]
    G = mesh.basis_gradients[tri_ids]
    lam = np.einsum("mkd,md->mk", G, pts - mesh.vertices[tri[:, 0]])
    lam[:, 0] += 1.0
    return np.einsum("mk,mk...->m...", lam, vertex_values[tri])


def level_flux(field: ScalarField, t: float, gradient: str = "recovered", loop=None,
               gv=None) -> float:
    """Flux integral of |grad u|^(p-1) over the level loop {u = t}.

    ``gradient="triangle"`` uses the constant gradient of the triangle that
    holds each segment; ``"recovered"`` evaluates the continuous recovered
    gradient at each segment midpoint.
    """
    mesh, p = field.mesh, field.p
    loop = single_loop(mesh, field.values, t) if loop is None else loop
    pts = loop.points
    seg_len = np.hypot(*(np.roll(pts, -1, axis=0) - pts).T)
    if gradient == "triangle":
        g = field.gradients()[loop.seg_tri]
    elif gradient == "recovered":
        gv = recovered_gradients(mesh, field.values) if gv is None else gv
        mid = 0.5 * (pts + np.roll(pts, -1, axis=0))
        g = eval_in_triangles(mesh, gv, loop.seg_tri, mid)
    else:
        raise DomainError(f"unknown gradient mode {gradient!r}")
    gn = np.sqrt((g**2).sum(-1) + field.eps**2)
    return float(np.sum(gn ** (p - 1.0) * seg_len))


def p_modulus(cap: float, p: float) -> float:
    if not cap > 0:
        raise DomainError("capacity must be positive")
    return float(cap ** (1.0 / (1.0 - check_p(p))))


def capacity(mesh: TriMesh, field: ScalarField, p: float, t_probe: float = 0.5,
             gradient: str = "recovered") -> CapacityReport:
    """Energy and level-flux capacity estimates of a solved potential."""
    p = check_p(p)
    if not (0.0 < t_probe < 1.0):
        raise DomainError("t_probe must lie in (0, 1)")
    gsq = (mesh.gradients(field.values) ** 2).sum(-1)
    eps = 0.0 if is_conformal(p) else field.eps
    cap_e = energy(np.abs(mesh.signed_areas), gsq, p, eps)
    cap_f = level_flux(field, t_probe, gradient)
    return CapacityReport(p, cap_e, cap_f, p_modulus(cap_e, p), field.iterations,
                          field.residual, t_probe)
