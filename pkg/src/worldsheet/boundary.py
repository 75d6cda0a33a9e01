"""Geometry of the edge worldsheet: embedded in the parent, and directly in spacetime.

Conventions fixed here and relied on downstream:

* eta is the OUTWARD unit normal of the edge inside the parent worldsheet,
  oriented per boundary by ``outward_hint`` (never inferred).
* k_AB = -gamma(eta, grad_A eps_B), so a hole boundary in a flat sheet has
  k = -1/rho and the edge equation of motion reads mu_b * k + mu_0 = 0.
* The adapted normal basis orders eta first (index 0), then the parent normals.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InconsistentGeometry, NullBoundary
from .geometry import (
    DEFAULT_FD_STEP,
    Embedding,
    extrinsic_curvature,
    fd_hessian,
    fd_jacobian,
    frame,
)

Array = np.ndarray


@dataclass(frozen=True)
class BoundaryEmbedding:
    """Map chi: (..., D-1) boundary coordinates -> (..., D) worldsheet coordinates.

    ``outward_hint`` gives, per boundary point, a worldsheet vector with
    positive inner product against the outward edge normal; it may be a
    constant vector or a callable of the boundary point.
    """

    parent: Embedding
    chi_fn: Callable[[Array], Array]
    d_chi_fn: Callable[[Array], Array] | None = None
    dd_chi_fn: Callable[[Array], Array] | None = None
    outward_hint: Callable[[Array], Array] | Array | None = None
    fd_step: float = DEFAULT_FD_STEP

    @property
    def boundary_dim(self) -> int:
        return self.parent.worldsheet_dim - 1

    def chi(self, point: Array) -> Array:
        return np.asarray(self.chi_fn(np.asarray(point, dtype=float)), dtype=float)

    def d_chi(self, point: Array) -> Array:
        if self.d_chi_fn is not None:
            return np.asarray(self.d_chi_fn(np.asarray(point, dtype=float)), dtype=float)
        return fd_jacobian(self.chi, point, self.fd_step)

    def dd_chi(self, point: Array) -> Array:
        if self.dd_chi_fn is not None:
            return np.asarray(self.dd_chi_fn(np.asarray(point, dtype=float)), dtype=float)
        return fd_hessian(self.chi, point, self.fd_step)

    def hint_at(self, point: Array) -> Array:
        if self.outward_hint is None:
            raise ValueError("boundary has no outward_hint; orientation must be supplied")
        if callable(self.outward_hint):
            return np.asarray(self.outward_hint(np.asarray(point, dtype=float)), dtype=float)
        hint = np.asarray(self.outward_hint, dtype=float)
        point = np.asarray(point, dtype=float)
        return np.broadcast_to(hint, point.shape[:-1] + hint.shape).copy()


@dataclass(frozen=True)
class BoundaryAttachment:
    """A boundary together with the bulk-coordinate side it bounds.

    ``side`` says whether the edge provides the lower or upper limit of the
    last worldsheet coordinate; attached boundary maps are graphs over the
    remaining coordinates, chi(u) = (u, f(u)).
    """

    boundary: BoundaryEmbedding
    side: str = "upper"

    def __post_init__(self) -> None:
        if self.side not in ("lower", "upper"):
            raise ValueError("side must be 'lower' or 'upper'")

    def graph(self, u: Array) -> Array:
        return self.boundary.chi(u)[..., -1]


@dataclass(frozen=True)
class BoundaryData:
    """Edge frame and curvature inside the parent worldsheet."""

    tangents_in_m: Array       # (..., D, D-1)   eps^a_A
    normal_in_m: Array         # (..., D)        eta^a, outward unit
    boundary_metric: Array     # (..., D-1, D-1) h_AB
    boundary_metric_inverse: Array
    edge_curvature: Array      # (..., D-1, D-1) k_AB
    edge_trace: Array          # (...,)          k = h^{AB} k_AB
    projector: Array           # (..., D, D)     H^{ab}
    spacetime_normal: Array    # (..., N)        eta^mu


@dataclass(frozen=True)
class AdaptedEdgeData:
    """Direct spacetime geometry of the edge in the adapted basis {eta, n^i}."""

    spacetime_tangents: Array  # (..., N, D-1)
    adapted_normals: Array     # (..., N, K+1), eta first
    edge_extrinsic: Array      # (..., D-1, D-1, K+1)
    edge_twist: Array          # (..., D-1, K+1, K+1)


@dataclass(frozen=True)
class WorldsheetScalar:
    """Scalar field on the worldsheet with coordinate gradient and Hessian."""

    value_fn: Callable[[Array], Array]
    gradient_fn: Callable[[Array], Array]
    hessian_fn: Callable[[Array], Array]

    def value(self, xi: Array) -> Array:
        return np.asarray(self.value_fn(np.asarray(xi, dtype=float)), dtype=float)

    def gradient(self, xi: Array) -> Array:
        return np.asarray(self.gradient_fn(np.asarray(xi, dtype=float)), dtype=float)

    def hessian(self, xi: Array) -> Array:
        return np.asarray(self.hessian_fn(np.asarray(xi, dtype=float)), dtype=float)


LaplacianResiduals = namedtuple("LaplacianResiduals", ["normal", "eta", "combined"])


def _pullback_metric(bnd: BoundaryEmbedding, gamma: Array, eps: Array) -> tuple[Array, Array]:
    h = np.einsum("...aA,...ab,...bB->...AB", eps, gamma, eps)
    h = 0.5 * (h + np.swapaxes(h, -1, -2))
    det_h = np.linalg.det(h)
    scale = np.maximum(np.max(np.abs(eps), axis=(-1, -2)), 1.0) ** (2 * bnd.boundary_dim)
    if np.any(np.abs(det_h) < 1e-12 * scale):
        raise NullBoundary("boundary metric is degenerate (edge tangent to the light cone)")
    return h, np.linalg.inv(h)


def _edge_normal(bnd: BoundaryEmbedding, point: Array, eps: Array, gamma: Array,
                 h_inv: Array, orientation_hint) -> Array:
    """Unit normal of the edge in the worldsheet, signed outward by the hint."""
    d = bnd.parent.worldsheet_dim
    point = np.asarray(point, dtype=float)
    batch = point.shape[:-1]
    eta = np.zeros(batch + (d,))
    done = np.zeros(batch, dtype=bool)
    low = np.einsum("...ab,...bA->...aA", gamma, eps)
    for a in range(d):
        v = np.zeros(batch + (d,))
        v[..., a] = 1.0
        for _ in range(2):
            coeff = np.einsum("...aA,...a->...A", low, v)
            v = v - np.einsum("...aA,...AB,...B->...a", eps, h_inv, coeff)
            proj = np.einsum("...a,...ab,...b->...", eta, gamma, v)
            v = v - proj[..., None] * eta
        norm2 = np.einsum("...a,...ab,...b->...", v, gamma, v)
        euclid2 = np.sum(v * v, axis=-1)
        ok = (~done) & (euclid2 > 1e-20) & (norm2 > 1e-10 * euclid2)
        if np.any(ok):
            cand = v / np.sqrt(np.where(ok, norm2, 1.0))[..., None]
            eta = np.where(ok[..., None], cand, eta)
            done = done | ok
    if not np.all(done):
        raise NullBoundary("edge normal cannot be unit-normalized (null boundary)")
    if orientation_hint is None:
        hint = bnd.hint_at(point)
    elif callable(orientation_hint):
        hint = np.asarray(orientation_hint(point), dtype=float)
    else:
        hint = np.broadcast_to(np.asarray(orientation_hint, dtype=float),
                               batch + (d,)).copy()
    align = np.einsum("...a,...ab,...b->...", eta, gamma, hint)
    if np.any(np.abs(align) < 1e-12):
        raise ValueError("orientation_hint is orthogonal to the edge normal")
    return eta * np.sign(align)[..., None]


def boundary_data(bnd: BoundaryEmbedding, point: Array,
                  orientation_hint: Array | Callable[[Array], Array] | None = None
                  ) -> BoundaryData:
    """Edge frame, metric, projector, and extrinsic curvature inside the parent.

    Raises NullBoundary when the boundary metric degenerates or the edge
    normal cannot be normalized to unit spacelike length (edge on the light
    cone, outside the dynamical scope).
    """
    point = np.asarray(point, dtype=float)
    xi = bnd.chi(point)
    eps = bnd.d_chi(point)
    parent = bnd.parent
    fr = frame(parent, xi)
    gamma = fr.induced_metric
    h, h_inv = _pullback_metric(bnd, gamma, eps)
    eta = _edge_normal(bnd, point, eps, gamma, h_inv, orientation_hint)

    curv = extrinsic_curvature(parent, xi)
    dd_chi = bnd.dd_chi(point)
    # (grad_A eps_B)^a = chi^a_{,AB} + Gamma_bc^a eps^b_A eps^c_B
    grad_eps = dd_chi + np.einsum("...bca,...bA,...cB->...aAB",
                                  curv.worldsheet_connection, eps, eps)
    k_ab = -np.einsum("...a,...ab,...bAB->...AB", eta, gamma, grad_eps)
    k_ab = 0.5 * (k_ab + np.swapaxes(k_ab, -1, -2))
    k = np.einsum("...AB,...AB->...", h_inv, k_ab)
    projector = np.einsum("...aA,...AB,...bB->...ab", eps, h_inv, eps)
    eta_mu = np.einsum("...ma,...a->...m", fr.tangents, eta)
    return BoundaryData(
        tangents_in_m=eps,
        normal_in_m=eta,
        boundary_metric=h,
        boundary_metric_inverse=h_inv,
        edge_curvature=k_ab,
        edge_trace=k,
        projector=projector,
        spacetime_normal=eta_mu,
    )


def edge_equation_residual(bd: BoundaryData, mu0: float, mub: float) -> Array:
    """Edge equation-of-motion residual mu_b * k + mu_0 (zero when it holds)."""
    if mub <= 0:
        raise ValueError("edge tension mub must be positive")
    return mub * bd.edge_trace + mu0


def boundary_condition_residual(bnd: BoundaryEmbedding, point: Array) -> Array:
    """Projected-trace constraint H^{ab} K_ab^i at the edge, one entry per normal."""
    point = np.asarray(point, dtype=float)
    xi = bnd.chi(point)
    eps = bnd.d_chi(point)
    fr = frame(bnd.parent, xi)
    _, h_inv = _pullback_metric(bnd, fr.induced_metric, eps)
    projector = np.einsum("...aA,...AB,...bB->...ab", eps, h_inv, eps)
    curv = extrinsic_curvature(bnd.parent, xi)
    return np.einsum("...ab,...abi->...i", projector, curv.extrinsic)


def _metric_coordinate_derivative(parent: Embedding, xi: Array) -> Array:
    """d gamma_ab / d xi^c assembled by the chain rule, indexed [c, a, b]."""
    x = parent.position(xi)
    e = parent.d_position(xi)
    dd = parent.dd_position(xi)
    g = parent.background.metric_at(x)
    chris = parent.background.christoffels_at(x)
    # g_{mu nu, rho} = g_{sigma nu} Gamma^sigma_{rho mu} + g_{mu sigma} Gamma^sigma_{rho nu}
    dg = (np.einsum("...sn,...srm->...mnr", g, chris)
          + np.einsum("...ms,...srn->...mnr", g, chris))
    return (np.einsum("...mac,...mn,...nb->...cab", dd, g, e)
            + np.einsum("...ma,...mn,...nbc->...cab", e, g, dd)
            + np.einsum("...mnr,...rc,...ma,...nb->...cab", dg, e, e, e))


def _boundary_christoffels(bnd: BoundaryEmbedding, point: Array,
                           eps: Array, h_inv: Array) -> Array:
    """Christoffels of the boundary metric h_AB, indexed [A, B, C] (upper last)."""
    xi = bnd.chi(point)
    gamma = frame(bnd.parent, xi).induced_metric
    dgamma = _metric_coordinate_derivative(bnd.parent, xi)
    dd_chi = bnd.dd_chi(point)
    dh = (np.einsum("...cab,...cC,...aA,...bB->...CAB", dgamma, eps, eps, eps)
          + np.einsum("...ab,...aAC,...bB->...CAB", gamma, dd_chi, eps)
          + np.einsum("...ab,...aA,...bBC->...CAB", gamma, eps, dd_chi))
    return 0.5 * np.einsum(
        "...CD,...ABD->...ABC",
        h_inv,
        np.einsum("...ADB->...ABD", dh) + np.einsum("...BDA->...ABD", dh)
        - np.einsum("...DAB->...ABD", dh))


def _composed_derivatives(bnd: BoundaryEmbedding, point: Array) -> tuple[Array, Array]:
    """First and second derivatives of X(chi(u)) by the chain rule."""
    xi = bnd.chi(point)
    eps = bnd.d_chi(point)
    dd_chi = bnd.dd_chi(point)
    e = bnd.parent.d_position(xi)
    dd = bnd.parent.dd_position(xi)
    y1 = np.einsum("...ma,...aA->...mA", e, eps)
    y2 = (np.einsum("...mab,...aA,...bB->...mAB", dd, eps, eps)
          + np.einsum("...ma,...aAB->...mAB", e, dd_chi))
    return y1, y2


def boundary_laplacian_residuals(bnd: BoundaryEmbedding, point: Array,
                                 mu0: float, mub: float) -> LaplacianResiduals:
    """Edge-intrinsic (Laplacian) form of the boundary conditions and edge law.

    With L^mu = D^A D_A X^mu + Gamma^mu_{alpha beta} H^{alpha beta} built from
    derivatives along the edge only, returns

    * ``normal``:   n^i_mu L^mu                (vanishes iff the projected-trace
      boundary conditions hold; equals minus the projection form identically),
    * ``eta``:      eta_mu L^mu - mu0/mub      (vanishes iff the edge law holds
      with the outward eta convention),
    * ``combined``: L^mu - (mu0/mub) eta^mu    (the acceleration law: the edge
      four-acceleration equals -(mu0/mub) eta^mu, directed into the sheet).
    """
    point = np.asarray(point, dtype=float)
    bd = boundary_data(bnd, point)
    xi = bnd.chi(point)
    parent = bnd.parent
    fr = frame(parent, xi)
    g = parent.background.metric_at(parent.position(xi))
    y1, y2 = _composed_derivatives(bnd, point)
    h_chris = _boundary_christoffels(bnd, point, bd.tangents_in_m,
                                     bd.boundary_metric_inverse)
    hess = y2 - np.einsum("...ABC,...mC->...mAB", h_chris, y1)
    box = np.einsum("...AB,...mAB->...m", bd.boundary_metric_inverse, hess)
    e = parent.d_position(xi)
    h_ambient = np.einsum("...ab,...ma,...nb->...mn", bd.projector, e, e)
    chris = parent.background.christoffels_at(parent.position(xi))
    lap = box + np.einsum("...mrs,...rs->...m", chris, h_ambient)
    lap_low = np.einsum("...mn,...n->...m", g, lap)
    normal = np.einsum("...mi,...m->...i", fr.normals, lap_low)
    eta_part = np.einsum("...m,...m->...", bd.spacetime_normal, lap_low) - mu0 / mub
    combined = lap - (mu0 / mub) * bd.spacetime_normal
    return LaplacianResiduals(normal=normal, eta=eta_part, combined=combined)


def laplacian_decomposition_residual(bnd: BoundaryEmbedding, point: Array,
                                     scalar_field: WorldsheetScalar) -> Array:
    """Residual of the worldsheet-Laplacian split along and across the edge.

    Returns Delta psi - [D^A D_A psi + (eta.grad)^2 psi + k eta.grad psi],
    which vanishes for smooth fields at points of the edge.
    """
    point = np.asarray(point, dtype=float)
    bd = boundary_data(bnd, point)
    xi = bnd.chi(point)
    parent = bnd.parent
    fr = frame(parent, xi)
    curv = extrinsic_curvature(parent, xi)
    grad = scalar_field.gradient(xi)
    hess = scalar_field.hessian(xi)
    cov_hess = hess - np.einsum("...abc,...c->...ab", curv.worldsheet_connection, grad)
    laplacian = np.einsum("...ab,...ab->...", fr.induced_metric_inverse, cov_hess)

    eps = bd.tangents_in_m
    dd_chi = bnd.dd_chi(point)
    grad_b = np.einsum("...a,...aA->...A", grad, eps)
    hess_b = (np.einsum("...ab,...aA,...bB->...AB", hess, eps, eps)
              + np.einsum("...a,...aAB->...AB", grad, dd_chi))
    h_chris = _boundary_christoffels(bnd, point, eps, bd.boundary_metric_inverse)
    box_b = np.einsum("...AB,...AB->...", bd.boundary_metric_inverse,
                      hess_b - np.einsum("...ABC,...C->...AB", h_chris, grad_b))
    eta = bd.normal_in_m
    normal_part = np.einsum("...a,...b,...ab->...", eta, eta, cov_hess)
    drift = bd.edge_trace * np.einsum("...a,...a->...", eta, grad)
    return laplacian - (box_b + normal_part + drift)


def _adapted_normal_field(bnd: BoundaryEmbedding, point: Array) -> Array:
    """Adapted normal columns {eta^mu, n^mu_i} along the edge, (..., N, K+1)."""
    bd = boundary_data(bnd, point)
    normals = frame(bnd.parent, bnd.chi(point)).normals
    return np.concatenate([bd.spacetime_normal[..., None], normals], axis=-1)


def adapted_edge_data(bnd: BoundaryEmbedding, point: Array, *,
                      check_tol: float = 1e-6) -> AdaptedEdgeData:
    """Direct spacetime geometry of the edge, with inheritance cross-checks.

    Verifies, to ``check_tol``, that the edge inherits the parent's extrinsic
    curvature (K^i_AB equals the projected K^i_ab, and the eta-component
    equals k_AB) and that the mixed twist satisfies
    omega_{A i 0} = eta^a eps^b_A K_{ab i}; raises InconsistentGeometry
    otherwise.
    """
    point = np.asarray(point, dtype=float)
    parent = bnd.parent
    bd = boundary_data(bnd, point)
    xi = bnd.chi(point)
    x = parent.position(xi)
    g = parent.background.metric_at(x)
    chris = parent.background.christoffels_at(x)
    y1, y2 = _composed_derivatives(bnd, point)
    adapted = _adapted_normal_field(bnd, point)
    sec = y2 + np.einsum("...mrs,...rA,...sB->...mAB", chris, y1, y1)
    edge_extrinsic = -np.einsum("...mI,...mn,...nAB->...ABI", adapted, g, sec)
    edge_extrinsic = 0.5 * (edge_extrinsic + np.swapaxes(edge_extrinsic, -3, -2))

    dn = fd_jacobian(lambda u: _adapted_normal_field(bnd, u).reshape(u.shape[:-1] + (-1,)),
                     point, bnd.fd_step)
    n_dim = parent.background.dimension
    kk = adapted.shape[-1]
    dn = dn.reshape(point.shape[:-1] + (n_dim, kk, bnd.boundary_dim))
    cov = dn + np.einsum("...mrs,...rA,...sI->...mIA", chris, y1, adapted)
    twist = np.einsum("...nJ,...nm,...mIA->...AIJ", adapted, g, cov)
    twist = 0.5 * (twist - np.swapaxes(twist, -1, -2))

    curv = extrinsic_curvature(parent, xi)
    projected = np.einsum("...aA,...bB,...abi->...ABi", bd.tangents_in_m,
                          bd.tangents_in_m, curv.extrinsic)
    err_i = np.max(np.abs(edge_extrinsic[..., 1:] - projected))
    err_0 = np.max(np.abs(edge_extrinsic[..., 0] - bd.edge_curvature))
    mixed = np.einsum("...a,...bA,...abi->...Ai", bd.normal_in_m, bd.tangents_in_m,
                      curv.extrinsic)
    err_t = np.max(np.abs(twist[..., 1:, 0] - mixed))
    if max(err_i, err_0, err_t) > check_tol:
        raise InconsistentGeometry(
            f"edge inheritance relations violated: {err_i:.3e}, {err_0:.3e}, {err_t:.3e}")
    return AdaptedEdgeData(
        spacetime_tangents=y1,
        adapted_normals=adapted,
        edge_extrinsic=edge_extrinsic,
        edge_twist=twist,
    )
