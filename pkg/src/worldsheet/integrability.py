"""Integrability conditions of the embedding hierarchy, as numerical residuals.

Three families are evaluated, each at three levels: the worldsheet in
spacetime, the edge in the worldsheet, and the edge directly in spacetime.
Frame-dependent quantities are differenced in a parallel gauge: the normal
frame at stencil points is aligned to the center frame by the minimizing
rotation before differencing, so deterministic-gauge jumps cannot inject
spurious twist.

Residual norms are the maximum over tangential index slots of the Euclidean
norm over frame (normal) indices, which makes them exactly invariant under
constant frame rotations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .boundary import (
    BoundaryEmbedding,
    _adapted_normal_field,
    _boundary_christoffels,
    _composed_derivatives,
    boundary_data,
)
from .geometry import Embedding, fd_jacobian, frame, normal_frame, second_fundamental_input

Array = np.ndarray

DEFAULT_STEP = 1e-3


@dataclass(frozen=True)
class CurvatureTensors:
    """Curvature content at one edge point, all Riemann tensors fully lowered.

    ``ambient_riemann`` is R_{mu nu rho sigma} of the background (zero when
    flat), ``worldsheet_riemann`` the intrinsic R_{abcd} of the parent,
    ``boundary_riemann`` the intrinsic R_{ABCD} of the edge, and the Omega
    arrays are the curvatures of the twist connections (antisymmetric in the
    frame index pair).
    """

    ambient_riemann: Array          # (..., N, N, N, N)
    worldsheet_riemann: Array       # (..., D, D, D, D)
    boundary_riemann: Array         # (..., D-1, D-1, D-1, D-1)
    twist_curvature: Array | None   # (..., D, D, K, K)
    adapted_twist_curvature: Array | None  # (..., D-1, D-1, K+1, K+1)


@dataclass(frozen=True)
class WorldsheetResiduals:
    gauss_codazzi: Array
    codazzi_mainardi: Array
    ricci: Array | None  # None when the co-dimension is one (family is vacuous)

    def max(self) -> float:
        vals = [np.max(self.gauss_codazzi), np.max(self.codazzi_mainardi)]
        if self.ricci is not None:
            vals.append(np.max(self.ricci))
        return float(max(vals))


@dataclass(frozen=True)
class DirectEdgeResiduals:
    gauss_codazzi: Array
    codazzi_mainardi: Array
    ricci: Array | None
    twist_tangential: Array  # Omega_{AB ij} vs projected worldsheet Omega
    twist_mixed: Array       # Omega_{AB i0} vs the curvature-edge cross terms

    def max(self) -> float:
        vals = [np.max(self.gauss_codazzi), np.max(self.codazzi_mainardi),
                np.max(self.twist_tangential), np.max(self.twist_mixed)]
        if self.ricci is not None:
            vals.append(np.max(self.ricci))
        return float(max(vals))


def aligned_normal_frame_fn(embedding: Embedding,
                            center: Array) -> Callable[[Array], Array]:
    """Normal-frame field aligned to the frame at ``center`` by Procrustes rotation.

    The returned field is smooth near the center even where the deterministic
    gauge of :func:`normal_frame` switches seed axes or signs, and coincides
    with it at the center.  Overlaps use the background metric at the center
    (exact for flat backgrounds).
    """
    center = np.asarray(center, dtype=float)
    ref = normal_frame(embedding, center)
    g_c = embedding.background.metric_at(embedding.position(center))

    def field(p: Array) -> Array:
        raw = normal_frame(embedding, p)
        overlap = np.einsum("...mi,...mn,...nj->...ij", raw, g_c, ref)
        u, _, vt = np.linalg.svd(overlap)
        rot = u @ vt
        return np.einsum("...mi,...ij->...mj", raw, rot)

    return field


def _extrinsic_with_frame(embedding: Embedding, point: Array,
                          normal_frame_fn: Callable[[Array], Array]) -> Array:
    """K_ab^i for a given normal-frame field, without the twist (cheap)."""
    normals = normal_frame_fn(point)
    g = embedding.background.metric_at(embedding.position(point))
    sec = second_fundamental_input(embedding, point)
    return -np.einsum("...mi,...mn,...nab->...abi", normals, g, sec)


def _twist_with_frame(embedding: Embedding, point: Array,
                      normal_frame_fn: Callable[[Array], Array], step: float) -> Array:
    """omega_a^{ij} for a given normal-frame field, by central differences."""
    point = np.asarray(point, dtype=float)
    d = embedding.worldsheet_dim
    k = embedding.codimension
    n_dim = embedding.background.dimension
    normals = normal_frame_fn(point)
    dn = fd_jacobian(lambda p: normal_frame_fn(p).reshape(p.shape[:-1] + (-1,)),
                     point, step)
    dn = dn.reshape(point.shape[:-1] + (n_dim, k, d))
    chris = embedding.background.christoffels_at(embedding.position(point))
    e = embedding.d_position(point)
    g = embedding.background.metric_at(embedding.position(point))
    cov = dn + np.einsum("...mrs,...ra,...si->...mia", chris, e, normals)
    omega = np.einsum("...nj,...nm,...mia->...aij", normals, g, cov)
    return 0.5 * (omega - np.swapaxes(omega, -1, -2))


def worldsheet_connection(embedding: Embedding, point: Array) -> Array:
    """Connection coefficients Gamma_ab^c of the induced metric, indexed [a, b, c]."""
    fr = frame(embedding, point)
    g = embedding.background.metric_at(embedding.position(point))
    sec = second_fundamental_input(embedding, point)
    return np.einsum("...cd,...nd,...nm,...mab->...abc",
                     fr.induced_metric_inverse, fr.tangents, g, sec)


def _riemann_from_connection(conn: Array, dconn: Array) -> Array:
    """Mixed Riemann R^a_{bcd} from Gamma[a,b,c]=Gamma_ab^c and its derivative [...,a,b,c,e]."""
    return (np.einsum("...dbac->...abcd", dconn)
            - np.einsum("...cbad->...abcd", dconn)
            + np.einsum("...cea,...dbe->...abcd", conn, conn)
            - np.einsum("...dea,...cbe->...abcd", conn, conn))


def worldsheet_riemann(embedding: Embedding, point: Array,
                       step: float = DEFAULT_STEP) -> Array:
    """Intrinsic Riemann tensor R_{abcd} of the worldsheet, fully lowered.

    Assembled by central differencing of the worldsheet connection; the
    standard antisymmetries hold to the FD tolerance.
    """
    point = np.asarray(point, dtype=float)
    conn = worldsheet_connection(embedding, point)
    d = embedding.worldsheet_dim
    dconn = fd_jacobian(
        lambda p: worldsheet_connection(embedding, p).reshape(p.shape[:-1] + (-1,)),
        point, step)
    dconn = dconn.reshape(point.shape[:-1] + (d, d, d, d))
    mixed = _riemann_from_connection(conn, dconn)
    gamma = frame(embedding, point).induced_metric
    return np.einsum("...ae,...ebcd->...abcd", gamma, mixed)


def _ambient_riemann_lowered(embedding: Embedding, x: Array) -> Array:
    r_up = embedding.background.riemann_at(x)
    g = embedding.background.metric_at(x)
    return np.einsum("...ml,...lnrs->...mnrs", g, r_up)


def _twist_curvature(omega_fn: Callable[[Array], Array], omega0: Array,
                     point: Array, step: float, dim: int, nfr: int) -> Array:
    """Omega_{ab ij} = d_b omega_a - d_a omega_b + [W_a, W_b] for the given field."""
    domega = fd_jacobian(lambda p: omega_fn(p).reshape(p.shape[:-1] + (-1,)),
                         point, step)
    domega = domega.reshape(point.shape[:-1] + (dim, nfr, nfr, dim))  # [a,i,j,b]
    comm = (np.einsum("...aik,...bkj->...abij", omega0, omega0)
            - np.einsum("...bik,...akj->...abij", omega0, omega0))
    return (np.einsum("...aijb->...abij", domega)
            - np.einsum("...bija->...abij", domega) + comm)


def _flat_max(t: Array, point: Array) -> Array:
    """Max-abs over all non-batch axes, zero when the slot space is empty."""
    lead = point.ndim - 1
    if t.size == 0 or any(s == 0 for s in t.shape[lead:]):
        return np.zeros(point.shape[:-1])
    return np.max(np.abs(t).reshape(t.shape[:lead] + (-1,)), axis=-1)


def worldsheet_integrability_residuals(
        embedding: Embedding, point: Array, step: float = DEFAULT_STEP,
        normal_frame_fn: Callable[[Array], Array] | None = None) -> WorldsheetResiduals:
    """Residual max-norms of the three structure-compatibility families.

    Returns Gauss-Codazzi, Codazzi-Mainardi (with the twist-covariant
    derivative), and Ricci residuals for the worldsheet in spacetime; all
    vanish at the FD rate for smooth embeddings.  For co-dimension one the
    Ricci family is vacuous and reported as None.
    """
    point = np.asarray(point, dtype=float)
    nf = normal_frame_fn if normal_frame_fn is not None else aligned_normal_frame_fn(embedding, point)
    d = embedding.worldsheet_dim
    k = embedding.codimension
    fr = frame(embedding, point)
    g_inv = fr.induced_metric_inverse
    e = fr.tangents
    normals = nf(point)
    x = embedding.position(point)
    r_amb = _ambient_riemann_lowered(embedding, x)

    conn = worldsheet_connection(embedding, point)
    kk = _extrinsic_with_frame(embedding, point, nf)
    omega = _twist_with_frame(embedding, point, nf, step)

    # Gauss family
    r_ws = worldsheet_riemann(embedding, point, step)
    lhs = np.einsum("...mnrs,...ma,...nb,...rc,...sd->...abcd", r_amb, e, e, e, e)
    kk_term = (np.einsum("...aci,...bdi->...abcd", kk, kk)
               - np.einsum("...adi,...bci->...abcd", kk, kk))
    res_gauss = np.max(np.abs(lhs - (r_ws - kk_term)),
                       axis=tuple(range(point.ndim - 1, point.ndim + 3)))

    # Codazzi family
    dk = fd_jacobian(lambda p: _extrinsic_with_frame(embedding, p, nf).reshape(p.shape[:-1] + (-1,)),
                     point, step)
    dk = dk.reshape(point.shape[:-1] + (d, d, k, d))  # [b,c,i,a]
    cov_k = (np.einsum("...bcia->...abci", dk)
             - np.einsum("...abd,...dci->...abci", conn, kk)
             - np.einsum("...acd,...bdi->...abci", conn, kk)
             - np.einsum("...aij,...bcj->...abci", omega, kk))
    cm = cov_k - np.einsum("...abci->...baci", cov_k)
    lhs_cm = np.einsum("...mnrs,...ma,...nb,...rc,...si->...abci", r_amb, e, e, e, normals)
    res_cm = np.max(np.linalg.norm(lhs_cm - cm, axis=-1),
                    axis=tuple(range(point.ndim - 1, point.ndim + 2)))

    # Ricci family (vacuous in co-dimension one)
    if k < 2:
        return WorldsheetResiduals(res_gauss, res_cm, None)
    omega_fn = lambda p: _twist_with_frame(embedding, p, nf, step)
    big_omega = _twist_curvature(omega_fn, omega, point, step, d, k)
    k_mixed = np.einsum("...cd,...bdj->...bcj", g_inv, kk)
    rhs_ricci = (big_omega
                 - np.einsum("...aci,...bcj->...abij", kk, k_mixed)
                 + np.einsum("...bci,...acj->...abij", kk, k_mixed))
    lhs_ricci = np.einsum("...mnrs,...ma,...nb,...ri,...sj->...abij",
                          r_amb, e, e, normals, normals)
    diff = lhs_ricci - rhs_ricci
    res_ricci = np.max(np.linalg.norm(diff.reshape(diff.shape[:-2] + (-1,)), axis=-1),
                       axis=tuple(range(point.ndim - 1, point.ndim + 1)))
    return WorldsheetResiduals(res_gauss, res_cm, res_ricci)


def _boundary_riemann(bnd: BoundaryEmbedding, point: Array, step: float) -> Array:
    """Intrinsic Riemann R_{ABCD} of the edge metric h, fully lowered."""
    point = np.asarray(point, dtype=float)
    db = bnd.boundary_dim

    def bch(u: Array) -> Array:
        eps = bnd.d_chi(u)
        bd = boundary_data(bnd, u)
        return _boundary_christoffels(bnd, u, eps, bd.boundary_metric_inverse)

    conn = bch(point)
    dconn = fd_jacobian(lambda u: bch(u).reshape(u.shape[:-1] + (-1,)), point, step)
    dconn = dconn.reshape(point.shape[:-1] + (db, db, db, db))
    mixed = _riemann_from_connection(conn, dconn)
    h = boundary_data(bnd, point).boundary_metric
    return np.einsum("...AE,...EBCD->...ABCD", h, mixed)


def boundary_integrability_residuals(bnd: BoundaryEmbedding, point: Array,
                                     step: float = DEFAULT_STEP) -> tuple[Array, Array]:
    """Gauss and Codazzi residuals for the edge embedded in the worldsheet.

    The edge is co-dimension one inside the worldsheet, so its Ricci family is
    vacuous and only two residuals exist.
    """
    point = np.asarray(point, dtype=float)
    bd = boundary_data(bnd, point)
    xi = bnd.chi(point)
    eps = bd.tangents_in_m
    eta = bd.normal_in_m
    k_ab = bd.edge_curvature
    db = bnd.boundary_dim

    r_ws = worldsheet_riemann(bnd.parent, xi, step)
    lhs_gauss = np.einsum("...abcd,...aA,...bB,...cC,...dD->...ABCD",
                          r_ws, eps, eps, eps, eps)
    rh = _boundary_riemann(bnd, point, step)
    kk_term = (np.einsum("...AC,...BD->...ABCD", k_ab, k_ab)
               - np.einsum("...AD,...BC->...ABCD", k_ab, k_ab))
    res_gauss = np.max(np.abs(lhs_gauss - (rh - kk_term)),
                       axis=tuple(range(point.ndim - 1, point.ndim + 3)))

    lhs_cod = np.einsum("...abcd,...aA,...bB,...cC,...d->...ABC", r_ws, eps, eps, eps, eta)
    dk = fd_jacobian(
        lambda u: boundary_data(bnd, u).edge_curvature.reshape(u.shape[:-1] + (-1,)),
        point, step)
    dk = dk.reshape(point.shape[:-1] + (db, db, db))  # [B,C,A]
    h_chris = _boundary_christoffels(bnd, point, eps, bd.boundary_metric_inverse)
    cov_k = (np.einsum("...BCA->...ABC", dk)
             - np.einsum("...ABD,...DC->...ABC", h_chris, k_ab)
             - np.einsum("...ACD,...BD->...ABC", h_chris, k_ab))
    rhs_cod = cov_k - np.einsum("...ABC->...BAC", cov_k)
    res_cod = np.max(np.abs(lhs_cod - rhs_cod),
                     axis=tuple(range(point.ndim - 1, point.ndim + 2)))
    return res_gauss, res_cod


def _aligned_adapted_field(bnd: BoundaryEmbedding, center: Array) -> Callable[[Array], Array]:
    center = np.asarray(center, dtype=float)
    ref = _adapted_normal_field(bnd, center)
    x_c = bnd.parent.position(bnd.chi(center))
    g_c = bnd.parent.background.metric_at(x_c)

    def field(u: Array) -> Array:
        raw = _adapted_normal_field(bnd, u)
        overlap = np.einsum("...mi,...mn,...nj->...ij", raw, g_c, ref)
        uu, _, vt = np.linalg.svd(overlap)
        rot = uu @ vt
        return np.einsum("...mi,...ij->...mj", raw, rot)

    return field


def _edge_extrinsic_with_frame(bnd: BoundaryEmbedding, u: Array,
                               adapted_fn: Callable[[Array], Array]) -> Array:
    xi = bnd.chi(u)
    x = bnd.parent.position(xi)
    g = bnd.parent.background.metric_at(x)
    chris = bnd.parent.background.christoffels_at(x)
    y1, y2 = _composed_derivatives(bnd, u)
    sec = y2 + np.einsum("...mrs,...rA,...sB->...mAB", chris, y1, y1)
    return -np.einsum("...mI,...mn,...nAB->...ABI", adapted_fn(u), g, sec)


def _edge_twist_with_frame(bnd: BoundaryEmbedding, u: Array,
                           adapted_fn: Callable[[Array], Array], step: float) -> Array:
    u = np.asarray(u, dtype=float)
    db = bnd.boundary_dim
    n_dim = bnd.parent.background.dimension
    adapted = adapted_fn(u)
    nfr = adapted.shape[-1]
    dn = fd_jacobian(lambda p: adapted_fn(p).reshape(p.shape[:-1] + (-1,)), u, step)
    dn = dn.reshape(u.shape[:-1] + (n_dim, nfr, db))
    xi = bnd.chi(u)
    x = bnd.parent.position(xi)
    chris = bnd.parent.background.christoffels_at(x)
    g = bnd.parent.background.metric_at(x)
    y1, _ = _composed_derivatives(bnd, u)
    cov = dn + np.einsum("...mrs,...rA,...sI->...mIA", chris, y1, adapted)
    omega = np.einsum("...nJ,...nm,...mIA->...AIJ", adapted, g, cov)
    return 0.5 * (omega - np.swapaxes(omega, -1, -2))


def direct_embedding_residuals(bnd: BoundaryEmbedding, point: Array,
                               step: float = DEFAULT_STEP) -> DirectEdgeResiduals:
    """Integrability residuals for the edge embedded directly in spacetime.

    Returns the Gauss-Codazzi, Codazzi-Mainardi, and Ricci residuals in the
    adapted basis {eta, n^i}, plus the two consistency residuals tying the
    adapted twist curvature to the worldsheet one:
    Omega_{AB ij} - eps eps Omega_{ab ij} and
    Omega_{AB i0} - eps^c_C [eps^a_A K_{ac i} k_B^C - eps^b_B K_{bc i} k_A^C].
    """
    point = np.asarray(point, dtype=float)
    bd = boundary_data(bnd, point)
    xi = bnd.chi(point)
    x = bnd.parent.position(xi)
    db = bnd.boundary_dim
    k_par = bnd.parent.codimension
    nfr = k_par + 1

    adapted_fn = _aligned_adapted_field(bnd, point)
    adapted = adapted_fn(point)
    y1, _ = _composed_derivatives(bnd, point)
    kk = _edge_extrinsic_with_frame(bnd, point, adapted_fn)
    omega = _edge_twist_with_frame(bnd, point, adapted_fn, step)
    h_chris = _boundary_christoffels(bnd, point, bd.tangents_in_m,
                                     bd.boundary_metric_inverse)
    r_amb = _ambient_riemann_lowered(bnd.parent, x)

    rh = _boundary_riemann(bnd, point, step)
    lhs_gauss = np.einsum("...mnrs,...mA,...nB,...rC,...sD->...ABCD",
                          r_amb, y1, y1, y1, y1)
    kk_term = (np.einsum("...ACI,...BDI->...ABCD", kk, kk)
               - np.einsum("...ADI,...BCI->...ABCD", kk, kk))
    res_gauss = np.max(np.abs(lhs_gauss - (rh - kk_term)),
                       axis=tuple(range(point.ndim - 1, point.ndim + 3)))

    dk = fd_jacobian(
        lambda u: _edge_extrinsic_with_frame(bnd, u, adapted_fn).reshape(u.shape[:-1] + (-1,)),
        point, step)
    dk = dk.reshape(point.shape[:-1] + (db, db, nfr, db))  # [B,C,I,A]
    cov_k = (np.einsum("...BCIA->...ABCI", dk)
             - np.einsum("...ABD,...DCI->...ABCI", h_chris, kk)
             - np.einsum("...ACD,...BDI->...ABCI", h_chris, kk)
             - np.einsum("...AIJ,...BCJ->...ABCI", omega, kk))
    cm = cov_k - np.einsum("...ABCI->...BACI", cov_k)
    lhs_cm = np.einsum("...mnrs,...mA,...nB,...rC,...sI->...ABCI",
                       r_amb, y1, y1, y1, adapted)
    res_cm = np.max(np.linalg.norm(lhs_cm - cm, axis=-1),
                    axis=tuple(range(point.ndim - 1, point.ndim + 2)))

    # adapted Ricci family and the twist-consistency pair
    omega_fn = lambda u: _edge_twist_with_frame(bnd, u, adapted_fn, step)
    big_omega = _twist_curvature(omega_fn, omega, point, step, db, nfr)
    h_inv = bd.boundary_metric_inverse
    k_mixed = np.einsum("...CD,...BDJ->...BCJ", h_inv, kk)
    rhs_ricci = (big_omega
                 - np.einsum("...ACI,...BCJ->...ABIJ", kk, k_mixed)
                 + np.einsum("...BCI,...ACJ->...ABIJ", kk, k_mixed))
    lhs_ricci = np.einsum("...mnrs,...mA,...nB,...rI,...sJ->...ABIJ",
                          r_amb, y1, y1, adapted, adapted)
    diff = lhs_ricci - rhs_ricci
    if nfr >= 2:
        res_ricci = np.max(np.linalg.norm(diff.reshape(diff.shape[:-2] + (-1,)), axis=-1),
                           axis=tuple(range(point.ndim - 1, point.ndim + 1)))
    else:
        res_ricci = None

    # twist inheritance: the tangential block matches the projected worldsheet
    # curvature, the mixed i0 block the curvature-edge cross terms
    if k_par >= 2:
        ws_nf = aligned_normal_frame_fn(bnd.parent, xi)
        ws_omega_fn = lambda p: _twist_with_frame(bnd.parent, p, ws_nf, step)
        ws_big = _twist_curvature(ws_omega_fn, ws_omega_fn(xi), xi, step,
                                  bnd.parent.worldsheet_dim, k_par)
        projected = np.einsum("...aA,...bB,...abij->...ABij", bd.tangents_in_m,
                              bd.tangents_in_m, ws_big)
    else:
        ws_nf = aligned_normal_frame_fn(bnd.parent, xi)
        projected = np.zeros(point.shape[:-1] + (db, db, k_par, k_par))
    res_twist_t = _flat_max(big_omega[..., 1:, 1:] - projected, point)

    kk_ws = _extrinsic_with_frame(bnd.parent, xi, ws_nf)
    k_up = np.einsum("...BD,...DC->...BC", bd.edge_curvature, h_inv)  # k_B^C
    cross = np.einsum("...cC,...aA,...aci,...BC->...ABi",
                      bd.tangents_in_m, bd.tangents_in_m, kk_ws, k_up)
    rhs_mixed = cross - np.swapaxes(cross, -3, -2)
    res_twist_m = _flat_max(big_omega[..., 1:, 0] - rhs_mixed, point)

    return DirectEdgeResiduals(res_gauss, res_cm, res_ricci, res_twist_t, res_twist_m)


def curvature_tensors(bnd: BoundaryEmbedding, point: Array,
                      step: float = DEFAULT_STEP) -> CurvatureTensors:
    """Assemble all curvature tensors entering the residuals at one edge point."""
    point = np.asarray(point, dtype=float)
    xi = bnd.chi(point)
    x = bnd.parent.position(xi)
    k_par = bnd.parent.codimension
    ws_riem = worldsheet_riemann(bnd.parent, xi, step)
    b_riem = _boundary_riemann(bnd, point, step)
    if k_par >= 2:
        nf = aligned_normal_frame_fn(bnd.parent, xi)
        omega_fn = lambda p: _twist_with_frame(bnd.parent, p, nf, step)
        twist_curv = _twist_curvature(omega_fn, omega_fn(xi), xi, step,
                                      bnd.parent.worldsheet_dim, k_par)
    else:
        twist_curv = None
    adapted_fn = _aligned_adapted_field(bnd, point)
    omega_fn_b = lambda u: _edge_twist_with_frame(bnd, u, adapted_fn, step)
    adapted_curv = _twist_curvature(omega_fn_b, omega_fn_b(point), point, step,
                                    bnd.boundary_dim, k_par + 1)
    return CurvatureTensors(
        ambient_riemann=_ambient_riemann_lowered(bnd.parent, x),
        worldsheet_riemann=ws_riem,
        boundary_riemann=b_riem,
        twist_curvature=twist_curv,
        adapted_twist_curvature=adapted_curv,
    )
