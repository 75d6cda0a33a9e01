"""Action functionals and first variations for worldsheets with loaded edges.

Quadrature is a tensor-product midpoint rule.  The last worldsheet coordinate
may have limits given by edge graphs (boundaries are graphs over the leading
coordinates), so domains bounded by moving edges integrate exactly over the
region the edges cut out.  Sums are plain numpy reductions (pairwise), so
results are reproducible across runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .background import LORENTZIAN
from .boundary import BoundaryAttachment, BoundaryEmbedding, boundary_data
from .errors import DegenerateMetric
from .geometry import Embedding, fd_jacobian, frame, second_fundamental_input
from .integrability import aligned_normal_frame_fn

Array = np.ndarray


@dataclass(frozen=True)
class GridAxis:
    """Midpoint-rule axis: ``points`` cells between ``lo`` and ``hi``.

    Limits of the last axis may be callables of the leading-coordinate mesh
    (shape (..., D-1) -> (...,)); leading axes need constant limits.
    """

    points: int
    lo: float | Callable[[Array], Array]
    hi: float | Callable[[Array], Array]


@dataclass(frozen=True)
class ActionConfig:
    """Tensions and quadrature grid for the action functionals."""

    mu0: float
    mub: float
    grid: tuple[GridAxis, ...]

    def __post_init__(self) -> None:
        if self.mu0 < 0 or self.mub < 0:
            raise ValueError("tensions must be non-negative")
        for ax in self.grid:
            if ax.points < 8:
                raise ValueError("quadrature needs at least 8 points per dimension")
        for ax in self.grid[:-1]:
            if callable(ax.lo) or callable(ax.hi):
                raise ValueError("only the last axis may have edge-dependent limits")


def _leading_mesh(grid: Sequence[GridAxis]) -> tuple[Array, float]:
    """Midpoint mesh (..., D-1) of the leading axes and the product cell weight."""
    mids, weight = [], 1.0
    for ax in grid[:-1]:
        width = (ax.hi - ax.lo) / ax.points
        mids.append(ax.lo + width * (np.arange(ax.points) + 0.5))
        weight *= width
    if not mids:
        return np.zeros((1, 0)), 1.0
    mesh = np.meshgrid(*mids, indexing="ij")
    return np.stack(mesh, axis=-1), weight


def _bulk_grid(grid: Sequence[GridAxis]) -> tuple[Array, Array]:
    """Quadrature points (..., D) and weights (...,), honoring edge limits."""
    u_mesh, u_weight = _leading_mesh(grid)
    last = grid[-1]
    lo = last.lo(u_mesh) if callable(last.lo) else np.full(u_mesh.shape[:-1], float(last.lo))
    hi = last.hi(u_mesh) if callable(last.hi) else np.full(u_mesh.shape[:-1], float(last.hi))
    width = (hi - lo) / last.points
    offs = np.arange(last.points) + 0.5
    sigma = lo[..., None] + width[..., None] * offs
    pts = np.concatenate(
        [np.broadcast_to(u_mesh[..., None, :], sigma.shape + u_mesh.shape[-1:]),
         sigma[..., None]], axis=-1)
    wts = np.broadcast_to(width[..., None], sigma.shape) * u_weight
    return pts.reshape(-1, len(grid)), wts.reshape(-1)


def _boundary_grid(grid: Sequence[GridAxis]) -> tuple[Array, float]:
    u_mesh, u_weight = _leading_mesh(grid)
    db = u_mesh.shape[-1]
    return u_mesh.reshape(-1, db), u_weight


def _volume_density(embedding: Embedding, pts: Array) -> Array:
    e = embedding.d_position(pts)
    g = embedding.background.metric_at(embedding.position(pts))
    gamma = np.einsum("...ma,...mn,...nb->...ab", e, g, e)
    det = np.linalg.det(gamma)
    if embedding.background.signature == LORENTZIAN:
        det = -det
    if np.any(det <= 0):
        raise DegenerateMetric("degenerate worldsheet volume element inside the domain")
    return np.sqrt(det)


def dng_action(embedding: Embedding, config: ActionConfig) -> float:
    """Worldsheet-volume action: -mu0 times the quadrature of the volume element."""
    pts, wts = _bulk_grid(config.grid)
    return float(-config.mu0 * np.sum(_volume_density(embedding, pts) * wts))


def _edge_density_from_curve(embedding: Embedding, chi_fn: Callable[[Array], Array],
                             u: Array, fd_step: float) -> Array:
    y1 = fd_jacobian(lambda uu: embedding.position(chi_fn(uu)), u, fd_step)
    x = embedding.position(chi_fn(u))
    g = embedding.background.metric_at(x)
    h = np.einsum("...mA,...mn,...nB->...AB", y1, g, y1)
    det = np.linalg.det(h)
    if embedding.background.signature == LORENTZIAN:
        det = -det
    if np.any(det <= 0):
        raise DegenerateMetric("degenerate edge volume element")
    return np.sqrt(det)


def edge_action(bnd: BoundaryEmbedding, config: ActionConfig) -> float:
    """Edge-volume action: -mub times the quadrature of the edge volume element."""
    u, uw = _boundary_grid(config.grid)
    bd = boundary_data(bnd, u)
    det = np.linalg.det(bd.boundary_metric)
    if bnd.parent.background.signature == LORENTZIAN:
        det = -det
    if np.any(det <= 0):
        raise DegenerateMetric("degenerate edge volume element")
    return float(-config.mub * np.sum(np.sqrt(det) * uw))


def _smooth_ramp(x: Array) -> Array:
    """C-infinity ramp: 0 for x <= 0, 1 for x >= 1, flat to all orders at both ends."""
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        lo = np.where(x > 0.0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
        hi = np.where(x < 1.0, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
    return lo / (lo + hi)


@dataclass(frozen=True)
class DeformationField:
    """Deformation of the worldsheet and its edges, windowed at the temporal caps.

    ``tangential_fn`` and ``normal_fn`` give the frame components of the bulk
    displacement; ``boundary_normal_fns``/``boundary_tangential_fns`` the edge
    displacement amplitudes, one per attached edge (a single callable is
    reused for every edge).  When ``time_extent`` is set, every component is
    multiplied by a smooth window that vanishes on the outer
    ``taper_fraction`` of the first coordinate, so the variational identities
    hold without manual cap handling.
    """

    tangential_fn: Callable[[Array], Array] | None = None
    normal_fn: Callable[[Array], Array] | None = None
    boundary_normal_fns: object = None
    boundary_tangential_fns: object = None
    time_extent: tuple[float, float] | None = None
    taper_fraction: float = 0.25

    def _window(self, t: Array) -> Array:
        # smooth bump ramp, flat to all orders at both ends of the taper zone:
        # a cosine ramp leaves O((pi/f)^2) second derivatives at the caps, which
        # the midpoint rule turns into a large h^2 error floor in FD variations
        if self.time_extent is None:
            return np.ones_like(t)
        t0, t1 = self.time_extent
        s = np.clip((t - t0) / (t1 - t0), 0.0, 1.0)
        f = self.taper_fraction
        return _smooth_ramp(s / f) * _smooth_ramp((1.0 - s) / f)

    def tangential(self, xi: Array, dim: int) -> Array:
        xi = np.asarray(xi, dtype=float)
        if self.tangential_fn is None:
            return np.zeros(xi.shape[:-1] + (dim,))
        val = np.asarray(self.tangential_fn(xi), dtype=float)
        return val * self._window(xi[..., 0])[..., None]

    def normal(self, xi: Array, codim: int) -> Array:
        xi = np.asarray(xi, dtype=float)
        if self.normal_fn is None:
            return np.zeros(xi.shape[:-1] + (codim,))
        val = np.asarray(self.normal_fn(xi), dtype=float)
        return val * self._window(xi[..., 0])[..., None]

    def _per_edge(self, fns: object, index: int) -> Callable | None:
        if fns is None:
            return None
        if callable(fns):
            return fns
        return fns[index] if index < len(fns) else None

    def boundary_normal(self, index: int, u: Array) -> Array:
        u = np.asarray(u, dtype=float)
        fn = self._per_edge(self.boundary_normal_fns, index)
        if fn is None:
            return np.zeros(u.shape[:-1])
        return np.asarray(fn(u), dtype=float) * self._window(u[..., 0])

    def boundary_tangential(self, index: int, u: Array, db: int) -> Array:
        u = np.asarray(u, dtype=float)
        fn = self._per_edge(self.boundary_tangential_fns, index)
        if fn is None:
            return np.zeros(u.shape[:-1] + (db,))
        return np.asarray(fn(u), dtype=float) * self._window(u[..., 0])[..., None]

    def has_edge_displacement(self) -> bool:
        return self.boundary_normal_fns is not None or self.boundary_tangential_fns is not None


def metric_variation(embedding: Embedding, point: Array,
                     deformation: DeformationField) -> Array:
    """First-order induced-metric change 2 K_ab^i Phi_i + grad_a Phi_b + grad_b Phi_a."""
    point = np.asarray(point, dtype=float)
    d = embedding.worldsheet_dim
    k = embedding.codimension
    fr = frame(embedding, point)
    g = embedding.background.metric_at(embedding.position(point))
    sec = second_fundamental_input(embedding, point)
    kk = -np.einsum("...mi,...mn,...nab->...abi", fr.normals, g, sec)
    conn = np.einsum("...cd,...nd,...nm,...mab->...abc",
                     fr.induced_metric_inverse, fr.tangents, g, sec)
    phi_i = deformation.normal(point, k)

    def phi_low(p):
        gam = frame(embedding, p).induced_metric
        return np.einsum("...ab,...b->...a", gam, deformation.tangential(p, d))

    dphi = fd_jacobian(phi_low, point, embedding.fd_step)  # [b, a]
    cov = np.einsum("...ba->...ab", dphi) - np.einsum(
        "...abc,...c->...ab", conn, phi_low(point))
    return (2.0 * np.einsum("...abi,...i->...ab", kk, phi_i)
            + cov + np.swapaxes(cov, -1, -2))


def _domain_frame_fn(embedding: Embedding, grid: tuple[GridAxis, ...]):
    """One continuous normal-frame field for the whole quadrature domain.

    The deterministic pointwise gauge may flip sign across interior loci;
    deformations decomposed on a discontinuous frame would deform the sheet
    discontinuously.  Aligning every frame to the one at the domain center
    gives a single smooth gauge shared by the analytic and FD paths.
    """
    u_mesh, _ = _leading_mesh(grid)
    mid_idx = tuple(s // 2 for s in u_mesh.shape[:-1])
    u_mid = u_mesh[mid_idx]
    last = grid[-1]
    lo = last.lo(u_mid) if callable(last.lo) else float(last.lo)
    hi = last.hi(u_mid) if callable(last.hi) else float(last.hi)
    center = np.concatenate([np.atleast_1d(u_mid), [0.5 * (lo + hi)]])
    return aligned_normal_frame_fn(embedding, center)


def _normalize_edges(edges) -> tuple[BoundaryAttachment, ...]:
    if edges is None:
        return ()
    if isinstance(edges, BoundaryAttachment):
        return (edges,)
    if isinstance(edges, BoundaryEmbedding):
        return (BoundaryAttachment(edges, "upper"),)
    return tuple(e if isinstance(e, BoundaryAttachment) else BoundaryAttachment(e, "upper")
                 for e in edges)


def first_variation_analytic(embedding: Embedding, edges, config: ActionConfig,
                             deformation: DeformationField) -> float:
    """First variation of the total action from the distilled boundary formula.

    delta S = -mu0 Int sqrt(-gamma) K^i Phi_i
              - Sum_edges Oint sqrt(-h) [ mu0 eta_a Phi^a
                                          + mub (H^{ab} K_ab^i Phi_i + k eta_a Phi^a)
                                          + (mu0 + mub k) Psi ],
    with the pure-divergence edge reparametrization term dropped (smooth,
    closed, or cap-windowed edges).
    """
    edges = _normalize_edges(edges)
    d = embedding.worldsheet_dim
    k_codim = embedding.codimension
    nf = _domain_frame_fn(embedding, config.grid)

    pts, wts = _bulk_grid(config.grid)
    fr = frame(embedding, pts)
    g = embedding.background.metric_at(embedding.position(pts))
    sec = second_fundamental_input(embedding, pts)
    kk = -np.einsum("...mi,...mn,...nab->...abi", nf(pts), g, sec)
    traces = np.einsum("...ab,...abi->...i", fr.induced_metric_inverse, kk)
    phi_i = deformation.normal(pts, k_codim)
    dens = _volume_density(embedding, pts)
    total = -config.mu0 * np.sum(wts * dens * np.einsum("...i,...i->...", traces, phi_i))

    for index, att in enumerate(edges):
        bnd = att.boundary
        u, uw = _boundary_grid(config.grid)
        bd = boundary_data(bnd, u)
        det = np.linalg.det(bd.boundary_metric)
        if embedding.background.signature == LORENTZIAN:
            det = -det
        dens_b = np.sqrt(det)
        xi = bnd.chi(u)
        fr_b = frame(embedding, xi)
        g_b = embedding.background.metric_at(embedding.position(xi))
        sec_b = second_fundamental_input(embedding, xi)
        kk_b = -np.einsum("...mi,...mn,...nab->...abi", nf(xi), g_b, sec_b)
        hk = np.einsum("...ab,...abi->...i", bd.projector, kk_b)
        phi_t = deformation.tangential(xi, d)
        phi_n = deformation.normal(xi, k_codim)
        eta_phi = np.einsum("...a,...ab,...b->...", bd.normal_in_m,
                            fr_b.induced_metric, phi_t)
        psi = deformation.boundary_normal(index, u)
        integrand = (config.mu0 * eta_phi
                     + config.mub * (np.einsum("...i,...i->...", hk, phi_n)
                                     + bd.edge_trace * eta_phi)
                     + (config.mu0 + config.mub * bd.edge_trace) * psi)
        total -= np.sum(uw * dens_b * integrand)
    return float(total)


def _deformed_embedding(embedding: Embedding, deformation: DeformationField,
                        eps: float, frame_fn) -> Embedding:
    d = embedding.worldsheet_dim
    k = embedding.codimension

    def pos(xi):
        tangents = embedding.d_position(xi)
        delta = (np.einsum("...ma,...a->...m", tangents,
                           deformation.tangential(xi, d))
                 + np.einsum("...mi,...i->...m", frame_fn(xi),
                             deformation.normal(xi, k)))
        return embedding.position(xi) + eps * delta

    return Embedding(d, embedding.background, pos, fd_step=embedding.fd_step)


def _deformed_chi(bnd: BoundaryEmbedding, deformation: DeformationField,
                  index: int, eps: float) -> Callable[[Array], Array]:
    db = bnd.boundary_dim

    def chi(u):
        bd = boundary_data(bnd, u)
        delta = (deformation.boundary_normal(index, u)[..., None] * bd.normal_in_m
                 + np.einsum("...aA,...A->...a", bd.tangents_in_m,
                             deformation.boundary_tangential(index, u, db)))
        return bnd.chi(u) + eps * delta

    return chi


def _inverted_graph(chi_fn: Callable[[Array], Array]) -> Callable[[Array], Array]:
    """Last-coordinate limit as a function of the leading coordinates.

    The displaced edge is still near-identity in its leading components, so a
    few Picard sweeps recover the parameter u* with chi(u*) over the target.
    """

    def limit(target):
        u = np.asarray(target, dtype=float).copy()
        for _ in range(8):
            u = u - (chi_fn(u)[..., :-1] - target)
        return chi_fn(u)[..., -1]

    return limit


def _deformed_grid(grid: tuple[GridAxis, ...], edges: tuple[BoundaryAttachment, ...],
                   chis: list[Callable[[Array], Array]]) -> tuple[GridAxis, ...]:
    last = grid[-1]
    lo, hi = last.lo, last.hi
    for att, chi in zip(edges, chis):
        if att.side == "lower":
            lo = _inverted_graph(chi)
        else:
            hi = _inverted_graph(chi)
    return grid[:-1] + (GridAxis(last.points, lo, hi),)


def first_variation_fd(embedding: Embedding, edges, config: ActionConfig,
                       deformation: DeformationField, epsilon: float) -> float:
    """Centered finite-difference variation [S(+eps) - S(-eps)] / (2 eps).

    The worldsheet and the attached edges are displaced together; the
    quadrature domain follows the displaced edge graphs exactly.  Matches
    :func:`first_variation_analytic` to O(eps^2) plus quadrature error.
    """
    edges = _normalize_edges(edges)
    nf = _domain_frame_fn(embedding, config.grid)

    def total_action(eps: float) -> float:
        emb_eps = _deformed_embedding(embedding, deformation, eps, nf)
        chis = [_deformed_chi(att.boundary, deformation, i, eps)
                for i, att in enumerate(edges)]
        grid = _deformed_grid(config.grid, edges, chis) if (
            edges and deformation.has_edge_displacement()) else config.grid
        cfg = ActionConfig(config.mu0, config.mub, grid)
        s = dng_action(emb_eps, cfg)
        u, uw = _boundary_grid(config.grid)
        for chi in chis:
            dens = _edge_density_from_curve(emb_eps, chi, u, embedding.fd_step)
            s += float(-config.mub * np.sum(dens * uw))
        return s

    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return (total_action(epsilon) - total_action(-epsilon)) / (2.0 * epsilon)
