"""Intrinsic and extrinsic geometry of parametric worldsheet embeddings.

All operations are pure functions of immutable inputs and broadcast over
leading batch axes of the evaluation points: a point argument of shape
(..., D) produces outputs with matching leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .background import LORENTZIAN, BackgroundMetric
from .errors import DegenerateImmersion, DegenerateMetric, GaugeFailure

Array = np.ndarray

DEFAULT_FD_STEP = 1e-5

# |det gamma| below 1e-12 * scale^(2D) is treated as degenerate rather than
# inverted into garbage.
DEGENERACY_TOL = 1e-12


def _step_scale(point: Array) -> Array:
    """Per-point step scale: unit floor so steps never collapse near the origin."""
    mag = np.max(np.abs(point), axis=-1, keepdims=True)
    return np.maximum(1.0, mag)


def fd_jacobian(fn: Callable[[Array], Array], point: Array, step: float) -> Array:
    """Central-difference Jacobian of fn: (..., D) -> (..., N) as (..., N, D)."""
    point = np.asarray(point, dtype=float)
    d = point.shape[-1]
    h = step * _step_scale(point)
    cols = []
    for a in range(d):
        e = np.zeros(d)
        e[a] = 1.0
        cols.append((fn(point + h * e) - fn(point - h * e)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def fd_hessian(fn: Callable[[Array], Array], point: Array, step: float) -> Array:
    """Central-difference Hessian of fn: (..., D) -> (..., N) as (..., N, D, D)."""
    point = np.asarray(point, dtype=float)
    d = point.shape[-1]
    h = step * _step_scale(point)
    f0 = fn(point)
    n = f0.shape[-1]
    out = np.zeros(point.shape[:-1] + (n, d, d))
    eye = np.eye(d)
    h2 = (h * h)[..., 0]
    for a in range(d):
        ea = eye[a]
        fp = fn(point + h * ea)
        fm = fn(point - h * ea)
        out[..., :, a, a] = (fp - 2.0 * f0 + fm) / h2[..., None]
    for a in range(d):
        for b in range(a + 1, d):
            ea, eb = eye[a], eye[b]
            fpp = fn(point + h * (ea + eb))
            fmm = fn(point - h * (ea + eb))
            fpm = fn(point + h * (ea - eb))
            fmp = fn(point - h * (ea - eb))
            mixed = (fpp + fmm - fpm - fmp) / (4.0 * h2[..., None])
            out[..., :, a, b] = mixed
            out[..., :, b, a] = mixed
    return out


@dataclass(frozen=True)
class Embedding:
    """Parametric map X: (..., D) worldsheet coordinates -> (..., N) background points.

    Optional derivative callbacks return the tangent map (..., N, D) and the
    coordinate second derivatives (..., N, D, D); when absent they fall back to
    central finite differences with step ``fd_step`` scaled by the local
    coordinate magnitude.  Callables must broadcast over leading batch axes.
    """

    worldsheet_dim: int
    background: BackgroundMetric
    position_fn: Callable[[Array], Array]
    d_position_fn: Callable[[Array], Array] | None = None
    dd_position_fn: Callable[[Array], Array] | None = None
    fd_step: float = DEFAULT_FD_STEP

    @property
    def codimension(self) -> int:
        return self.background.dimension - self.worldsheet_dim

    def position(self, point: Array) -> Array:
        return np.asarray(self.position_fn(np.asarray(point, dtype=float)), dtype=float)

    def d_position(self, point: Array) -> Array:
        if self.d_position_fn is not None:
            return np.asarray(self.d_position_fn(np.asarray(point, dtype=float)), dtype=float)
        return fd_jacobian(self.position, point, self.fd_step)

    def dd_position(self, point: Array) -> Array:
        if self.dd_position_fn is not None:
            return np.asarray(self.dd_position_fn(np.asarray(point, dtype=float)), dtype=float)
        return fd_hessian(self.position, point, self.fd_step)


@dataclass(frozen=True)
class Frame:
    """Adapted basis at worldsheet points: tangents e_a, unit normals n_i, metric."""

    tangents: Array            # (..., N, D)
    normals: Array             # (..., N, K)
    induced_metric: Array      # (..., D, D)
    induced_metric_inverse: Array  # (..., D, D)


@dataclass(frozen=True)
class CurvatureData:
    """Extrinsic curvature K_ab^i, its traces, twist potential, and connection.

    ``extrinsic`` is indexed [a, b, i], ``twist`` [a, i, j] (antisymmetric in
    i, j), and ``worldsheet_connection`` [a, b, c] with c the upper index of
    Gamma_ab^c.  The twist is reported in the deterministic normal gauge of
    :func:`normal_frame` and is gauge-dependent.
    """

    extrinsic: Array               # (..., D, D, K)
    traces: Array                  # (..., K)
    twist: Array                   # (..., D, K, K)
    worldsheet_connection: Array   # (..., D, D, D)


def tangent_basis(embedding: Embedding, point: Array) -> Array:
    """Tangent vectors e_a = dX/dxi^a as columns of an (..., N, D) matrix."""
    e = embedding.d_position(point)
    s = np.linalg.svd(e, compute_uv=False)
    smax = s[..., 0]
    smin = s[..., -1]
    if np.any(smin <= 1e-10 * smax):
        raise DegenerateImmersion(
            "tangent map is rank-deficient (bad parametrization or coincident points)"
        )
    return e


def induced_metric(embedding: Embedding, point: Array) -> Array:
    """Pullback metric gamma_ab = g(e_a, e_b), validated for signature and rank."""
    e = tangent_basis(embedding, point)
    g = embedding.background.metric_at(embedding.position(point))
    gamma = np.einsum("...ma,...mn,...nb->...ab", e, g, e)
    gamma = 0.5 * (gamma + np.swapaxes(gamma, -1, -2))
    _check_metric(embedding, gamma, e)
    return gamma


def _check_metric(embedding: Embedding, gamma: Array, tangents: Array) -> None:
    d = embedding.worldsheet_dim
    det = np.linalg.det(gamma)
    scale = np.linalg.svd(tangents, compute_uv=False)[..., 0]
    if np.any(np.abs(det) < DEGENERACY_TOL * scale ** (2 * d)):
        raise DegenerateMetric("induced metric is singular (null or collapsed point)")
    eigs = np.linalg.eigvalsh(gamma)
    negatives = np.sum(eigs < 0, axis=-1)
    if embedding.background.signature == LORENTZIAN:
        if np.any(negatives != 1):
            raise DegenerateMetric(
                "worldsheet is not timelike: induced metric lacks (-,+,...,+) signature"
            )
    else:
        if np.any(negatives != 0):
            raise DegenerateMetric("induced metric is not positive definite")


def _first_significant_sign(v: Array) -> Array:
    """Sign of the first component whose magnitude is significant, per point."""
    mags = np.abs(v)
    thresh = 1e-8 * np.max(mags, axis=-1, keepdims=True)
    significant = mags > thresh
    idx = np.argmax(significant, axis=-1)
    lead = np.take_along_axis(v, idx[..., None], axis=-1)[..., 0]
    sign = np.sign(lead)
    return np.where(sign == 0, 1.0, sign)


def _gram_schmidt_normals(g: Array, tangents: Array, gamma_inv: Array,
                          count_needed: int, axis_order: np.ndarray) -> tuple[Array, Array]:
    """One sweep of metric Gram-Schmidt over the given coordinate-axis order.

    Returns (normals, found) where unfilled slots are zero columns and
    ``found`` counts accepted normals per point.
    """
    batch = tangents.shape[:-2]
    n = tangents.shape[-2]
    normals = np.zeros(batch + (n, count_needed))
    found = np.zeros(batch, dtype=int)
    ge = np.einsum("...mn,...na->...ma", g, tangents)  # g e_a, lowered tangents
    for mu in axis_order:
        v = np.zeros(batch + (n,))
        v[..., mu] = 1.0
        # remove the tangential part, then accepted normals, twice for stability
        for _ in range(2):
            coeff = np.einsum("...ma,...m->...a", ge, v)
            v = v - np.einsum("...na,...ab,...b->...n", tangents, gamma_inv, coeff)
            proj = np.einsum("...nk,...nm,...m->...k", normals, g, v)
            v = v - np.einsum("...nk,...k->...n", normals, proj)
        norm2 = np.einsum("...m,...mn,...n->...", v, g, v)
        euclid2 = np.sum(v * v, axis=-1)
        ok = (found < count_needed) & (euclid2 > 1e-20) & (norm2 > 1e-10 * euclid2)
        if not np.any(ok):
            continue
        vhat = np.where(ok[..., None], v / np.sqrt(np.where(ok, norm2, 1.0))[..., None], 0.0)
        vhat = vhat * _first_significant_sign(vhat)[..., None]
        flat_norm = normals.reshape(-1, n, count_needed)
        flat_v = vhat.reshape(-1, n)
        flat_found = found.reshape(-1)
        sel = np.flatnonzero(ok.reshape(-1))
        flat_norm[sel, :, flat_found[sel]] = flat_v[sel]
        found = flat_found.reshape(batch)
        normals = flat_norm.reshape(batch + (n, count_needed))
        found = found + ok.astype(int)
    return normals, found


def normal_frame(embedding: Embedding, point: Array) -> Array:
    """Gauge-fixed orthonormal normals as columns of an (..., N, N-D) matrix.

    The O(N-D) gauge is fixed deterministically: Gram-Schmidt over the
    background coordinate axes in ascending order (reseeded with rolled orders
    if that degenerates), with each normal's sign chosen so its first
    significant component is positive.
    """
    k = embedding.codimension
    point = np.asarray(point, dtype=float)
    e = tangent_basis(embedding, point)
    g = embedding.background.metric_at(embedding.position(point))
    gamma = np.einsum("...ma,...mn,...nb->...ab", e, g, e)
    _check_metric(embedding, gamma, e)
    gamma_inv = np.linalg.inv(gamma)
    n = embedding.background.dimension
    if k == 0:
        return np.zeros(point.shape[:-1] + (n, 0))
    normals, found = _gram_schmidt_normals(g, e, gamma_inv, k, np.arange(n))
    for shift in range(1, n):
        if np.all(found == k):
            break
        retry, refound = _gram_schmidt_normals(g, e, gamma_inv, k, np.roll(np.arange(n), shift))
        missing = found < k
        normals = np.where(missing[..., None, None], retry, normals)
        found = np.where(missing, refound, found)
    if np.any(found < k):
        raise GaugeFailure("could not complete the normal frame from coordinate seeds")
    return normals


def frame(embedding: Embedding, point: Array) -> Frame:
    """Full adapted frame (tangents, normals, induced metric and its inverse)."""
    e = tangent_basis(embedding, point)
    g = embedding.background.metric_at(embedding.position(point))
    gamma = np.einsum("...ma,...mn,...nb->...ab", e, g, e)
    gamma = 0.5 * (gamma + np.swapaxes(gamma, -1, -2))
    _check_metric(embedding, gamma, e)
    return Frame(
        tangents=e,
        normals=normal_frame(embedding, point),
        induced_metric=gamma,
        induced_metric_inverse=np.linalg.inv(gamma),
    )


def second_fundamental_input(embedding: Embedding, point: Array) -> Array:
    """Covariant second derivative D_a e_b^mu = X_{,ab} + Gamma X_{,a} X_{,b}."""
    x = embedding.position(point)
    e = embedding.d_position(point)
    dd = embedding.dd_position(point)
    chris = embedding.background.christoffels_at(x)
    return dd + np.einsum("...mrs,...ra,...sb->...mab", chris, e, e)


def extrinsic_curvature(embedding: Embedding, point: Array, *,
                        normal_frame_fn: Callable[[Array], Array] | None = None,
                        fd_step: float | None = None) -> CurvatureData:
    """Extrinsic curvature K_ab^i, traces, twist potential, and worldsheet connection.

    ``normal_frame_fn`` overrides the normal-frame field (used for alternative
    gauges); it must broadcast like :func:`normal_frame`.  The twist is
    obtained by central differencing of that field with step ``fd_step``.
    """
    point = np.asarray(point, dtype=float)
    nf = normal_frame_fn if normal_frame_fn is not None else (
        lambda p: normal_frame(embedding, p))
    fr = frame(embedding, point)
    normals = np.asarray(nf(point), dtype=float)
    g = embedding.background.metric_at(embedding.position(point))
    sec = second_fundamental_input(embedding, point)
    extrinsic = -np.einsum("...mi,...mn,...nab->...abi", normals, g, sec)
    traces = np.einsum("...ab,...abi->...i", fr.induced_metric_inverse, extrinsic)
    connection = np.einsum(
        "...cd,...nd,...nm,...mab->...abc",
        fr.induced_metric_inverse, fr.tangents, g, sec)
    twist = _twist_potential(embedding, point, nf, normals, g,
                             fd_step if fd_step is not None else embedding.fd_step)
    return CurvatureData(extrinsic=extrinsic, traces=traces, twist=twist,
                         worldsheet_connection=connection)


def _twist_potential(embedding: Embedding, point: Array,
                     normal_frame_fn: Callable[[Array], Array],
                     normals: Array, g: Array, step: float) -> Array:
    d = embedding.worldsheet_dim
    k = embedding.codimension
    if k <= 1:
        return np.zeros(point.shape[:-1] + (d, k, k))
    dn = fd_jacobian(lambda p: normal_frame_fn(p).reshape(p.shape[:-1] + (-1,)),
                     point, step)
    n_dim = embedding.background.dimension
    dn = dn.reshape(point.shape[:-1] + (n_dim, k, d))  # [mu, i, a]
    chris = embedding.background.christoffels_at(embedding.position(point))
    e = embedding.d_position(point)
    cov = dn + np.einsum("...mrs,...ra,...si->...mia", chris, e, normals)
    # omega_a^{ij} = g(n^j, D_a n^i)
    omega = np.einsum("...nj,...nm,...mia->...aij", normals, g, cov)
    return 0.5 * (omega - np.swapaxes(omega, -1, -2))


def gauss_weingarten_residual(embedding: Embedding, point: Array,
                              fd_step: float = 1e-4) -> tuple[Array, Array]:
    """Residuals of the tangent/normal structure equations, finite-differenced.

    Returns per-point max norms of
    ``D_a e_b - Gamma_ab^c e_c + K_ab^i n_i`` and
    ``D_a n^i - K_a^{b i} e_b - omega_a^{ij} n_j``; both vanish at the FD
    convergence rate for smooth embeddings.  Raises GaugeFailure if the
    deterministic normal gauge jumps inside the FD stencil.
    """
    point = np.asarray(point, dtype=float)
    fr = frame(embedding, point)
    g = embedding.background.metric_at(embedding.position(point))
    curv = extrinsic_curvature(embedding, point, fd_step=fd_step)
    d = embedding.worldsheet_dim
    n_dim = embedding.background.dimension
    k = embedding.codimension

    _check_gauge_continuity(embedding, point, fr.normals, g, fd_step)

    de = fd_jacobian(lambda p: embedding.d_position(p).reshape(p.shape[:-1] + (-1,)),
                     point, fd_step)
    de = de.reshape(point.shape[:-1] + (n_dim, d, d))  # [mu, b, a]
    chris = embedding.background.christoffels_at(embedding.position(point))
    cov_e = de + np.einsum("...mrs,...ra,...sb->...mba", chris,
                           embedding.d_position(point), embedding.d_position(point))
    gauss = (np.einsum("...mba->...abm", cov_e)
             - np.einsum("...abc,...mc->...abm", curv.worldsheet_connection, fr.tangents)
             + np.einsum("...abi,...mi->...abm", curv.extrinsic, fr.normals))
    res_gauss = np.max(np.linalg.norm(gauss, axis=-1), axis=(-1, -2))

    if k == 0:
        return res_gauss, np.zeros_like(res_gauss)
    dn = fd_jacobian(lambda p: normal_frame(embedding, p).reshape(p.shape[:-1] + (-1,)),
                     point, fd_step)
    dn = dn.reshape(point.shape[:-1] + (n_dim, k, d))
    cov_n = dn + np.einsum("...mrs,...ra,...si->...mia", chris,
                           embedding.d_position(point), fr.normals)
    k_mixed = np.einsum("...bc,...aci->...abi", fr.induced_metric_inverse, curv.extrinsic)
    wein = (np.einsum("...mia->...aim", cov_n)
            - np.einsum("...abi,...mb->...aim", k_mixed, fr.tangents)
            - np.einsum("...aij,...mj->...aim", curv.twist, fr.normals))
    res_wein = np.max(np.linalg.norm(wein, axis=-1), axis=(-1, -2))
    return res_gauss, res_wein


def _check_gauge_continuity(embedding: Embedding, point: Array, normals: Array,
                            g: Array, step: float) -> None:
    k = embedding.codimension
    if k == 0:
        return
    d = embedding.worldsheet_dim
    h = step * _step_scale(point)
    for a in range(d):
        e = np.zeros(d)
        e[a] = 1.0
        for sgn in (1.0, -1.0):
            nb = normal_frame(embedding, point + sgn * h * e)
            overlap = np.einsum("...mi,...mn,...nj->...ij", nb, g, normals)
            defect = overlap - np.eye(k)
            if np.any(np.linalg.norm(defect, axis=(-1, -2)) > 0.25):
                raise GaugeFailure(
                    "normal gauge jumps inside the FD stencil; evaluate at a generic point"
                )
