"""Closed-form worldsheets and edges used as test fixtures and initial data.

Every entry stores analytic derivative callbacks; none relies on finite
differences.  Expected geometric facts are attached with tolerances and a
provenance tag and are reproduced by :func:`evaluate_entry`, which is the
central regression path shared with the command-line ``verify``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .background import euclidean, minkowski
from .boundary import (
    BoundaryAttachment,
    BoundaryEmbedding,
    boundary_condition_residual,
    boundary_data,
    boundary_laplacian_residuals,
    edge_equation_residual,
)
from .errors import InvalidParameters
from .geometry import Embedding, extrinsic_curvature, frame, gauss_weingarten_residual
from .integrability import (
    boundary_integrability_residuals,
    direct_embedding_residuals,
    worldsheet_integrability_residuals,
    worldsheet_riemann,
)

Array = np.ndarray


@dataclass(frozen=True)
class ExpectedValue:
    quantity: str
    value: float
    tolerance: float
    provenance: str  # one of {"paper", "trivial", "derived"}

    def __post_init__(self) -> None:
        if self.provenance not in ("paper", "trivial", "derived"):
            raise ValueError(f"unknown provenance {self.provenance!r}")


@dataclass(frozen=True)
class CatalogEntry:
    """A closed-form scenario: embedding, optional edges, and expected facts."""

    id: str
    embedding: Embedding
    boundaries: tuple[BoundaryAttachment, ...]
    parameters: dict
    expected: tuple[ExpectedValue, ...]
    sample_box: tuple[tuple[float, float], ...]
    boundary_sample_range: tuple[float, float] = (0.0, 1.0)
    periodic: tuple[bool, ...] = ()
    domain: tuple = ()   # per-axis (lo, hi); entries may be BoundaryAttachment

    @property
    def boundary(self) -> BoundaryEmbedding | None:
        return self.boundaries[0].boundary if self.boundaries else None

    def sample_grid(self, per_dim: int = 5) -> Array:
        axes = [np.linspace(lo, hi, per_dim) for lo, hi in self.sample_box]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, len(axes))

    def boundary_grid(self, count: int = 7) -> Array:
        lo, hi = self.boundary_sample_range
        db = self.embedding.worldsheet_dim - 1
        axes = [np.linspace(lo, hi, count)]
        for _ in range(db - 1):
            axes.append(np.linspace(0.3, 5.9, count))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, db)


def _stack(*comps):
    return np.stack(np.broadcast_arrays(*comps), axis=-1)


def _graph_boundary(parent: Embedding, level_fn, d_level_fn, dd_level_fn,
                    hint) -> BoundaryEmbedding:
    """Edge as a graph over the leading worldsheet coordinates: chi(u) = (u, f(u))."""
    db = parent.worldsheet_dim - 1

    def chi(u):
        u = np.asarray(u, dtype=float)
        return np.concatenate([u, level_fn(u)[..., None]], axis=-1)

    def d_chi(u):
        u = np.asarray(u, dtype=float)
        eye = np.broadcast_to(np.eye(db), u.shape[:-1] + (db, db)).copy()
        return np.concatenate([eye, d_level_fn(u)[..., None, :]], axis=-2)

    def dd_chi(u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape[:-1] + (db + 1, db, db))
        out[..., db, :, :] = dd_level_fn(u)
        return out

    return BoundaryEmbedding(parent, chi, d_chi, dd_chi, outward_hint=hint)


def _constant_boundary(parent: Embedding, level: float, hint) -> BoundaryEmbedding:
    db = parent.worldsheet_dim - 1

    def level_fn(u):
        return np.full(np.asarray(u, dtype=float).shape[:-1], level)

    def d_level(u):
        return np.zeros(np.asarray(u, dtype=float).shape[:-1] + (db,))

    def dd_level(u):
        return np.zeros(np.asarray(u, dtype=float).shape[:-1] + (db, db))

    return _graph_boundary(parent, level_fn, d_level, dd_level, hint)


# ----------------------------------------------------------------------------
# scenario entries


def helicoid(omega: float = 0.5, R: float = 1.0, *,
             mu0: float = 1.0) -> CatalogEntry:
    """Rigidly rotating string worldsheet truncated at radius R, two massive ends.

    Valid for omega*R < 1 (the edge would be null at equality).  The stored
    edge tension makes the circular orbit exact: mub = mu0 (1 - w^2 R^2) / (w^2 R).
    """
    if R <= 0 or omega < 0 or omega * R >= 1.0:
        raise InvalidParameters("helicoid requires R > 0 and 0 <= omega*R < 1")
    om = float(omega)
    bg = minkowski(3)

    def pos(xi):
        t, s = xi[..., 0], xi[..., 1]
        return _stack(t, s * np.cos(om * t), s * np.sin(om * t))

    def dpos(xi):
        t, s = xi[..., 0], xi[..., 1]
        one, zero = np.ones_like(t), np.zeros_like(t)
        et = _stack(one, -s * om * np.sin(om * t), s * om * np.cos(om * t))
        es = _stack(zero, np.cos(om * t), np.sin(om * t))
        return np.stack([et, es], axis=-1)

    def ddpos(xi):
        t, s = xi[..., 0], xi[..., 1]
        z = np.zeros_like(t)
        xtt = _stack(z, -s * om * om * np.cos(om * t), -s * om * om * np.sin(om * t))
        xts = _stack(z, -om * np.sin(om * t), om * np.cos(om * t))
        xss = _stack(z, z, z)
        return np.stack([np.stack([xtt, xts], axis=-1),
                         np.stack([xts, xss], axis=-1)], axis=-1)

    emb = Embedding(2, bg, pos, dpos, ddpos)
    upper = BoundaryAttachment(_constant_boundary(emb, R, np.array([0.0, 1.0])), "upper")
    lower = BoundaryAttachment(_constant_boundary(emb, -R, np.array([0.0, -1.0])), "lower")
    k_edge = -om * om * R / (1.0 - om * om * R * R)
    expected = [
        ExpectedValue("curvature_trace_norm", 0.0, 1e-9, "paper"),
        ExpectedValue("boundary_condition_max", 0.0, 1e-9, "paper"),
        ExpectedValue("gauss_weingarten_max", 0.0, 1e-6, "derived"),
        ExpectedValue("scalar_curvature_dev", 0.0, 1e-6, "derived"),
        ExpectedValue("integrability_worldsheet", 0.0, 1e-6, "derived"),
        ExpectedValue("integrability_boundary", 0.0, 1e-6, "derived"),
        ExpectedValue("integrability_direct", 0.0, 1e-6, "derived"),
        ExpectedValue("laplacian_form_agreement", 0.0, 1e-8, "derived"),
    ]
    params = {"omega": om, "R": R, "mu0": mu0}
    if om > 0:
        params["mub"] = mu0 * (1.0 - om * om * R * R) / (om * om * R)
        expected += [
            ExpectedValue("edge_trace", k_edge, 1e-9, "derived"),
            ExpectedValue("edge_residual", 0.0, 1e-9, "derived"),
        ]
    else:
        expected.append(ExpectedValue("edge_trace", 0.0, 1e-9, "trivial"))
    return CatalogEntry(
        id="helicoid",
        embedding=emb,
        boundaries=(upper, lower),
        parameters=params,
        expected=tuple(expected),
        # sigma grid avoids 0: the deterministic normal gauge flips sign there
        sample_box=((0.0, 2.0), (-0.88 * R, 0.92 * R)),
        boundary_sample_range=(0.0, 2.0),
        periodic=(False, False),
        domain=((0.0, 1.0), (lower, upper)),
    )


def collision_time(a: float, x0: float) -> float:
    """Meeting time of the two constant-proper-acceleration endpoint worldlines."""
    return math.sqrt((a * x0 + 1.0) ** 2 - 1.0) / a


def endpoint_worldline(a: float, x0: float, t: Array) -> Array:
    """Right endpoint position x(t) = x0 - (sqrt(1 + a^2 t^2) - 1)/a."""
    t = np.asarray(t, dtype=float)
    return x0 - (np.sqrt(1.0 + a * a * t * t) - 1.0) / a


def collapsing_string(a: float = 1.0, x0: float = 1.0) -> CatalogEntry:
    """Straight string between point masses pulled inward at constant proper rate a.

    The worldsheet is a flat strip; the edges are the hyperbolic worldlines
    x(t) = +/- [x0 - (sqrt(1 + a^2 t^2) - 1)/a] with edge curvature k = -a.
    """
    if a <= 0 or x0 <= 0:
        raise InvalidParameters("collapsing string requires a > 0 and x0 > 0")
    bg = minkowski(3)

    def pos(xi):
        t, s = xi[..., 0], xi[..., 1]
        return _stack(t, s, np.zeros_like(t))

    def dpos(xi):
        shp = np.asarray(xi, dtype=float).shape[:-1]
        d = np.zeros(shp + (3, 2))
        d[..., 0, 0] = 1.0
        d[..., 1, 1] = 1.0
        return d

    def ddpos(xi):
        shp = np.asarray(xi, dtype=float).shape[:-1]
        return np.zeros(shp + (3, 2, 2))

    emb = Embedding(2, bg, pos, dpos, ddpos)

    def make_side(sign):
        def level(u):
            return sign * endpoint_worldline(a, x0, u[..., 0])

        def dlevel(u):
            t = u[..., 0]
            return (-sign * a * t / np.sqrt(1.0 + a * a * t * t))[..., None]

        def ddlevel(u):
            t = u[..., 0]
            return (-sign * a / (1.0 + a * a * t * t) ** 1.5)[..., None, None]

        hint = np.array([0.0, sign])
        return _graph_boundary(emb, level, dlevel, ddlevel, hint)

    upper = BoundaryAttachment(make_side(1.0), "upper")
    lower = BoundaryAttachment(make_side(-1.0), "lower")
    t_coll = collision_time(a, x0)
    return CatalogEntry(
        id="collapsing",
        embedding=emb,
        boundaries=(upper, lower),
        parameters={"a": a, "x0": x0, "mu0": a, "mub": 1.0},
        expected=(
            ExpectedValue("curvature_trace_norm", 0.0, 1e-12, "trivial"),
            ExpectedValue("boundary_condition_max", 0.0, 1e-12, "paper"),
            ExpectedValue("edge_trace", -a, 1e-9, "derived"),
            ExpectedValue("edge_residual", 0.0, 1e-9, "derived"),
            ExpectedValue("endpoint_x_at_t1", endpoint_worldline(a, x0, 1.0), 1e-12, "derived"),
            ExpectedValue("collision_time", t_coll, 1e-12, "derived"),
            ExpectedValue("laplacian_form_agreement", 0.0, 1e-8, "derived"),
        ),
        sample_box=((0.0, 0.4 * t_coll), (-0.8 * x0, 0.8 * x0)),
        boundary_sample_range=(0.0, 0.4 * t_coll),
        periodic=(False, False),
        domain=((0.0, 0.5), (lower, upper)),
    )


def planar_hole(rho: float = 2.0, outer: float | None = None, *,
                mu0: float = 1.0) -> CatalogEntry:
    """Static membrane sheet with a circular hole: worldsheet = time x (plane minus disk).

    Polar bulk coordinates (t, phi, r) with the edge at r = rho; the stored
    tension mub = mu0 * rho makes the hole an equilibrium.
    """
    if rho <= 0:
        raise InvalidParameters("hole radius must be positive")
    outer = outer if outer is not None else rho + 2.0
    bg = minkowski(4)

    def pos(xi):
        t, ph, r = xi[..., 0], xi[..., 1], xi[..., 2]
        return _stack(t, r * np.cos(ph), r * np.sin(ph), np.zeros_like(t))

    def dpos(xi):
        t, ph, r = xi[..., 0], xi[..., 1], xi[..., 2]
        one, z = np.ones_like(t), np.zeros_like(t)
        et = _stack(one, z, z, z)
        eph = _stack(z, -r * np.sin(ph), r * np.cos(ph), z)
        er = _stack(z, np.cos(ph), np.sin(ph), z)
        return np.stack([et, eph, er], axis=-1)

    def ddpos(xi):
        t, ph, r = xi[..., 0], xi[..., 1], xi[..., 2]
        z = np.zeros_like(t)
        out = np.zeros(np.asarray(xi, dtype=float).shape[:-1] + (4, 3, 3))
        xphph = _stack(z, -r * np.cos(ph), -r * np.sin(ph), z)
        xphr = _stack(z, -np.sin(ph), np.cos(ph), z)
        out[..., 1, 1] = xphph
        out[..., 1, 2] = xphr
        out[..., 2, 1] = xphr
        return out

    emb = Embedding(3, bg, pos, dpos, ddpos)
    inner = BoundaryAttachment(
        _constant_boundary(emb, rho, np.array([0.0, 0.0, -1.0])), "lower")
    return CatalogEntry(
        id="hole",
        embedding=emb,
        boundaries=(inner,),
        parameters={"rho": rho, "outer": outer, "mu0": mu0, "mub": mu0 * rho},
        expected=(
            ExpectedValue("curvature_trace_norm", 0.0, 1e-9, "trivial"),
            ExpectedValue("boundary_condition_max", 0.0, 1e-9, "paper"),
            ExpectedValue("edge_trace", -1.0 / rho, 1e-9, "derived"),
            ExpectedValue("edge_residual", 0.0, 1e-9, "derived"),
            ExpectedValue("gauss_weingarten_max", 0.0, 1e-6, "derived"),
            ExpectedValue("integrability_worldsheet", 0.0, 1e-6, "derived"),
            ExpectedValue("integrability_boundary", 0.0, 1e-6, "derived"),
            ExpectedValue("integrability_direct", 0.0, 1e-6, "derived"),
            ExpectedValue("laplacian_form_agreement", 0.0, 1e-8, "derived"),
        ),
        sample_box=((0.0, 1.0), (0.3, 5.9), (rho, outer)),
        boundary_sample_range=(0.0, 1.0),
        periodic=(False, True, False),
        domain=((0.0, 1.0), (0.0, 2.0 * math.pi), (inner, outer)),
    )


def euclidean_disk(rho: float = 1.0) -> CatalogEntry:
    """Flat disk membrane of radius rho in polar coordinates (phi, r), edge outward."""
    if rho <= 0:
        raise InvalidParameters("disk radius must be positive")
    emb = _polar_plane()
    edge = BoundaryAttachment(
        _constant_boundary(emb, rho, np.array([0.0, 1.0])), "upper")
    return CatalogEntry(
        id="disk",
        embedding=emb,
        boundaries=(edge,),
        parameters={"rho": rho},
        expected=(
            ExpectedValue("curvature_trace_norm", 0.0, 1e-12, "trivial"),
            ExpectedValue("boundary_condition_max", 0.0, 1e-12, "trivial"),
            ExpectedValue("edge_trace", 1.0 / rho, 1e-9, "derived"),
        ),
        sample_box=((0.3, 5.9), (0.2 * rho, rho)),
        boundary_sample_range=(0.3, 5.9),
        periodic=(True, False),
        domain=((0.0, 2.0 * math.pi), (0.0, edge)),
    )


def euclidean_plane_hole(rho: float = 2.0, outer: float | None = None, *,
                         mu0: float = 1.0) -> CatalogEntry:
    """Flat plane minus a disk (Euclidean), edge oriented toward the hole center."""
    if rho <= 0:
        raise InvalidParameters("hole radius must be positive")
    outer = outer if outer is not None else rho + 2.0
    emb = _polar_plane()
    edge = BoundaryAttachment(
        _constant_boundary(emb, rho, np.array([0.0, -1.0])), "lower")
    return CatalogEntry(
        id="plane_hole",
        embedding=emb,
        boundaries=(edge,),
        parameters={"rho": rho, "outer": outer, "mu0": mu0, "mub": mu0 * rho},
        expected=(
            ExpectedValue("curvature_trace_norm", 0.0, 1e-12, "trivial"),
            ExpectedValue("edge_trace", -1.0 / rho, 1e-9, "derived"),
            ExpectedValue("edge_residual", 0.0, 1e-9, "derived"),
            ExpectedValue("integrability_boundary", 0.0, 1e-6, "derived"),
            ExpectedValue("laplacian_form_agreement", 0.0, 1e-8, "derived"),
        ),
        sample_box=((0.3, 5.9), (rho, outer)),
        boundary_sample_range=(0.3, 5.9),
        periodic=(True, False),
        domain=((0.0, 2.0 * math.pi), (edge, outer)),
    )


def _polar_plane() -> Embedding:
    bg = euclidean(3)

    def pos(xi):
        ph, r = xi[..., 0], xi[..., 1]
        return _stack(r * np.cos(ph), r * np.sin(ph), np.zeros_like(ph))

    def dpos(xi):
        ph, r = xi[..., 0], xi[..., 1]
        z = np.zeros_like(ph)
        eph = _stack(-r * np.sin(ph), r * np.cos(ph), z)
        er = _stack(np.cos(ph), np.sin(ph), z)
        return np.stack([eph, er], axis=-1)

    def ddpos(xi):
        ph, r = xi[..., 0], xi[..., 1]
        z = np.zeros_like(ph)
        xphph = _stack(-r * np.cos(ph), -r * np.sin(ph), z)
        xphr = _stack(-np.sin(ph), np.cos(ph), z)
        xrr = _stack(z, z, z)
        return np.stack([np.stack([xphph, xphr], axis=-1),
                         np.stack([xphr, xrr], axis=-1)], axis=-1)

    return Embedding(2, bg, pos, dpos, ddpos)


def plane() -> CatalogEntry:
    """Flat Minkowski strip (t, sigma) -> (t, sigma, 0) with straight edges at +-1."""
    bg = minkowski(3)

    def pos(xi):
        t, s = xi[..., 0], xi[..., 1]
        return _stack(t, s, np.zeros_like(t))

    def dpos(xi):
        shp = np.asarray(xi, dtype=float).shape[:-1]
        d = np.zeros(shp + (3, 2))
        d[..., 0, 0] = 1.0
        d[..., 1, 1] = 1.0
        return d

    def ddpos(xi):
        shp = np.asarray(xi, dtype=float).shape[:-1]
        return np.zeros(shp + (3, 2, 2))

    emb = Embedding(2, bg, pos, dpos, ddpos)
    upper = BoundaryAttachment(_constant_boundary(emb, 1.0, np.array([0.0, 1.0])), "upper")
    lower = BoundaryAttachment(_constant_boundary(emb, -1.0, np.array([0.0, -1.0])), "lower")
    return CatalogEntry(
        id="plane",
        embedding=emb,
        boundaries=(upper, lower),
        parameters={"mu0": 1.0, "mub": 1.0},
        expected=(
            ExpectedValue("curvature_trace_norm", 0.0, 1e-12, "trivial"),
            ExpectedValue("scalar_curvature_dev", 0.0, 1e-12, "trivial"),
            ExpectedValue("boundary_condition_max", 0.0, 1e-12, "trivial"),
            ExpectedValue("edge_trace", 0.0, 1e-12, "trivial"),
            ExpectedValue("gauss_weingarten_max", 0.0, 1e-9, "trivial"),
            ExpectedValue("integrability_worldsheet", 0.0, 1e-9, "trivial"),
            ExpectedValue("integrability_boundary", 0.0, 1e-9, "trivial"),
            ExpectedValue("integrability_direct", 0.0, 1e-9, "trivial"),
            ExpectedValue("laplacian_form_agreement", 0.0, 1e-10, "trivial"),
        ),
        sample_box=((0.0, 1.0), (-0.9, 0.9)),
        boundary_sample_range=(0.0, 1.0),
        periodic=(False, False),
        domain=((0.0, 1.0), (lower, upper)),
    )


def sphere(radius: float = 2.0) -> CatalogEntry:
    """Round sphere in Euclidean 3-space, spherical coordinates (theta, phi)."""
    if radius <= 0:
        raise InvalidParameters("sphere radius must be positive")
    r = float(radius)
    bg = euclidean(3)

    def pos(xi):
        th, ph = xi[..., 0], xi[..., 1]
        return r * _stack(np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th))

    def dpos(xi):
        th, ph = xi[..., 0], xi[..., 1]
        eth = r * _stack(np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th))
        eph = r * _stack(-np.sin(th) * np.sin(ph), np.sin(th) * np.cos(ph), np.zeros_like(th))
        return np.stack([eth, eph], axis=-1)

    def ddpos(xi):
        th, ph = xi[..., 0], xi[..., 1]
        z = np.zeros_like(th)
        xtt = -pos(xi)
        xtp = r * _stack(-np.cos(th) * np.sin(ph), np.cos(th) * np.cos(ph), z)
        xpp = r * _stack(-np.sin(th) * np.cos(ph), -np.sin(th) * np.sin(ph), z)
        return np.stack([np.stack([xtt, xtp], axis=-1),
                         np.stack([xtp, xpp], axis=-1)], axis=-1)

    emb = Embedding(2, bg, pos, dpos, ddpos)
    return CatalogEntry(
        id="sphere",
        embedding=emb,
        boundaries=(),
        parameters={"radius": r},
        expected=(
            ExpectedValue("curvature_trace_norm", 2.0 / r, 1e-9, "derived"),
            ExpectedValue("scalar_curvature_dev", 0.0, 1e-6, "derived"),
            ExpectedValue("gauss_weingarten_max", 0.0, 1e-6, "derived"),
            ExpectedValue("integrability_worldsheet", 0.0, 1e-6, "derived"),
        ),
        sample_box=((0.5, 2.4), (0.2, 1.2)),
        periodic=(False, True),
        domain=((0.5, 2.4), (0.2, 1.2)),
    )


def flat_torus(r1: float = 1.0, r2: float = 1.0) -> CatalogEntry:
    """Intrinsically flat product torus in Euclidean 4-space (two independent circles)."""
    if r1 <= 0 or r2 <= 0:
        raise InvalidParameters("torus radii must be positive")
    bg = euclidean(4)

    def pos(xi):
        u, v = xi[..., 0], xi[..., 1]
        return _stack(r1 * np.cos(u), r1 * np.sin(u), r2 * np.cos(v), r2 * np.sin(v))

    def dpos(xi):
        u, v = xi[..., 0], xi[..., 1]
        z = np.zeros_like(u)
        eu = _stack(-r1 * np.sin(u), r1 * np.cos(u), z, z)
        ev = _stack(z, z, -r2 * np.sin(v), r2 * np.cos(v))
        return np.stack([eu, ev], axis=-1)

    def ddpos(xi):
        u, v = xi[..., 0], xi[..., 1]
        z = np.zeros_like(u)
        xuu = _stack(-r1 * np.cos(u), -r1 * np.sin(u), z, z)
        xuv = _stack(z, z, z, z)
        xvv = _stack(z, z, -r2 * np.cos(v), -r2 * np.sin(v))
        return np.stack([np.stack([xuu, xuv], axis=-1),
                         np.stack([xuv, xvv], axis=-1)], axis=-1)

    emb = Embedding(2, bg, pos, dpos, ddpos)
    trace_norm = math.sqrt(1.0 / r1 ** 2 + 1.0 / r2 ** 2)
    return CatalogEntry(
        id="torus",
        embedding=emb,
        boundaries=(),
        parameters={"r1": r1, "r2": r2},
        expected=(
            ExpectedValue("curvature_trace_norm", trace_norm, 1e-9, "derived"),
            ExpectedValue("scalar_curvature_dev", 0.0, 1e-8, "derived"),
            ExpectedValue("gauss_weingarten_max", 0.0, 1e-6, "derived"),
            ExpectedValue("integrability_worldsheet", 0.0, 1e-6, "derived"),
        ),
        sample_box=((0.3, 1.2), (0.3, 1.2)),
        periodic=(True, True),
        domain=((0.3, 1.2), (0.3, 1.2)),
    )


def reference_surfaces() -> list[CatalogEntry]:
    """Flat plane, round sphere, and flat torus used by the curvature test suites."""
    return [plane(), sphere(2.0), flat_torus(1.0, 1.0)]


_BUILDERS = {
    "plane": plane,
    "sphere": sphere,
    "torus": flat_torus,
    "helicoid": helicoid,
    "collapsing": collapsing_string,
    "hole": planar_hole,
    "disk": euclidean_disk,
    "plane_hole": euclidean_plane_hole,
}

_PARAM_NAMES = {
    "sphere": {"radius"},
    "torus": {"r1", "r2"},
    "helicoid": {"omega", "R"},
    "collapsing": {"a", "x0"},
    "hole": {"rho", "outer"},
    "disk": {"rho"},
    "plane_hole": {"rho", "outer"},
    "plane": set(),
}


def entry_from_id(entry_id: str) -> CatalogEntry:
    """Build an entry from an id string like ``helicoid:omega=0.5,R=1``."""
    name, _, rest = entry_id.partition(":")
    name = name.strip()
    if name not in _BUILDERS:
        raise KeyError(f"unknown catalog entry {name!r}")
    kwargs = {}
    if rest:
        for item in rest.split(","):
            key, _, val = item.partition("=")
            key = key.strip()
            if not val or key not in _PARAM_NAMES[name]:
                raise KeyError(f"unknown parameter {key!r} for entry {name!r}")
            kwargs[key] = float(val)
    return _BUILDERS[name](**kwargs)


def catalog_ids() -> list[str]:
    return sorted(_BUILDERS)


# ----------------------------------------------------------------------------
# expected-value evaluation (shared by tests and the verify command)

_FD_GW_STEP = 1e-4
_FD_INT_STEP = 1e-4
_FD_RIEMANN_STEP = 1.5e-4


def _eval_quantity(entry: CatalogEntry, quantity: str, expected: float) -> float:
    """Worst-case sampled value of a named quantity (the sample maximizing |q - expected|)."""
    emb = entry.embedding
    pts = entry.sample_grid()
    if quantity == "curvature_trace_norm":
        traces = extrinsic_curvature(emb, pts).traces
        vals = np.linalg.norm(traces, axis=-1)
        return _worst(vals, expected)
    if quantity == "scalar_curvature_dev":
        some = pts[:: max(1, len(pts) // 6)]
        riem = worldsheet_riemann(emb, some, _FD_RIEMANN_STEP)
        gi = frame(emb, some).induced_metric_inverse
        scal = np.einsum("...ac,...bd,...abcd->...", gi, gi, riem)
        ref = _reference_scalar_curvature(entry)
        return _worst(scal - ref, expected)
    if quantity == "gauss_weingarten_max":
        some = pts[:: max(1, len(pts) // 6)]
        res1, res2 = gauss_weingarten_residual(emb, some, _FD_GW_STEP)
        return _worst(np.maximum(res1, res2), expected)
    if quantity == "integrability_worldsheet":
        some = pts[:: max(1, len(pts) // 4)]
        res = worldsheet_integrability_residuals(emb, some, _FD_INT_STEP)
        return res.max()
    if quantity == "endpoint_x_at_t1":
        return float(entry.boundaries[0].boundary.chi(np.array([1.0]))[..., -1])
    if quantity == "collision_time":
        return collision_time(entry.parameters["a"], entry.parameters["x0"])

    # edge quantities: worst case over all attached boundaries
    vals = []
    for att in entry.boundaries:
        bnd = att.boundary
        u = entry.boundary_grid()
        if quantity == "edge_trace":
            vals.append(boundary_data(bnd, u).edge_trace)
        elif quantity == "edge_residual":
            bd = boundary_data(bnd, u)
            vals.append(edge_equation_residual(
                bd, entry.parameters["mu0"], entry.parameters["mub"]))
        elif quantity == "boundary_condition_max":
            vals.append(np.linalg.norm(boundary_condition_residual(bnd, u), axis=-1))
        elif quantity == "laplacian_form_agreement":
            proj = boundary_condition_residual(bnd, u)
            lap = boundary_laplacian_residuals(
                bnd, u, entry.parameters.get("mu0", 1.0),
                entry.parameters.get("mub", 1.0))
            vals.append(np.linalg.norm(proj + lap.normal, axis=-1))
        elif quantity == "integrability_boundary":
            some = u[:: max(1, len(u) // 3)]
            g, c = boundary_integrability_residuals(bnd, some, _FD_INT_STEP)
            vals.append(np.maximum(g, c))
        elif quantity == "integrability_direct":
            some = u[:: max(1, len(u) // 3)]
            res = direct_embedding_residuals(bnd, some, _FD_INT_STEP)
            vals.append(np.full(some.shape[0], res.max()))
        else:
            raise KeyError(f"unknown expected quantity {quantity!r}")
    return _worst(np.concatenate([np.atleast_1d(v) for v in vals]), expected)


def _reference_scalar_curvature(entry: CatalogEntry) -> float | Array:
    if entry.id == "sphere":
        return 2.0 / entry.parameters["radius"] ** 2
    if entry.id == "helicoid":
        pts = entry.sample_grid()[:: max(1, len(entry.sample_grid()) // 6)]
        curv = extrinsic_curvature(entry.embedding, pts)
        gi = frame(entry.embedding, pts).induced_metric_inverse
        ksq = np.einsum("...abi,...ac,...bd,...cdi->...",
                        curv.extrinsic, gi, gi, curv.extrinsic)
        trace_sq = np.einsum("...i,...i->...", curv.traces, curv.traces)
        return trace_sq - ksq
    return 0.0


def _worst(values: Array, expected: float) -> float:
    values = np.atleast_1d(np.asarray(values, dtype=float))
    idx = np.argmax(np.abs(values - expected))
    return float(values.reshape(-1)[idx])


def evaluate_entry(entry: CatalogEntry) -> list[tuple[str, float, float, float, bool]]:
    """Evaluate all expected quantities; rows are (quantity, value, expected, residual, pass)."""
    rows = []
    for exp in entry.expected:
        value = _eval_quantity(entry, exp.quantity, exp.value)
        residual = abs(value - exp.value)
        rows.append((exp.quantity, value, exp.value, residual, residual <= exp.tolerance))
    return rows


def action_setup(entry: CatalogEntry, mu0: float, mub: float,
                 points_per_axis: int | tuple[int, ...] = 64):
    """Quadrature config and displaceable edges for an entry's stored domain.

    Returns (ActionConfig, edges) ready for the variation operations; edge
    graphs become the limits of the last coordinate axis.
    """
    from .variation import ActionConfig, GridAxis

    if isinstance(points_per_axis, int):
        counts = (points_per_axis,) * len(entry.domain)
    else:
        counts = tuple(points_per_axis)
    axes = []
    edges: list[BoundaryAttachment] = []
    for i, (lo, hi) in enumerate(entry.domain):
        lo_lim = lo
        hi_lim = hi
        if isinstance(lo, BoundaryAttachment):
            edges.append(lo)
            lo_lim = lo.graph
        if isinstance(hi, BoundaryAttachment):
            edges.append(hi)
            hi_lim = hi.graph
        axes.append(GridAxis(counts[i], lo_lim, hi_lim))
    return ActionConfig(mu0, mub, tuple(axes)), tuple(edges)
