"""Edge geometry: normals, curvature, projectors, and the two boundary-condition forms."""

import numpy as np
import pytest

from worldsheet import catalog
from worldsheet.background import euclidean
from worldsheet.boundary import (
    BoundaryEmbedding,
    WorldsheetScalar,
    adapted_edge_data,
    boundary_condition_residual,
    boundary_data,
    boundary_laplacian_residuals,
    edge_equation_residual,
    laplacian_decomposition_residual,
)
from worldsheet.errors import NullBoundary
from worldsheet.geometry import Embedding, extrinsic_curvature, frame

HELICOID = catalog.helicoid(0.5, 1.0)
PLANE = catalog.plane()
HOLE = catalog.planar_hole(2.0)
DISK = catalog.euclidean_disk(2.0)
COLLAPSE = catalog.collapsing_string(1.0, 1.0)

ALL_BOUNDARIES = [
    pytest.param(entry, att, id=f"{entry.id}-{att.side}")
    for entry in (PLANE, HELICOID, COLLAPSE, HOLE, DISK,
                  catalog.euclidean_plane_hole(2.0))
    for att in entry.boundaries
]


def cartesian_plane() -> Embedding:
    return Embedding(
        2, euclidean(3),
        lambda xi: np.stack([xi[..., 0], xi[..., 1], np.zeros(xi.shape[:-1])], axis=-1),
        lambda xi: np.broadcast_to(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]),
                                   xi.shape[:-1] + (3, 2)).copy(),
        lambda xi: np.zeros(xi.shape[:-1] + (3, 2, 2)))


def circle_boundary(rho=2.0, material_outside=True) -> BoundaryEmbedding:
    sign = -1.0 if material_outside else 1.0

    def chi(u):
        th = np.asarray(u, dtype=float)[..., 0]
        return np.stack([rho * np.cos(th), rho * np.sin(th)], axis=-1)

    return BoundaryEmbedding(cartesian_plane(), chi,
                             outward_hint=lambda u: sign * chi(u))


class TestBoundaryData:
    def test_straight_static_boundary_is_geodesic(self):
        bd = boundary_data(PLANE.boundary, np.array([0.5]))
        assert abs(float(bd.edge_trace)) < 1e-14

    def test_circle_in_plane_curvature(self):
        bd = boundary_data(circle_boundary(2.0), np.array([0.7]))
        assert abs(float(bd.edge_trace) + 0.5) < 1e-6  # FD chi derivatives

    def test_circle_orientation_flips_sign(self):
        bd = boundary_data(circle_boundary(2.0, material_outside=False),
                           np.array([0.7]))
        assert abs(float(bd.edge_trace) - 0.5) < 1e-6

    def test_helicoid_edge_curvature(self):
        bd = boundary_data(HELICOID.boundary, np.array([0.4]))
        assert abs(float(bd.edge_trace) + 1.0 / 3.0) < 1e-12

    def test_hole_edge_curvature(self):
        bd = boundary_data(HOLE.boundary, np.array([0.2, 1.1]))
        assert abs(float(bd.edge_trace) + 0.5) < 1e-12

    def test_collapse_edge_curvature_is_minus_acceleration(self):
        bd = boundary_data(COLLAPSE.boundary, np.array([0.8]))
        assert abs(float(bd.edge_trace) + 1.0) < 1e-12

    @pytest.mark.parametrize("entry,att", ALL_BOUNDARIES)
    def test_projector_identities(self, entry, att):
        u = entry.boundary_grid(5)
        bd = boundary_data(att.boundary, u)
        fr = frame(entry.embedding, att.boundary.chi(u))
        gamma = fr.induced_metric
        idem = np.einsum("...ab,...bc,...cd->...ad", bd.projector, gamma, bd.projector)
        assert np.max(np.abs(idem - bd.projector)) < 1e-10
        trace = np.einsum("...ab,...ab->...", bd.projector, gamma)
        assert np.max(np.abs(trace - (entry.embedding.worldsheet_dim - 1))) < 1e-10
        complete = bd.projector + np.einsum("...a,...b->...ab",
                                            bd.normal_in_m, bd.normal_in_m)
        assert np.max(np.abs(complete - fr.induced_metric_inverse)) < 1e-10

    @pytest.mark.parametrize("entry,att", ALL_BOUNDARIES)
    def test_eta_unit_and_orthogonal(self, entry, att):
        u = entry.boundary_grid(5)
        bd = boundary_data(att.boundary, u)
        gamma = frame(entry.embedding, att.boundary.chi(u)).induced_metric
        norm = np.einsum("...a,...ab,...b->...", bd.normal_in_m, gamma, bd.normal_in_m)
        ortho = np.einsum("...a,...ab,...bA->...A", bd.normal_in_m, gamma,
                          bd.tangents_in_m)
        assert np.max(np.abs(norm - 1.0)) < 1e-12
        assert np.max(np.abs(ortho)) < 1e-12

    def test_null_boundary_rejected(self):
        null = BoundaryEmbedding(
            PLANE.embedding,
            lambda u: np.stack([u[..., 0], u[..., 0]], axis=-1),
            outward_hint=np.array([0.0, 1.0]))
        with pytest.raises(NullBoundary):
            boundary_data(null, np.array([0.3]))


class TestEdgeEquation:
    def test_helicoid_equilibrium(self):
        bd = boundary_data(HELICOID.boundary, np.array([0.4]))
        assert abs(float(edge_equation_residual(bd, 1.0, 3.0))) < 1e-12

    def test_static_hole_equilibrium(self):
        bd = boundary_data(HOLE.boundary, np.array([0.3, 0.9]))
        assert abs(float(edge_equation_residual(bd, 1.0, 2.0))) < 1e-12

    def test_geodesic_boundary_violates_edge_law(self):
        bd = boundary_data(PLANE.boundary, np.array([0.5]))
        assert abs(float(edge_equation_residual(bd, 1.0, 1.0)) - 1.0) < 1e-14

    def test_hole_sign_analysis(self):
        shrink = boundary_data(catalog.planar_hole(1.0).boundary, np.array([0.1, 0.4]))
        grow = boundary_data(catalog.planar_hole(4.0).boundary, np.array([0.1, 0.4]))
        assert float(edge_equation_residual(shrink, 1.0, 2.0)) == pytest.approx(-1.0)
        assert float(edge_equation_residual(grow, 1.0, 2.0)) == pytest.approx(0.5)

    def test_nonpositive_mub_rejected(self):
        bd = boundary_data(PLANE.boundary, np.array([0.5]))
        with pytest.raises(ValueError):
            edge_equation_residual(bd, 1.0, 0.0)


class TestBoundaryConditions:
    def test_flat_worldsheet_vacuous(self):
        res = boundary_condition_residual(PLANE.boundary, np.array([0.5]))
        assert np.all(res == 0.0)
        res_c = boundary_condition_residual(COLLAPSE.boundary, np.array([0.8]))
        assert np.all(res_c == 0.0)

    def test_constant_rotation_edge_satisfied(self):
        u = HELICOID.boundary_grid(9)
        res = boundary_condition_residual(HELICOID.boundary, u)
        assert np.max(np.abs(res)) < 1e-12

    def test_varying_radius_edge_violated(self):
        def chi(u):
            t = np.asarray(u, dtype=float)[..., 0]
            return np.stack([t, 1.0 + 0.1 * np.sin(t)], axis=-1)

        moving = BoundaryEmbedding(HELICOID.embedding, chi,
                                   outward_hint=np.array([0.0, 1.0]))
        # the edge tangent is momentarily parallel to d_t where d sigma/dt = 0,
        # so the residual passes through zero at t = pi/2 and is generic at t = 0
        at_zero = boundary_condition_residual(moving, np.array([0.0]))
        at_quarter = boundary_condition_residual(moving, np.array([np.pi / 2]))
        assert np.max(np.abs(at_zero)) > 1e-3
        assert np.max(np.abs(at_quarter)) < 1e-12


class TestLaplacianForms:
    def test_flat_geodesic_tensionless_limit(self):
        res = boundary_laplacian_residuals(PLANE.boundary, np.array([0.5]),
                                           mu0=0.0, mub=1.0)
        assert np.max(np.abs(res.normal)) < 1e-14
        assert abs(float(res.eta)) < 1e-14
        assert np.max(np.abs(res.combined)) < 1e-14

    def test_helicoid_orbit_all_residuals_vanish(self):
        u = HELICOID.boundary_grid(7)
        res = boundary_laplacian_residuals(HELICOID.boundary, u, mu0=1.0, mub=3.0)
        assert np.max(np.abs(res.normal)) < 1e-12
        assert np.max(np.abs(res.eta)) < 1e-12
        assert np.max(np.abs(res.combined)) < 1e-12

    def test_equilibrium_hole_residuals_vanish(self):
        u = HOLE.boundary_grid(5)
        res = boundary_laplacian_residuals(HOLE.boundary, u, mu0=1.0, mub=2.0)
        assert np.max(np.abs(res.normal)) < 1e-12
        assert np.max(np.abs(res.eta)) < 1e-12
        assert np.max(np.abs(res.combined)) < 1e-12

    @pytest.mark.parametrize("entry,att", ALL_BOUNDARIES)
    def test_projection_form_is_minus_laplacian_form(self, entry, att):
        u = entry.boundary_grid(5)
        proj = boundary_condition_residual(att.boundary, u)
        lap = boundary_laplacian_residuals(att.boundary, u,
                                           entry.parameters.get("mu0", 1.0),
                                           entry.parameters.get("mub", 1.0))
        assert np.max(np.abs(proj + lap.normal)) < 1e-8

    def test_two_path_identity_on_generic_boundary(self):
        def chi(u):
            t = np.asarray(u, dtype=float)[..., 0]
            return np.stack([t, 0.8 + 0.1 * np.sin(t)], axis=-1)

        moving = BoundaryEmbedding(HELICOID.embedding, chi,
                                   outward_hint=np.array([0.0, 1.0]))
        u = np.linspace(0.0, 2.0, 9)[:, None]
        proj = boundary_condition_residual(moving, u)
        lap = boundary_laplacian_residuals(moving, u, 1.0, 3.0)
        assert np.max(np.abs(proj)) > 1e-2  # genuinely violated here
        assert np.max(np.abs(proj + lap.normal)) < 1e-8


class TestLaplacianDecomposition:
    def test_constant_field(self):
        fld = WorldsheetScalar(
            lambda xi: np.full(xi.shape[:-1], 3.7),
            lambda xi: np.zeros(xi.shape[:-1] + (2,)),
            lambda xi: np.zeros(xi.shape[:-1] + (2, 2)))
        res = laplacian_decomposition_residual(PLANE.boundary, np.array([0.5]), fld)
        assert abs(float(res)) < 1e-14

    def test_linear_field_flat_strip(self):
        fld = WorldsheetScalar(
            lambda xi: xi[..., 0],
            lambda xi: np.stack([np.ones(xi.shape[:-1]),
                                 np.zeros(xi.shape[:-1])], axis=-1),
            lambda xi: np.zeros(xi.shape[:-1] + (2, 2)))
        res = laplacian_decomposition_residual(PLANE.boundary, np.array([0.5]), fld)
        assert abs(float(res)) < 1e-14

    def test_quadratic_field_circular_boundary(self):
        fld = WorldsheetScalar(
            lambda xi: xi[..., 1] ** 2,
            lambda xi: np.stack([np.zeros(xi.shape[:-1]), 2.0 * xi[..., 1]], axis=-1),
            lambda xi: np.broadcast_to(np.diag([0.0, 2.0]),
                                       xi.shape[:-1] + (2, 2)).copy())
        res = laplacian_decomposition_residual(circle_boundary(2.0),
                                               np.array([0.7]), fld)
        assert abs(float(res)) < 1e-6


class TestAdaptedEdge:
    def test_flat_strip_edge_totally_geodesic(self):
        data = adapted_edge_data(PLANE.boundary, np.array([0.5]))
        assert np.max(np.abs(data.edge_extrinsic)) < 1e-12

    def test_helicoid_edge_inheritance(self):
        u = np.array([0.4])
        data = adapted_edge_data(HELICOID.boundary, u)  # raises if violated
        bd = boundary_data(HELICOID.boundary, u)
        assert np.allclose(data.edge_extrinsic[..., 0], bd.edge_curvature, atol=1e-10)
        curv = extrinsic_curvature(HELICOID.embedding, HELICOID.boundary.chi(u))
        projected = np.einsum("...aA,...bB,...abi->...ABi",
                              bd.tangents_in_m, bd.tangents_in_m, curv.extrinsic)
        assert np.allclose(data.edge_extrinsic[..., 1:], projected, atol=1e-10)

    def test_string_edge_twist_is_antisymmetric(self):
        data = adapted_edge_data(HELICOID.boundary, np.array([0.9]))
        twist = data.edge_twist
        assert np.max(np.abs(twist + np.swapaxes(twist, -1, -2))) < 1e-12

    def test_mixed_twist_inheritance_value(self):
        u = np.array([0.4])
        data = adapted_edge_data(HELICOID.boundary, u)
        bd = boundary_data(HELICOID.boundary, u)
        curv = extrinsic_curvature(HELICOID.embedding, HELICOID.boundary.chi(u))
        expected = np.einsum("...a,...bA,...abi->...Ai", bd.normal_in_m,
                             bd.tangents_in_m, curv.extrinsic)
        assert np.allclose(data.edge_twist[..., 1:, 0], expected, atol=1e-8)

    def test_sign_coherence_on_rotating_solution(self):
        # with the same outward eta: the edge law holds and the edge
        # four-acceleration is -(mu0/mub) eta, directed into the sheet
        u = np.array([0.4])
        bd = boundary_data(HELICOID.boundary, u)
        assert abs(float(edge_equation_residual(bd, 1.0, 3.0))) < 1e-12
        res = boundary_laplacian_residuals(HELICOID.boundary, u, 1.0, 3.0)
        # combined = L - (mu0/mub) eta with L the (flat) edge Laplacian of the
        # embedding, which equals minus the four-acceleration for a worldline
        assert np.max(np.abs(res.combined)) < 1e-12
        # inward check: the acceleration's spatial part points to the rotation axis
        accel = -(1.0 / 3.0) * bd.spacetime_normal
        position = HELICOID.embedding.position(HELICOID.boundary.chi(u))
        radial = position[..., 1:] / np.linalg.norm(position[..., 1:], axis=-1,
                                                    keepdims=True)
        assert float(np.sum(accel[..., 1:] * radial)) < 0.0
