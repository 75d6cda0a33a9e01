"""Structure-compatibility residuals for all three embedding levels."""

import numpy as np
import pytest

from worldsheet import catalog
from worldsheet.geometry import frame, normal_frame
from worldsheet.integrability import (
    aligned_normal_frame_fn,
    boundary_integrability_residuals,
    curvature_tensors,
    direct_embedding_residuals,
    worldsheet_integrability_residuals,
    worldsheet_riemann,
)

PLANE = catalog.plane()
SPHERE = catalog.sphere(2.0)
TORUS = catalog.flat_torus(1.0, 1.0)
HELICOID = catalog.helicoid(0.5, 1.0)
HOLE = catalog.planar_hole(2.0)


def twisted_torus_frame(angle_fn):
    def field(p):
        base = normal_frame(TORUS.embedding, p)
        al = angle_fn(p)
        c, s = np.cos(al), np.sin(al)
        rot = np.stack([np.stack([c, -s], axis=-1),
                        np.stack([s, c], axis=-1)], axis=-2)
        return np.einsum("...mi,...ij->...mj", base, rot)
    return field


class TestWorldsheetRiemann:
    def test_plane_flat(self):
        r = worldsheet_riemann(PLANE.embedding, np.array([0.4, 0.1]))
        assert np.max(np.abs(r)) < 1e-12

    def test_sphere_value_and_scalar(self):
        q = np.array([1.1, 0.4])
        r = worldsheet_riemann(SPHERE.embedding, q, step=1e-3)
        expect = 4.0 * np.sin(1.1) ** 2  # gamma_qq gamma_pp / r^2
        assert abs(r[0, 1, 0, 1] - expect) < 1e-5
        gi = frame(SPHERE.embedding, q).induced_metric_inverse
        scal = np.einsum("ac,bd,abcd->", gi, gi, r)
        assert abs(scal - 0.5) < 1e-6

    def test_antisymmetries(self):
        q = np.array([1.1, 0.4])
        r = worldsheet_riemann(SPHERE.embedding, q, step=1e-3)
        # the last pair is antisymmetric by construction; the first pair only
        # up to the FD truncation of the connection derivatives
        assert np.max(np.abs(r + np.swapaxes(r, 2, 3))) < 1e-12
        assert np.max(np.abs(r + np.swapaxes(r, 0, 1))) < 2e-5

    def test_helicoid_scalar_matches_gauss_relation(self):
        # with a flat ambient and vanishing traces the intrinsic scalar equals
        # minus the curvature-squared invariant
        from worldsheet.geometry import extrinsic_curvature
        q = np.array([0.8, 0.5])
        r = worldsheet_riemann(HELICOID.embedding, q, step=1e-3)
        fr = frame(HELICOID.embedding, q)
        gi = fr.induced_metric_inverse
        scal = np.einsum("ac,bd,abcd->", gi, gi, r)
        c = extrinsic_curvature(HELICOID.embedding, q)
        ksq = np.einsum("abi,ac,bd,cdi->", c.extrinsic, gi, gi, c.extrinsic)
        assert abs(scal + ksq) < 1e-6


class TestWorldsheetResiduals:
    def test_plane_zero(self):
        res = worldsheet_integrability_residuals(PLANE.embedding, np.array([0.2, 0.4]))
        assert float(res.gauss_codazzi) < 1e-12
        assert float(res.codazzi_mainardi) < 1e-12
        assert res.ricci is None  # co-dimension one

    def test_sphere_residuals_and_vacuous_ricci(self):
        res = worldsheet_integrability_residuals(SPHERE.embedding,
                                                 np.array([1.1, 0.4]), step=1e-4)
        assert float(res.gauss_codazzi) < 1e-6
        assert float(res.codazzi_mainardi) < 1e-6
        assert res.ricci is None

    def test_torus_two_normal_sector(self):
        res = worldsheet_integrability_residuals(TORUS.embedding,
                                                 np.array([0.7, 1.3]), step=1e-4)
        assert res.max() < 1e-6
        assert res.ricci is not None

    def test_twisted_gauge_covariance(self):
        # a position-dependent frame rotation must leave all residuals small
        field = twisted_torus_frame(lambda p: 0.3 * p[..., 0] + 0.5 * p[..., 1])
        res = worldsheet_integrability_residuals(TORUS.embedding,
                                                 np.array([0.7, 1.3]), step=1e-4,
                                                 normal_frame_fn=field)
        assert res.max() < 1e-6

    def test_constant_rotation_invariance(self):
        p = np.array([0.7, 1.3])
        base = worldsheet_integrability_residuals(TORUS.embedding, p, step=1e-3)
        rot = twisted_torus_frame(lambda q: np.full(q.shape[:-1], 0.9))
        rotated = worldsheet_integrability_residuals(TORUS.embedding, p, step=1e-3,
                                                     normal_frame_fn=rot)
        assert abs(float(base.gauss_codazzi) - float(rotated.gauss_codazzi)) < 1e-9
        assert abs(float(base.codazzi_mainardi) - float(rotated.codazzi_mainardi)) < 1e-9
        assert abs(float(base.ricci) - float(rotated.ricci)) < 1e-9

    @pytest.mark.parametrize("entry,point", [
        (SPHERE, (1.1, 0.4)),
        (HELICOID, (0.8, 0.5)),
        (HOLE, (0.3, 1.1, 2.7)),
    ], ids=lambda v: getattr(v, "id", ""))
    def test_convergence_order(self, entry, point):
        p = np.array(point)
        r1 = worldsheet_integrability_residuals(entry.embedding, p, step=2e-3)
        r2 = worldsheet_integrability_residuals(entry.embedding, p, step=1e-3)
        for big, small in ((r1.gauss_codazzi, r2.gauss_codazzi),
                           (r1.codazzi_mainardi, r2.codazzi_mainardi)):
            if float(small) < 1e-11:  # below the floor: exactly-satisfied family
                continue
            assert np.log2(float(big) / float(small)) > 1.8

    def test_aligned_frame_heals_sign_flip(self):
        # the raw gauge flips across sigma = 0 on the helicoid; the aligned
        # field is smooth there and the residuals stay small
        p = np.array([0.5, 0.0])
        res = worldsheet_integrability_residuals(HELICOID.embedding, p, step=1e-4)
        assert res.max() < 1e-6
        fn = aligned_normal_frame_fn(HELICOID.embedding, p)
        left = fn(np.array([0.5, -1e-4]))
        right = fn(np.array([0.5, 1e-4]))
        assert np.max(np.abs(left - right)) < 1e-3


class TestBoundaryResiduals:
    def test_straight_boundary_zero(self):
        g, c = boundary_integrability_residuals(PLANE.boundary, np.array([0.5]))
        assert float(g) < 1e-12 and float(c) < 1e-12

    def test_circle_boundary(self):
        entry = catalog.euclidean_plane_hole(2.0)
        g, c = boundary_integrability_residuals(entry.boundary, np.array([0.7]),
                                                step=1e-3)
        assert float(g) < 1e-8 and float(c) < 1e-8

    def test_helicoid_edge(self):
        g, c = boundary_integrability_residuals(HELICOID.boundary, np.array([0.4]),
                                                step=1e-4)
        assert float(g) < 1e-6 and float(c) < 1e-6

    def test_hole_two_dimensional_edge(self):
        g, c = boundary_integrability_residuals(HOLE.boundary,
                                                np.array([0.3, 1.1]), step=1e-4)
        assert float(g) < 1e-6 and float(c) < 1e-6


class TestDirectEmbeddingResiduals:
    def test_straight_strip_edge(self):
        res = direct_embedding_residuals(PLANE.boundary, np.array([0.5]))
        assert res.max() < 1e-12

    def test_helicoid_edge_adapted_two_normals(self):
        res = direct_embedding_residuals(HELICOID.boundary, np.array([0.4]),
                                         step=1e-4)
        assert res.ricci is not None  # adapted basis {eta, n} has two normals
        assert res.max() < 1e-6

    def test_hole_edge(self):
        res = direct_embedding_residuals(HOLE.boundary, np.array([0.3, 1.1]),
                                         step=1e-4)
        assert res.max() < 1e-6

    def test_equilibrium_hole_euclidean(self):
        entry = catalog.euclidean_plane_hole(2.0)
        res = direct_embedding_residuals(entry.boundary, np.array([0.7]), step=1e-4)
        assert res.max() < 1e-6


class TestCurvatureTensors:
    def test_assembled_symmetries(self):
        ct = curvature_tensors(HOLE.boundary, np.array([0.3, 1.1]), step=1e-3)
        r = ct.worldsheet_riemann
        assert np.max(np.abs(r + np.swapaxes(r, -2, -1))) < 1e-12
        assert np.max(np.abs(r + np.swapaxes(r, -4, -3))) < 2e-5
        rb = ct.boundary_riemann
        assert np.max(np.abs(rb + np.swapaxes(rb, -4, -3))) < 2e-5
        assert np.all(ct.ambient_riemann == 0.0)
        omega = ct.adapted_twist_curvature
        assert np.max(np.abs(omega + np.swapaxes(omega, -1, -2))) < 1e-6

    def test_codimension_one_twist_sector_absent(self):
        ct = curvature_tensors(HELICOID.boundary, np.array([0.4]), step=1e-3)
        assert ct.twist_curvature is None
        assert ct.adapted_twist_curvature is not None
