import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riemann_kwave import FrameDegeneracyError, annihilating_fields, annihilators, invariance_residual
from riemann_kwave import rectification_check, reduced_system_residual
from riemann_kwave.symmetry import invariance_residuals, rectified_coordinates, symmetry_report, tangent_phi

import cases


def test_annihilator_oracle():
    ann = annihilators([[-3.0, 1.0]])
    np.testing.assert_allclose(ann.basis, [np.array([1.0, 3.0]) / np.sqrt(10.0)], atol=1e-15)
    assert ann.free_columns == (1,) or ann.free_columns == (0,)


def test_annihilators_empty_when_k_equals_p():
    ann = annihilators([[1.0, 1.0], [-3.0, 1.0]])
    assert ann.basis.shape == (0, 2)


def test_annihilators_in_three_dimensions():
    ann = annihilators([[1.0, 0.0, 0.0]])
    np.testing.assert_allclose(np.abs(ann.basis), [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], atol=1e-15)


def test_dependent_wave_vectors():
    with pytest.raises(FrameDegeneracyError):
        annihilators([[1.0, 2.0], [2.0, 4.0]])


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(0.1, 100) | st.floats(-100, -0.1))
def test_annihilator_projector_scale_invariant(c, a):
    lam = np.array([[c, 1.0]])
    b1 = annihilators(lam).basis
    b2 = annihilators(a * lam).basis
    np.testing.assert_allclose(b1.T @ b1, b2.T @ b2, atol=1e-12)
    np.testing.assert_allclose(lam @ b1.T, 0.0, atol=1e-12)


def test_annihilating_fields_of_frame(simple_wave):
    ann = annihilating_fields(simple_wave.frame, [1.0, 2.0])
    np.testing.assert_allclose(ann.basis, [np.array([1.0, 3.0]) / np.sqrt(10.0)], atol=1e-15)


def test_tangent_phi_is_minus_implicit_jacobian(simple_wave):
    for x in ([0.1, 0.2], [0.3, -0.4], [0.0, 0.5]):
        x = np.array(x)
        res = simple_wave.solve(x)
        _, jac, _, _ = simple_wave.implicit_system(res.r, x)
        u = simple_wave.surface.f(res.r)
        phi = tangent_phi(simple_wave.frame, u, x, simple_wave.frame.polarizations(u).T)
        np.testing.assert_allclose(phi, -jac, atol=1e-8)
        assert res.phi_det == pytest.approx(np.linalg.det(phi), rel=1e-8)


def test_invariance_of_simple_wave(simple_wave):
    assert invariance_residual(simple_wave, [0.2, 0.3]) <= 1e-6


def test_non_invariant_field(simple_wave):
    def field(x):
        return np.array([x[1] ** 2, x[0]])

    assert invariance_residual(simple_wave, [0.2, 0.3], field=field) > 0.1


def test_constant_field_is_invariant(simple_wave):
    def field(x):
        return np.array([0.0, 1.0])

    assert invariance_residual(simple_wave, [0.2, 0.3], field=field) <= 1e-13


def test_batched_invariance_matches_scalar(simple_wave):
    xs = np.array([[0.1, 0.2], [0.3, -0.4]])
    batch = invariance_residuals(simple_wave, xs)
    for i, x in enumerate(xs):
        assert batch[i] == pytest.approx(invariance_residual(simple_wave, x), abs=1e-12)


def test_rectification_exact_for_simple_wave(simple_wave):
    report = rectification_check(simple_wave, "0:0.2:5,-0.5:0.5:11")
    assert report.passed()
    assert report.max_normalized == 0.0


def test_rectification_vacuous_for_double_wave(double_wave):
    assert rectification_check(double_wave, "0:0.1:3,-0.1:0.1:3").vacuous


def test_rectified_coordinates(simple_wave):
    pt = rectified_coordinates(simple_wave, [0.1, 0.2])
    r, u = cases.closed_form([0.1, 0.2])
    assert pt.xbar[0] == pytest.approx(r, abs=1e-12)
    np.testing.assert_allclose(pt.ubar, u, atol=1e-12)


def test_reduced_system(simple_wave, double_wave):
    assert reduced_system_residual(simple_wave, [0.1, 0.2]) <= 1e-6
    assert reduced_system_residual(double_wave, [0.05, 0.05]) <= 1e-6


def test_symmetry_report_keys(simple_wave):
    rep = symmetry_report(simple_wave, "0:0.2:3,-0.5:0.5:5")
    assert rep["n_points"] == 15 and rep["n_failed"] == 0
    assert rep["invariance"]["max"] <= 1e-6
    assert not rep["invariance"]["vacuous"]
