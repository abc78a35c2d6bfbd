import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riemann_kwave import (
    CatastropheError,
    ContractError,
    ImplicitProfile,
    NewtonSettings,
    PartialSurfaceError,
    check_lambda_constraints,
    get_model,
    integrate_surface,
    make_frame,
    path_independence_error,
    sample_grid,
)
from riemann_kwave.kwave import monomials

import cases


# -- profiles ----------------------------------------------------------------


def test_profile_gradients_match_finite_differences():
    profiles = [
        ImplicitProfile.linear([1.5, -2.0], 0.3),
        ImplicitProfile.gaussian(0.7, [0.1, -0.2], 0.5),
        ImplicitProfile.from_dict(cases.DOUBLE_PSI[0]),
    ]
    r = np.array([0.23, -0.11])
    for prof in profiles:
        val, grad = prof.value_and_gradient(r)
        assert val == prof(r)
        fd = [(prof(r + e) - prof(r - e)) / 2e-6 for e in np.eye(2) * 1e-6]
        np.testing.assert_allclose(grad, fd, atol=1e-7)


def test_profile_dict_round_trip():
    for d in cases.DOUBLE_PSI + ({"kind": "gaussian", "amplitude": 1.0, "center": [0.0], "width": 0.2},):
        assert ImplicitProfile.from_dict(d).to_dict() == ImplicitProfile.from_dict(
            ImplicitProfile.from_dict(d).to_dict()
        ).to_dict()


def test_bad_profiles_rejected():
    with pytest.raises((ContractError, ValueError)):
        ImplicitProfile.gaussian(1.0, [0.0], 0.0)
    with pytest.raises((ContractError, ValueError)):
        ImplicitProfile.from_dict({"kind": "spline"})


def test_monomials_count():
    assert len(monomials(2, 3)) == 10
    assert len(monomials(1, 3)) == 4


# -- surfaces ----------------------------------------------------------------


def test_constant_frame_surface():
    frame = cases.certified(cases.constant_lambda_frame(), [0.5, 0.7])
    surface = integrate_surface(frame, [0.5, 0.7], "-1:1:21,-1:1:21")
    np.testing.assert_allclose(surface.f([0.1, 0.2]), [0.6, 0.9], atol=1e-14)
    np.testing.assert_array_equal(surface.f([0.0, 0.0]), [0.5, 0.7])
    assert surface.path_error == 0.0


def test_shallow_water_surfaces():
    sw = cases.simple_wave()
    np.testing.assert_array_equal(sw.surface.f([0.0]), cases.BASE)
    np.testing.assert_allclose(sw.surface.f([0.5]), [1.0, 1.5], atol=1e-12)
    dw = cases.double_wave()
    assert dw.surface.consistency_residual() <= 1e-4
    assert dw.surface.path_error <= 1e-10


def test_gas_surface_refinement():
    g = get_model("gas-polytropic", kappa=1.4)
    frame = cases.certified(make_frame(g, ["fast", "slow"]), [1.0, 0.0])
    coarse = integrate_surface(frame, [1.0, 0.0], "-0.2:0.2:11,-0.2:0.2:11", substeps=1)
    fine = integrate_surface(frame, [1.0, 0.0], "-0.2:0.2:21,-0.2:0.2:21", substeps=1)
    assert fine.consistency_residual() <= 1e-4
    assert coarse.consistency_residual() / fine.consistency_residual() >= 3.0


def test_surface_leaving_domain():
    frame = cases.certified(make_frame(get_model("shallow-water"), ["fast"]), cases.BASE)
    with pytest.raises(PartialSurfaceError) as info:
        integrate_surface(frame, cases.BASE, "-3:1:41")
    assert info.value.axis == 0
    assert -3.0 < info.value.reached <= 0.0


def test_uncertified_frame_rejected():
    frame = make_frame(get_model("shallow-water"), ["fast", "slow"])
    with pytest.raises(ContractError):
        integrate_surface(frame, cases.BASE, cases.DOUBLE_RGRID)
    assert path_independence_error(frame, cases.BASE, "-0.2:0.2:5,-0.2:0.2:5") <= 1e-10


def test_grid_must_contain_origin():
    frame = cases.certified(make_frame(get_model("shallow-water"), ["fast"]), cases.BASE)
    with pytest.raises(ContractError):
        integrate_surface(frame, cases.BASE, "0.1:1:5")


def test_lambda_constraints():
    assert check_lambda_constraints(cases.simple_wave().surface).vacuous
    report = check_lambda_constraints(cases.double_wave().surface)
    assert report.finite


# -- implicit solve ----------------------------------------------------------


def test_simple_wave_oracles(simple_wave):
    assert simple_wave.solve([0.0, 0.0]).r[0] == pytest.approx(0.0, abs=1e-14)
    res = simple_wave.solve([0.0, 1.0])
    assert res.r[0] == pytest.approx(1.0, abs=1e-12)
    assert res.residual <= NewtonSettings().tol
    np.testing.assert_allclose(simple_wave.evaluate([0.0, 1.0]), [2.0, 2.0], atol=1e-12)


def test_catastrophe_detected(simple_wave):
    with pytest.raises(CatastropheError):
        simple_wave.solve([-1.0 / 3.0, 0.0])


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(-1.0, 1.0))
def test_warm_and_cold_agree(simple_wave, t, x):
    sw = simple_wave
    r_exact, _ = cases.closed_form([t, x])
    if abs(r_exact) > 0.99:
        return
    cold = sw.solve([t, x]).r
    warm = sw.solve([t, x], warm_start=[r_exact + 0.05]).r
    assert abs(cold[0] - warm[0]) <= 1e-10
    assert abs(cold[0] - r_exact) <= 1e-10


def test_batch_matches_scalar(double_wave):
    xs = np.array([[0.0, 0.0], [0.05, 0.1], [0.1, -0.2]])
    batch = double_wave.solve_batch(xs)
    for i, x in enumerate(xs):
        np.testing.assert_array_equal(batch.r[i], double_wave.solve(x).r)


def test_sample_grid_shapes(simple_wave):
    sample = sample_grid(simple_wave, "0:0.2:5,-0.5:0.5:11")
    assert sample.u.shape == (5, 11, 2)
    assert sample.n_unresolved == 0
    _, u = cases.closed_form(sample.x)
    np.testing.assert_allclose(sample.u, u, atol=1e-12)


def test_sample_grid_rejects_wrong_dimension(simple_wave):
    with pytest.raises(ContractError):
        sample_grid(simple_wave, "0:1:3")
