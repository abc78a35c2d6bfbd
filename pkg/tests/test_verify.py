import numpy as np
import pytest

from riemann_kwave import get_model, pde_residual, solution_rank, verify_grid
from riemann_kwave.verify import pde_residuals

import cases

SW = get_model("shallow-water")


def test_constant_solution_residual():
    assert pde_residual(SW, lambda x: np.array([0.3, 1.2]), [0.4, -0.1]) <= 1e-13


def test_non_solution_residual_is_order_one():
    assert pde_residual(SW, lambda x: np.array([x[1], 1.0 + x[0]]), [0.2, 0.3]) > 0.1


def test_closed_form_residual():
    def exact(x):
        return cases.closed_form(x)[1]

    assert pde_residual(SW, exact, [0.1, 0.3]) <= 1e-8


def test_residual_second_order():
    # u = (sin 3x, 1) is not a solution; its residual is A^2(u) (3 cos 3x, 0)
    def field(x):
        return np.array([np.sin(3 * x[1]), 1.0])

    x = np.array([0.0, 0.2])
    exact = 3 * abs(np.cos(0.6)) * np.hypot(np.sin(0.6), 0.5)
    e1 = abs(pde_residual(SW, field, x, h=1e-2) - exact)
    e2 = abs(pde_residual(SW, field, x, h=5e-3) - exact)
    assert 3.5 <= e1 / e2 <= 4.5


def test_rank_of_closed_form():
    assert solution_rank(lambda x: cases.closed_form(x)[1], [0.1, 0.2])[0] == 1
    assert solution_rank(lambda x: np.array([1.0, 2.0]), [0.1, 0.2])[0] == 0


def test_verify_simple_wave(simple_wave):
    report = verify_grid(SW, simple_wave, "0:0.2:5,-0.5:0.5:11")
    assert report.passed and report.exit_code == 0
    assert report.max_rank == 1
    assert report.max_residual <= 1e-6


def test_any_profile_gives_a_simple_wave(simple_wave):
    shifted = simple_wave.with_profiles([cases.ImplicitProfile.linear([1.0], 0.05)])
    assert verify_grid(SW, shifted, "0:0.2:5,-0.5:0.5:11").passed


def test_verify_corrupted_solution_fails():
    bad = cases.double_wave((cases.CORRUPT_PSI0, cases.DOUBLE_PSI[1]))
    report = verify_grid(SW, bad, "0:0.1:5,-0.2:0.2:9")
    assert report.max_residual > 1e3 * report.residual_tol
    assert not report.passed


def test_verify_plain_callable_uses_bound_min_pq():
    report = verify_grid(SW, lambda x: np.array([x[1], 1.0 + x[0]]), "0:0.1:3,0:0.1:3")
    assert report.k == 2
    assert not report.passed


def test_unresolved_points_exit_three(simple_wave):
    report = verify_grid(SW, simple_wave, "-0.5:-0.3:3,-1:1:5")
    assert report.n_unresolved > 0
    assert report.exit_code == 3


def test_batched_residuals_match_scalar(double_wave):
    xs = np.array([[0.02, 0.05], [0.05, -0.1]])
    batch = pde_residuals(SW, double_wave, xs)
    for i, x in enumerate(xs):
        scalar = pde_residual(SW, double_wave.field(double_wave.solve(x).r), x)
        assert batch[i] == pytest.approx(scalar, rel=1e-9, abs=1e-15)


def test_report_serializes(simple_wave):
    doc = verify_grid(SW, simple_wave, "0:0.1:2,0:0.1:2").to_dict()
    assert doc["passed"] and len(doc["points"]) == 4
