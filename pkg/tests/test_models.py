import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riemann_kwave import DomainError, eval_matrices, get_model, list_models, model_from_config
from riemann_kwave.models import sample_states


def test_catalogue_contents():
    cat = {m["name"]: m for m in list_models()}
    assert (cat["shallow-water"]["p"], cat["shallow-water"]["q"]) == (2, 2)
    assert (cat["gas-polytropic"]["p"], cat["gas-polytropic"]["q"]) == (2, 2)
    assert all(m["p"] >= 2 and m["q"] >= 1 for m in cat.values())


def test_shallow_water_matrices_oracle():
    a1, a2 = eval_matrices(get_model("shallow-water"), [1.0, 2.0])
    np.testing.assert_array_equal(a1, np.eye(2))
    np.testing.assert_array_equal(a2, [[1.0, 4.0], [1.0, 1.0]])
    _, a2 = eval_matrices(get_model("shallow-water"), [0.0, 1.0])
    np.testing.assert_array_equal(a2, [[0.0, 2.0], [0.5, 0.0]])


def test_domain_error_names_bound():
    with pytest.raises(DomainError, match="c"):
        eval_matrices(get_model("shallow-water"), [0.0, -1.0])


def test_boundary_is_allowed():
    eval_matrices(get_model("shallow-water"), [0.5, 0.0])


def test_gas_matrices():
    gas = get_model("gas-polytropic", kappa=1.4)
    rho, u = 1.3, -0.2
    _, a2 = eval_matrices(gas, [rho, u])
    np.testing.assert_allclose(a2, [[u, rho], [rho ** (1.4 - 2.0), u]], rtol=1e-15)


def test_unknown_model_and_bad_params():
    with pytest.raises(ValueError):
        get_model("no-such-model")
    with pytest.raises(ValueError):
        get_model("gas-polytropic", kappa=1.0)


def test_model_from_config():
    m = model_from_config({"name": "gas-polytropic", "params": {"kappa": 1.4}})
    assert m.params["kappa"] == 1.4
    assert m.config() == {"name": "gas-polytropic", "params": {"kappa": 1.4}}


def test_bitwise_deterministic():
    m = get_model("gas-polytropic")
    a = eval_matrices(m, [1.1, 0.3])
    b = eval_matrices(m, [1.1, 0.3])
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


@pytest.mark.parametrize("name", [m["name"] for m in list_models()])
def test_sampled_matrices_finite(name):
    m = get_model(name)
    for u in sample_states(m, 50, seed=3):
        assert all(np.all(np.isfinite(a)) for a in eval_matrices(m, u))


@settings(max_examples=200, deadline=None)
@given(st.floats(-5, 5), st.floats(1e-3, 5))
def test_shallow_water_eigenvalues(u, c):
    _, a2 = eval_matrices(get_model("shallow-water"), [u, c])
    roots = np.sort(np.roots([1.0, -np.trace(a2), np.linalg.det(a2)]).real)
    np.testing.assert_allclose(roots, [u - c, u + c], atol=1e-12 * (1 + abs(u) + c))


def test_linear_advection_travelling_wave():
    from riemann_kwave import verify_grid

    m = get_model("linear-advection", speed=2.0)
    assert m.q == 1
    report = verify_grid(m, lambda x: np.array([np.tanh(x[1] - 2.0 * x[0])]), "0:0.5:6,-1:1:11")
    assert report.passed and report.max_rank == 1 and report.k == 1
