"""Reference configurations shared by the unit and acceptance tests."""

from __future__ import annotations

import numpy as np

from riemann_kwave import (
    Frame,
    ImplicitProfile,
    KWaveSolution,
    commutation_residual,
    get_model,
    integrate_surface,
    make_frame,
)
from riemann_kwave.geometry import certification_states

DEFAULT_XGRID = "0:0.5:51,-1:1:101"
SIMPLE_RGRID = "-1:1:201"
DOUBLE_RGRID = "-0.4:0.4:81,-0.4:0.4:81"
BASE = np.array([0.0, 1.0])

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []

# A pair of profiles compatible with the double-wave surface of the shallow-water
# fast/slow frame: with them the implicit system defines a genuine solution.
DOUBLE_PSI = (
    {"kind": "polynomial", "terms": [
        {"powers": [2, 0], "coef": 10.0}, {"powers": [1, 1], "coef": 4.0},
        {"powers": [1, 0], "coef": 8.0}, {"powers": [0, 2], "coef": 2.0},
    ]},
    {"kind": "polynomial", "terms": [
        {"powers": [2, 0], "coef": 2.0}, {"powers": [1, 1], "coef": 4.0},
        {"powers": [0, 2], "coef": 10.0}, {"powers": [0, 1], "coef": -8.0},
    ]},
)
# the same pair with one coefficient changed: no longer a solution
CORRUPT_PSI0 = {"kind": "polynomial", "terms": [
    {"powers": [2, 0], "coef": 10.0}, {"powers": [1, 1], "coef": 6.0},
    {"powers": [1, 0], "coef": 8.0}, {"powers": [0, 2], "coef": 2.0},
]}


def certified(frame, base):
    commutation_residual(frame, certification_states(frame, base))
    assert frame.commuting_certified
    return frame


def simple_wave() -> KWaveSolution:
    """k = 1 shallow-water fast wave with psi(r) = r: r = (x - t) / (1 + 3t)."""
    model = get_model("shallow-water")
    frame = certified(make_frame(model, ["fast"]), BASE)
    return KWaveSolution(integrate_surface(frame, BASE, SIMPLE_RGRID), [ImplicitProfile.linear([1.0])])


def double_wave(psi=DOUBLE_PSI) -> KWaveSolution:
    model = get_model("shallow-water")
    frame = certified(make_frame(model, ["fast", "slow"]), BASE)
    profiles = [ImplicitProfile.from_dict(p) for p in psi]
    return KWaveSolution(integrate_surface(frame, BASE, DOUBLE_RGRID), profiles)


def closed_form(x):
    x = np.asarray(x, dtype=float)
    t, xx = x[..., 0], x[..., 1]
    r = (xx - t) / (1.0 + 3.0 * t)
    return r, np.stack([2.0 * r, 1.0 + r], axis=-1)


def non_involutive_frame() -> Frame:
    """q = 3 pair ``v = (1, 0, 0)``, ``w = (0, 1, u1)``; ``[v, w] = (0, 0, 1)``."""

    def lam(u):
        return np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    def gam(u):
        return np.array([[1.0, 0.0, 0.0], [0.0, 1.0, u[0]]])

    return Frame.from_functions(lam, gam, p=3, q=3, k=2)


def perturbed_gas_frame(kappa=2.0) -> Frame:
    """The commuting gas frame with its second field rescaled by ``1 + rho``."""
    model = get_model("gas-polytropic", kappa=kappa)
    base = make_frame(model, ["fast", "slow"])

    def lam(u):
        return base.wave_vectors(u)

    def gam(u):
        g = np.array(base.polarizations(u))
        g[1] *= 1.0 + u[0]
        return g

    return Frame.from_functions(lam, gam, p=2, q=2, k=2, domain_check=model.check_state)


def constant_lambda_frame() -> Frame:
    """Constant wave vectors and polarizations on an unconstrained p = q = 2 space."""

    def lam(u):
        return np.array([[-1.0, 1.0], [1.0, 1.0]])

    def gam(u):
        return np.array([[1.0, 0.0], [0.0, 1.0]])

    return Frame.from_functions(lam, gam, p=2, q=2, k=2)
