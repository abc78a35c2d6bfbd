"""Quasilinear hyperbolic systems ``A^i(u) u_i = 0`` and the built-in catalogue.

A model is a family of ``p`` coefficient matrices, each ``q x q``, depending
on the state ``u`` only.  Catalogue entries also ship closed-form commuting
characteristic frames: wave vectors ``lambda^s(u)`` and polarizations
``gamma_s(u)`` rescaled so that their Lie brackets vanish.

Every model here has ``A^1 = I`` with ``x^1 = t`` the time coordinate, so the
wave vector of a branch with speed ``v`` is ``(-v, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._validation import check_vector
from .errors import DomainError

# analytic frame: u of shape (..., q) -> (lambda (..., p), gamma (..., q))
FrameField = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class HydroModel:
    """An evaluatable system of ``p`` coefficient matrices of size ``q x q``.

    Parameters
    ----------
    name : str
        Catalogue identifier.
    p, q : int
        Number of independent and dependent variables.
    variable_names : tuple of str
        ``p`` coordinate labels followed by ``q`` state labels.
    coefficients : callable
        Maps a state vector to a ``(p, q, q)`` array.
    domain : tuple of (lo, hi)
        Closed box in state space where the model is hyperbolic.
    analytic_frames : dict
        Selector name -> vectorized closed form ``u -> (lambda, gamma)``.
    sample_box : tuple of (lo, hi)
        Bounded sub-box of ``domain`` used for random state sampling.
    """

    name: str
    p: int
    q: int
    variable_names: tuple
    coefficients: Callable[[np.ndarray], np.ndarray]
    domain: tuple
    analytic_frames: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    sample_box: tuple = ()
    description: str = ""

    @property
    def coordinate_names(self) -> tuple:
        return tuple(self.variable_names[: self.p])

    @property
    def state_names(self) -> tuple:
        return tuple(self.variable_names[self.p :])

    def check_state(self, u, slack: float = 0.0) -> np.ndarray:
        """Validate ``u`` against the domain box; return it as an array.

        ``slack`` widens every bound by ``slack * (1 + |bound|)``; it only
        exists to absorb rounding when integrators land exactly on a bound.
        """
        u = check_vector(u, self.q, "state")
        for i, (lo, hi) in enumerate(self.domain):
            name = self.state_names[i]
            if u[i] < lo - slack * (1.0 + abs(lo)):
                raise DomainError(f"{self.name}: {name} = {u[i]!r} is below the lower bound {lo!r}")
            if u[i] > hi + slack * (1.0 + abs(hi)):
                raise DomainError(f"{self.name}: {name} = {u[i]!r} is above the upper bound {hi!r}")
        return u

    def in_domain(self, u, slack: float = 0.0) -> np.ndarray:
        """Vectorized domain test over states of shape ``(..., q)``."""
        u = np.asarray(u, dtype=float)
        ok = np.ones(u.shape[:-1], dtype=bool)
        for i, (lo, hi) in enumerate(self.domain):
            ok &= u[..., i] >= lo - slack * (1.0 + abs(lo))
            ok &= u[..., i] <= hi + slack * (1.0 + abs(hi))
        return ok & np.all(np.isfinite(u), axis=-1)

    def matrices(self, u) -> list[np.ndarray]:
        return eval_matrices(self, u)

    def descriptor(self) -> dict:
        return {
            "name": self.name,
            "p": self.p,
            "q": self.q,
            "variables": list(self.variable_names),
            "params": dict(self.params),
            "frames": sorted(self.analytic_frames),
            "description": self.description,
        }

    def config(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


def eval_matrices(model: HydroModel, u) -> list[np.ndarray]:
    """Return the ``p`` coefficient matrices ``A^1(u), ..., A^p(u)``.

    Raises
    ------
    DomainError
        If ``u`` lies strictly outside the model's domain box.
    """
    u = model.check_state(u)
    mats = np.asarray(model.coefficients(u), dtype=float)
    return [mats[i].copy() for i in range(model.p)]


def sample_states(model: HydroModel, n: int, seed: int = 0) -> np.ndarray:
    """Draw ``n`` states uniformly from the model's sampling box."""
    rng = np.random.default_rng(seed)
    box = np.asarray(model.sample_box, dtype=float)
    return rng.uniform(box[:, 0], box[:, 1], size=(n, model.q))


# -- shallow water -----------------------------------------------------------


def _shallow_water_coefficients(u):
    vel, c = u
    return np.array([np.eye(2), [[vel, 2.0 * c], [0.5 * c, vel]]])


def _sw_fast(u):
    u = np.asarray(u, dtype=float)
    vel, c = u[..., 0], u[..., 1]
    lam = np.stack([-(vel + c), np.ones_like(vel)], axis=-1)
    gam = np.stack([np.full_like(vel, 2.0), np.ones_like(vel)], axis=-1)
    return lam, gam


def _sw_slow(u):
    u = np.asarray(u, dtype=float)
    vel, c = u[..., 0], u[..., 1]
    lam = np.stack([-(vel - c), np.ones_like(vel)], axis=-1)
    gam = np.stack([np.full_like(vel, 2.0), -np.ones_like(vel)], axis=-1)
    return lam, gam


def shallow_water() -> HydroModel:
    # gamma_fast = 2 d/dR+, gamma_slow = -2 d/dR- for R+- = vel +- 2c
    return HydroModel(
        name="shallow-water",
        p=2,
        q=2,
        variable_names=("t", "x", "u", "c"),
        coefficients=_shallow_water_coefficients,
        domain=((-np.inf, np.inf), (0.0, np.inf)),
        analytic_frames={"fast": _sw_fast, "slow": _sw_slow},
        params={},
        sample_box=((-2.0, 2.0), (0.5, 3.0)),
        description="1-D shallow water in (velocity u, celerity c); speeds u +- c",
    )


# -- polytropic gas ----------------------------------------------------------


def gas_polytropic(kappa: float = 2.0) -> HydroModel:
    """Isentropic gas with ``p(rho) = rho^kappa / kappa``.

    The sound speed is ``a = rho^((kappa - 1) / 2)``; ``kappa = 2`` is the
    shallow-water system with ``rho`` the depth.
    """
    kappa = float(kappa)
    if not kappa > 1.0:
        raise ValueError(f"gas-polytropic needs kappa > 1, got {kappa}")
    half = 0.5 * (kappa - 1.0)

    def coefficients(u):
        rho, vel = u
        return np.array([np.eye(2), [[vel, rho], [rho ** (kappa - 2.0), vel]]])

    def frame(sign):
        def fields(u):
            u = np.asarray(u, dtype=float)
            rho, vel = u[..., 0], u[..., 1]
            a = rho**half
            lam = np.stack([-(vel + sign * a), np.ones_like(vel)], axis=-1)
            # d/dR+ and -d/dR- for the Riemann invariants vel +- a / half
            gam = np.stack([0.5 * rho**(1.0 - half), np.full_like(vel, 0.5 * sign)], axis=-1)
            return lam, gam

        return fields

    return HydroModel(
        name="gas-polytropic",
        p=2,
        q=2,
        variable_names=("t", "x", "rho", "u"),
        coefficients=coefficients,
        domain=((1e-12, np.inf), (-np.inf, np.inf)),
        analytic_frames={"fast": frame(1.0), "slow": frame(-1.0)},
        params={"kappa": kappa},
        sample_box=((0.5, 2.0), (-1.0, 1.0)),
        description="isentropic polytropic gas in (density rho, velocity u); speeds u +- a(rho)",
    )


# -- linear advection --------------------------------------------------------


def linear_advection(speed: float = 1.0) -> HydroModel:
    speed = float(speed)

    def coefficients(u):
        return np.array([[[1.0]], [[speed]]])

    def fields(u):
        u = np.asarray(u, dtype=float)
        w = u[..., 0]
        lam = np.stack([np.full_like(w, -speed), np.ones_like(w)], axis=-1)
        return lam, np.ones_like(u)

    return HydroModel(
        name="linear-advection",
        p=2,
        q=1,
        variable_names=("t", "x", "w"),
        coefficients=coefficients,
        domain=((-np.inf, np.inf),),
        analytic_frames={"fast": fields, "slow": fields},
        params={"speed": speed},
        sample_box=((-1.0, 1.0),),
        description="scalar advection w_t + speed w_x = 0",
    )


_CATALOGUE = {
    "shallow-water": shallow_water,
    "gas-polytropic": gas_polytropic,
    "linear-advection": linear_advection,
}


def list_models() -> list[dict]:
    """Descriptors of every catalogue model with default parameters."""
    return [factory().descriptor() for factory in _CATALOGUE.values()]


def get_model(name: str, **params) -> HydroModel:
    try:
        factory = _CATALOGUE[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; available: {', '.join(_CATALOGUE)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for model {name!r}: {exc}") from None


def model_from_config(entry: dict) -> HydroModel:
    """Build a model from ``{"name": ..., "params": {...}}``."""
    return get_model(entry["name"], **dict(entry.get("params") or {}))
