"""Wave vectors and polarizations: the kernel problem ``(lambda_i A^i(u)) gamma = 0``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from ._validation import check_vector
from .errors import ContractError, NonHyperbolicError, NotAWaveVectorError
from .models import HydroModel, eval_matrices

RANK_TOL = 1e-8
# relative size of the discriminant below which two speeds are reported as one
COALESCE_TOL = 1e-14


@dataclass(frozen=True)
class WaveBranch:
    """A characteristic branch at one state.

    ``wave_vector`` has its last nonzero component equal to 1 and
    ``polarization`` is a unit vector with positive first nonzero component.
    """

    wave_vector: np.ndarray
    polarization: np.ndarray
    speed: float
    multiplicity: int = 1

    def to_dict(self) -> dict:
        return {
            "speed": float(self.speed),
            "lambda": [float(v) for v in self.wave_vector],
            "gamma": [float(v) for v in self.polarization],
            "multiplicity": int(self.multiplicity),
        }


def sign_normalize(v: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Flip ``v`` so that its first non-negligible component is positive."""
    v = np.asarray(v, dtype=float)
    scale = np.max(np.abs(v))
    for comp in v:
        if abs(comp) > tol * scale:
            return v if comp > 0 else -v
    return v


def normalize_wave_vector(lam: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Scale ``lam`` so that its last non-negligible component is 1."""
    lam = np.asarray(lam, dtype=float)
    scale = np.max(np.abs(lam))
    for comp in lam[::-1]:
        if abs(comp) > tol * scale:
            return lam / comp
    raise ValueError("wave vector is zero")


def symbol_matrix(model: HydroModel, u, lam) -> np.ndarray:
    """``lambda_i A^i(u)``."""
    mats = eval_matrices(model, u)
    lam = check_vector(lam, model.p, "lambda")
    return np.tensordot(lam, np.asarray(mats), axes=1)


def wave_relation_residual(model: HydroModel, u, lam, gamma) -> float:
    """``|| (lambda_i A^i(u)) gamma ||_2``.

    Raises ``ValueError`` for a zero ``lambda`` or ``gamma``, for which the
    residual says nothing about kernel membership.
    """
    lam = check_vector(lam, model.p, "lambda")
    gamma = check_vector(gamma, model.q, "gamma")
    if not np.any(lam):
        raise ValueError("lambda is the zero vector")
    if not np.any(gamma):
        raise ValueError("gamma is the zero vector")
    return float(np.linalg.norm(symbol_matrix(model, u, lam) @ gamma))


def scaled_wave_residual(model: HydroModel, u, lam, gamma) -> float:
    """Residual divided by ``|lambda| |gamma| max_i |A^i(u)|``."""
    mats = eval_matrices(model, u)
    scale = np.linalg.norm(lam) * np.linalg.norm(gamma) * max(np.linalg.norm(a, 2) for a in mats)
    return wave_relation_residual(model, u, lam, gamma) / scale


def kernel_vector(model: HydroModel, u, lam, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Unit vector spanning the least-singular direction of ``lambda_i A^i(u)``.

    Raises
    ------
    NotAWaveVectorError
        If the smallest singular value exceeds ``rank_tol`` times the largest.
    """
    m = symbol_matrix(model, u, lam)
    _, s, vt = np.linalg.svd(m)
    if s[0] > 0 and s[-1] > rank_tol * s[0]:
        raise NotAWaveVectorError(
            f"lambda = {np.asarray(lam).tolist()} is not a wave vector at u = {np.asarray(u).tolist()}: "
            f"smallest singular value {s[-1]:.3e} (largest {s[0]:.3e})",
            smallest_singular_value=float(s[-1]),
        )
    return sign_normalize(vt[-1])


def _speeds_p2(a1: np.ndarray, a2: np.ndarray, u) -> list[tuple[float, int]]:
    """Real roots ``c`` of ``det(A^2 - c A^1) = 0`` with multiplicities."""
    q = a2.shape[0]
    if q == 1:
        return [(float(a2[0, 0] / a1[0, 0]), 1)]
    if q == 2 and np.array_equal(a1, np.eye(2)):
        # roots mean +- sqrt(disc); disc written so it is exact when the
        # off-diagonal product carries the physics (e.g. 4 c^2 / 4)
        (a, b), (c, d) = a2
        mean = 0.5 * (a + d)
        disc = (0.5 * (a - d)) ** 2 + b * c
        scale = max(abs(a), abs(b), abs(c), abs(d), np.finfo(float).tiny)
        if disc < -(COALESCE_TOL * scale) ** 2:
            raise NonHyperbolicError(
                f"non-hyperbolic state u = {np.asarray(u).tolist()}: speeds {mean} +- {np.sqrt(-disc)}i",
                state=np.asarray(u, dtype=float),
            )
        root = np.sqrt(max(disc, 0.0))
        if root <= COALESCE_TOL * scale:
            return [(float(mean), 2)]
        return [(float(mean - root), 1), (float(mean + root), 1)]
    ev = scipy.linalg.eigvals(a2, a1)
    if not np.all(np.isfinite(ev)):
        raise ContractError("A^1 is singular; the speed pencil has infinite roots")
    scale = max(np.max(np.abs(ev)), 1.0)
    if np.any(np.abs(ev.imag) > 1e-10 * scale):
        raise NonHyperbolicError(
            f"non-hyperbolic state u = {np.asarray(u).tolist()}: complex speeds {ev.tolist()}",
            state=np.asarray(u, dtype=float),
        )
    speeds = np.sort(ev.real)
    groups: list[list[float]] = []
    for c in speeds:
        if groups and abs(c - groups[-1][-1]) <= 1e-10 * scale:
            groups[-1].append(c)
        else:
            groups.append([c])
    return [(float(np.mean(g)), len(g)) for g in groups]


@dataclass(frozen=True)
class Pencil:
    """One-parameter family ``lambda(mu) = offset + mu * direction`` for ``p > 2``."""

    direction: np.ndarray
    offset: np.ndarray
    bracket: tuple = (-10.0, 10.0)
    n_scan: int = 2001


def _pencil_roots(model: HydroModel, u, pencil: Pencil) -> list[tuple[float, int]]:
    mats = np.asarray(eval_matrices(model, u))
    n = check_vector(pencil.direction, model.p, "pencil direction")
    n = n / np.linalg.norm(n)
    e = check_vector(pencil.offset, model.p, "pencil offset")

    def det(mu):
        return np.linalg.det(np.tensordot(e + mu * n, mats, axes=1))

    grid = np.linspace(*pencil.bracket, pencil.n_scan)
    vals = np.array([det(mu) for mu in grid])
    roots = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(grid[i])
        elif vals[i] * vals[i + 1] < 0:
            roots.append(brentq(det, grid[i], grid[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps))
    if vals[-1] == 0.0:
        roots.append(grid[-1])
    return [(float(mu), 1) for mu in roots]


def characteristic_branches(model: HydroModel, u, pencil: Pencil | None = None) -> list[WaveBranch]:
    """All real characteristic branches at ``u``, sorted by ascending speed.

    For ``p = 2`` the speed ``c`` is a root of ``det(-c A^1 + A^2) = 0`` and the
    wave vector is ``(-c, 1)``.  For ``p > 2`` a :class:`Pencil` must be given;
    the reported speed is then the pencil parameter ``mu``.
    """
    u = model.check_state(u)
    mats = eval_matrices(model, u)
    if model.p == 2:
        roots = _speeds_p2(mats[0], mats[1], u)
        lams = [np.array([-c, 1.0]) for c, _ in roots]
    else:
        if pencil is None:
            raise ContractError(f"{model.name} has p = {model.p} > 2; a pencil direction is required")
        roots = _pencil_roots(model, u, pencil)
        n = np.asarray(pencil.direction, dtype=float)
        n = n / np.linalg.norm(n)
        lams = [normalize_wave_vector(np.asarray(pencil.offset, dtype=float) + mu * n) for mu, _ in roots]
    branches = []
    for (speed, mult), lam in zip(roots, lams):
        gamma = kernel_vector(model, u, lam)
        branches.append(WaveBranch(lam, gamma, speed, mult))
    branches.sort(key=lambda b: (b.speed, tuple(b.polarization)))
    return branches
