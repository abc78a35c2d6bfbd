"""Polarizations as vector fields on hodograph space.

Lie brackets, span membership, the two involutivity conditions on a frame of
``k`` characteristic branches, and certification of commuting frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from ._fd import default_state_step
from ._validation import check_vector
from .errors import ContractError, DomainError, FrameDegeneracyError
from .models import HydroModel
from .wave import characteristic_branches

VectorField = Callable[[np.ndarray], np.ndarray]


@dataclass
class Frame:
    """``k`` characteristic branches ``(lambda^s(u), gamma_s(u))``.

    ``fields`` maps a state to the stacked wave vectors ``(k, p)`` and
    polarizations ``(k, q)``.  ``vectorized`` frames accept states with
    arbitrary leading dimensions.
    """

    selectors: tuple
    p: int
    q: int
    fields: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    model: HydroModel | None = None
    vectorized: bool = False
    tracked: bool = False
    domain_check: Callable[[np.ndarray], None] | None = None
    commuting_certified: bool = False

    @property
    def k(self) -> int:
        return len(self.selectors)

    def evaluate(self, u) -> tuple[np.ndarray, np.ndarray]:
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            self.check_state(u)
            lam, gam = self.fields(u)
            return np.asarray(lam, dtype=float), np.asarray(gam, dtype=float)
        if self.vectorized:
            return self.fields(u)
        flat = u.reshape(-1, self.q)
        pairs = [self.fields(v) for v in flat]
        lam = np.array([pr[0] for pr in pairs]).reshape(u.shape[:-1] + (self.k, self.p))
        gam = np.array([pr[1] for pr in pairs]).reshape(u.shape[:-1] + (self.k, self.q))
        return lam, gam

    def wave_vectors(self, u) -> np.ndarray:
        return self.evaluate(u)[0]

    def polarizations(self, u) -> np.ndarray:
        return self.evaluate(u)[1]

    def polarization_field(self, s: int) -> VectorField:
        return lambda u: self.evaluate(u)[1][s]

    def wave_vector_field(self, s: int) -> VectorField:
        return lambda u: self.evaluate(u)[0][s]

    def check_state(self, u) -> None:
        if self.domain_check is not None:
            self.domain_check(u)
        elif self.model is not None:
            self.model.check_state(u)

    @classmethod
    def from_functions(cls, wave_vectors, polarizations, p: int, q: int, k: int = 2, domain_check=None):
        """Frame of ``k`` fields from per-state callables returning ``(k, p)`` and ``(k, q)`` arrays.

        Used for synthetic fields that do not come from a catalogue model.
        """
        selectors = tuple(f"s{i + 1}" for i in range(k))

        def fields(u):
            return np.atleast_2d(np.asarray(wave_vectors(u), dtype=float)), np.atleast_2d(
                np.asarray(polarizations(u), dtype=float)
            )

        return cls(tuple(selectors), int(p), int(q), fields, domain_check=domain_check)


def _select_branch(branches, selector):
    if selector == "fast":
        return branches[-1]
    if selector == "slow":
        return branches[0]
    try:
        return branches[int(selector)]
    except (ValueError, IndexError):
        raise ValueError(f"unknown branch selector {selector!r}") from None


def make_frame(model: HydroModel, selectors: Sequence[str], tracked: bool = False) -> Frame:
    """Frame of catalogue branches.

    With ``tracked=False`` the model's analytic commuting frames are used;
    with ``tracked=True`` each field is the unit kernel vector returned by
    :func:`~riemann_kwave.wave.characteristic_branches` (no rescaling).
    """
    selectors = tuple(str(s) for s in selectors)
    if not 1 <= len(selectors) <= model.p:
        raise ContractError(f"frame needs 1 <= k <= p = {model.p} branches, got {len(selectors)}")
    if len(set(selectors)) != len(selectors):
        raise ContractError(f"frame selectors must be distinct, got {selectors}")

    if not tracked:
        missing = [s for s in selectors if s not in model.analytic_frames]
        if missing:
            raise ValueError(f"{model.name} has no analytic frame for {missing}; use tracked=True")
        closed = [model.analytic_frames[s] for s in selectors]

        def fields(u):
            pairs = [fn(u) for fn in closed]
            return np.stack([pr[0] for pr in pairs], axis=-2), np.stack([pr[1] for pr in pairs], axis=-2)

        return Frame(selectors, model.p, model.q, fields, model=model, vectorized=True)

    def tracked_fields(u):
        branches = characteristic_branches(model, u)
        chosen = [_select_branch(branches, s) for s in selectors]
        return np.array([b.wave_vector for b in chosen]), np.array([b.polarization for b in chosen])

    return Frame(selectors, model.p, model.q, tracked_fields, model=model, tracked=True)


def field_jacobian(v: VectorField, u: np.ndarray, h: float, check=None) -> np.ndarray:
    """``dv^a / du^b`` by central differences with a uniform step ``h``."""
    u = np.asarray(u, dtype=float)
    cols = []
    for b in range(u.shape[0]):
        up = u.copy()
        um = u.copy()
        up[b] += h
        um[b] -= h
        if check is not None:
            check(up)
            check(um)
        cols.append((np.asarray(v(up), dtype=float) - np.asarray(v(um), dtype=float)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def lie_bracket(v: VectorField, w: VectorField, u, h: float | None = None, check=None) -> np.ndarray:
    """``[v, w]^a = v^b dw^a/du^b - w^b dv^a/du^b`` by central differences.

    ``check`` (a state validator such as ``model.check_state``) is applied to
    every stencil point; it raises :class:`~riemann_kwave.errors.DomainError`
    when the stencil leaves the domain.
    """
    u = check_vector(u, name="state")
    h = default_state_step(u) if h is None else float(h)
    if not h > 0:
        raise ContractError(f"step h must be positive, got {h}")
    jv = field_jacobian(v, u, h, check)
    jw = field_jacobian(w, u, h, check)
    return jw @ np.asarray(v(u), dtype=float) - jv @ np.asarray(w(u), dtype=float)


def span_distance(target, basis) -> tuple[float, np.ndarray]:
    """Least-squares distance of ``target`` from ``span(basis)`` and the coefficients.

    The coefficients are the minimum-norm minimizer, so a rank-deficient basis
    still yields a definite answer.  An empty basis gives ``|target|``.
    """
    t = np.asarray(target, dtype=float)
    basis = [np.asarray(b, dtype=float) for b in basis]
    if not basis:
        return float(np.linalg.norm(t)), np.zeros(0)
    mat = np.stack(basis, axis=1)
    coef, *_ = np.linalg.lstsq(mat, t, rcond=None)
    return float(np.linalg.norm(t - mat @ coef)), coef


@dataclass
class PairCheck:
    state_index: int
    s: int
    r: int
    bracket_residual: float
    bracket_coefficients: np.ndarray
    bracket_scale: float
    lambda_sr_residual: float
    lambda_sr_coefficients: np.ndarray
    lambda_rs_residual: float
    lambda_rs_coefficients: np.ndarray
    lambda_scale: float
    commutation: float

    def passed(self, tol: float) -> bool:
        return (
            self.bracket_residual <= tol * self.bracket_scale
            and max(self.lambda_sr_residual, self.lambda_rs_residual) <= tol * self.lambda_scale
        )

    def to_dict(self) -> dict:
        return {
            "state_index": self.state_index,
            "pair": [self.s, self.r],
            "bracket_residual": self.bracket_residual,
            "bracket_coefficients": self.bracket_coefficients.tolist(),
            "lambda_sr_residual": self.lambda_sr_residual,
            "lambda_sr_coefficients": self.lambda_sr_coefficients.tolist(),
            "lambda_rs_residual": self.lambda_rs_residual,
            "lambda_rs_coefficients": self.lambda_rs_coefficients.tolist(),
            "commutation": self.commutation,
        }


@dataclass
class InvolutivityReport:
    sample_states: np.ndarray
    checks: list = field(default_factory=list)
    tol: float = 1e-6

    @property
    def passed(self) -> bool:
        return all(c.passed(self.tol) for c in self.checks)

    @property
    def max_bracket_residual(self) -> float:
        return max((c.bracket_residual for c in self.checks), default=0.0)

    @property
    def max_lambda_residual(self) -> float:
        return max((max(c.lambda_sr_residual, c.lambda_rs_residual) for c in self.checks), default=0.0)

    @property
    def max_commutation(self) -> float:
        return max((c.commutation for c in self.checks), default=0.0)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "max_bracket_residual": self.max_bracket_residual,
            "max_lambda_residual": self.max_lambda_residual,
            "max_commutation": self.max_commutation,
            "sample_states": np.asarray(self.sample_states).tolist(),
            "checks": [c.to_dict() for c in self.checks],
        }


def _check_independent(frame: Frame, u, lam, gam):
    for name, stack in (("wave vectors", lam), ("polarizations", gam)):
        s = np.linalg.svd(stack, compute_uv=False)
        if s[-1] <= 1e-8 * s[0]:
            raise FrameDegeneracyError(
                f"frame {frame.selectors}: {name} are linearly dependent at u = {np.asarray(u).tolist()}",
                state=np.asarray(u),
            )


def check_involutivity(frame: Frame, states, h: float | None = None, tol: float = 1e-6) -> InvolutivityReport:
    """Evaluate both involutivity conditions at every state.

    For each unordered pair ``s < r``: the distance of ``[gamma_s, gamma_r]``
    from ``span{gamma_s, gamma_r}``, and the distances of the directional
    derivatives ``lambda^s_{,gamma_r}`` and ``lambda^r_{,gamma_s}`` from
    ``span{lambda^s, lambda^r}``.  A check passes when each residual is at most
    ``tol`` times the matching product of local field magnitudes.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    report = InvolutivityReport(states, tol=tol)
    for idx, u in enumerate(states):
        step = default_state_step(u) if h is None else float(h)
        lam, gam = frame.evaluate(u)
        _check_independent(frame, u, lam, gam)
        if frame.k < 2:
            continue
        lam_jac = [field_jacobian(frame.wave_vector_field(s), u, step, frame.check_state) for s in range(frame.k)]
        gam_jac = [field_jacobian(frame.polarization_field(s), u, step, frame.check_state) for s in range(frame.k)]
        for s, r in combinations(range(frame.k), 2):
            bracket = gam_jac[r] @ gam[s] - gam_jac[s] @ gam[r]
            b_res, b_coef = span_distance(bracket, [gam[s], gam[r]])
            sr_res, sr_coef = span_distance(lam_jac[s] @ gam[r], [lam[s], lam[r]])
            rs_res, rs_coef = span_distance(lam_jac[r] @ gam[s], [lam[r], lam[s]])
            g_mag = max(np.linalg.norm(gam[s]), np.linalg.norm(gam[r]))
            l_mag = max(np.linalg.norm(lam[s]), np.linalg.norm(lam[r]))
            report.checks.append(
                PairCheck(
                    idx, s, r, b_res, b_coef, g_mag**2,
                    sr_res, sr_coef, rs_res, rs_coef, l_mag * g_mag,
                    float(np.linalg.norm(bracket)),
                )
            )
    return report


def commutation_residual(frame: Frame, states, h: float | None = None) -> float:
    """``max ||[gamma_s, gamma_r](u)||`` over states and pairs; certifies the frame.

    ``frame.commuting_certified`` is set to whether the maximum is at most
    ``1e-6`` times the largest polarization magnitude seen.  Single-wave frames
    are certified vacuously.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    worst = 0.0
    magnitude = 0.0
    for u in states:
        step = default_state_step(u) if h is None else float(h)
        gam = frame.polarizations(u)
        magnitude = max(magnitude, float(np.max(np.linalg.norm(gam, axis=1))))
        for s, r in combinations(range(frame.k), 2):
            b = lie_bracket(frame.polarization_field(s), frame.polarization_field(r), u, step, frame.check_state)
            worst = max(worst, float(np.linalg.norm(b)))
    frame.commuting_certified = worst <= 1e-6 * magnitude
    return worst


def certification_states(frame: Frame, base_state, n: int = 25, seed: int = 0, radius: float = 0.1) -> np.ndarray:
    """Base state plus ``n - 1`` states drawn in a box of relative ``radius`` around it."""
    base = np.asarray(base_state, dtype=float)
    rng = np.random.default_rng(seed)
    spread = radius * (1.0 + np.abs(base))
    pts = [base]
    for _ in range(100 * n):
        if len(pts) >= n:
            break
        cand = base + rng.uniform(-spread, spread)
        try:
            frame.check_state(cand)
        except DomainError:
            continue
        pts.append(cand)
    return np.array(pts)
