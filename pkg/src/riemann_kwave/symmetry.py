"""Conditional-symmetry checks on constructed k-waves.

The ``p - k`` directions ``xi_a`` annihilated by every wave vector generate
vector fields ``X_a = xi_a^i d/dx^i`` that leave the graph of a k-wave
invariant.  In rectified coordinates ``xbar = (r^1..r^k, x^{k+1}..x^p)`` these
fields become coordinate derivatives, the invariance conditions read
``ubar_{k+1} = ... = ubar_p = 0``, and the original system collapses to the
reduced system in the ``k`` Riemann-invariant directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._fd import batch_central_jacobian, central_jacobian, default_state_step
from ._validation import check_vector, grid_points, parse_grid
from .errors import CatastropheError, FrameDegeneracyError, RiemannKWaveError
from .geometry import Frame, field_jacobian
from .kwave import KWaveSolution, sample_grid
from .wave import sign_normalize


@dataclass(frozen=True)
class Annihilators:
    """Null-space data for a stack of ``k`` wave vectors in ``R^p``.

    ``basis`` is orthonormal; ``rectifying_basis`` holds the coefficient
    vectors of ``d/dx^a - sum (Lambda^-1 lambda_a)^l d/dx^l`` for the columns
    ``a`` not selected into ``Lambda``.
    """

    wave_vectors: np.ndarray
    basis: np.ndarray
    columns: tuple
    free_columns: tuple
    Lambda: np.ndarray
    rectifying_basis: np.ndarray

    def to_dict(self) -> dict:
        return {
            "wave_vectors": self.wave_vectors.tolist(),
            "basis": self.basis.tolist(),
            "columns": list(self.columns),
            "free_columns": list(self.free_columns),
            "Lambda": self.Lambda.tolist(),
            "rectifying_basis": self.rectifying_basis.tolist(),
        }


def annihilators(wave_vectors) -> Annihilators:
    """Orthonormal basis of ``{xi : lambda^j . xi = 0 for all j}``.

    ``Lambda`` is the ``k x k`` block picked by column-pivoted QR, which is the
    greedy largest-pivot choice.
    """
    lam = np.atleast_2d(np.asarray(wave_vectors, dtype=float))
    k, p = lam.shape
    s = np.linalg.svd(lam, compute_uv=False)
    if s[-1] <= 1e-10 * s[0]:
        raise FrameDegeneracyError(f"wave vectors {lam.tolist()} are linearly dependent")
    _, _, piv = scipy.linalg.qr(lam, pivoting=True)
    columns = tuple(sorted(int(c) for c in piv[:k]))
    free = tuple(c for c in range(p) if c not in columns)
    big = lam[:, list(columns)]
    if p == k:
        empty = np.zeros((0, p))
        return Annihilators(lam, empty, columns, free, big, empty)
    # projector onto the null space, then a pivoted QR of it for a stable ordered basis
    proj = np.eye(p) - lam.T @ np.linalg.solve(lam @ lam.T, lam)
    q_mat, _, _ = scipy.linalg.qr(proj, pivoting=True)
    basis = np.array([sign_normalize(q_mat[:, a]) for a in range(p - k)])
    rect = []
    for a in free:
        xi = np.zeros(p)
        xi[a] = 1.0
        xi[list(columns)] = -np.linalg.solve(big, lam[:, a])
        rect.append(xi)
    return Annihilators(lam, basis, columns, free, big, np.array(rect))


def annihilating_fields(frame: Frame, u) -> Annihilators:
    """The annihilating directions ``xi_a(u)`` of a frame at the state ``u``."""
    return annihilators(frame.wave_vectors(u))


@dataclass(frozen=True)
class RectifiedPoint:
    xbar: np.ndarray
    ubar: np.ndarray


def rectified_coordinates(solution: KWaveSolution, x, warm_start=None) -> RectifiedPoint:
    """``xbar`` = Riemann invariants followed by the free coordinates; ``ubar = u``."""
    x = check_vector(x, solution.p, "space point")
    r = solution.solve(x, warm_start).r
    _, lam, _ = solution.surface.interpolate(r)
    ann = annihilators(lam)
    return RectifiedPoint(np.concatenate([r, x[list(ann.free_columns)]]), solution.surface.f(r))


def _field_and_jacobian(solution, x, h, field, warm_start):
    """``u(x)`` and the central-difference ``du/dx`` shared with :mod:`verify`."""
    if field is None:
        res = solution.solve(x, warm_start)
        fn = solution.field(res.r)
        return solution.surface.f(res.r), central_jacobian(fn, x, h), res
    return np.asarray(field(x), dtype=float), central_jacobian(field, x, h), None


def invariance_residual(solution: KWaveSolution, x, h: float = 1e-5, field=None, warm_start=None) -> float:
    """``max_a | xi_a^i(u(x)) du/dx^i |`` with ``xi_a`` from the solution's frame.

    ``field`` substitutes an arbitrary ``x -> u`` map for the solution while
    keeping the frame's annihilators; it is how non-invariant fields are probed.
    """
    x = check_vector(x, solution.p, "space point")
    u, jac, _ = _field_and_jacobian(solution, x, h, field, warm_start)
    return _invariance_value(jac, annihilating_fields(solution.frame, u).basis)


def _invariance_value(jac, basis) -> float:
    if basis.shape[0] == 0:
        return 0.0
    return float(max(np.linalg.norm(jac @ xi) for xi in basis))


@dataclass
class RectificationReport:
    eps: float
    max_discrepancy: float
    max_normalized: float
    n_checked: int
    n_skipped: int
    vacuous: bool

    def passed(self, tol: float = 1e-9) -> bool:
        return self.vacuous or self.max_normalized <= tol

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "max_discrepancy": self.max_discrepancy,
            "max_normalized": self.max_normalized,
            "n_checked": self.n_checked,
            "n_skipped": self.n_skipped,
            "vacuous": self.vacuous,
        }


def rectification_check(
    solution: KWaveSolution, xgrid, eps: float = 1e-3, field=None, sample=None, threads: int = 1
) -> RectificationReport:
    """Compare ``u(x)`` with ``u(x + eps' xi_a)`` at every resolved grid point.

    ``eps' = eps (1 + |x|_inf)``; ``max_normalized`` is the largest
    discrepancy divided by ``eps'``.  With ``k = p`` there are no directions
    and the check passes vacuously.
    """
    if solution.k == solution.p:
        return RectificationReport(eps, 0.0, 0.0, 0, 0, True)
    if field is None:
        sample = sample_grid(solution, xgrid, threads=threads) if sample is None else sample
        return _rectification_batch(solution, sample, eps)
    pts = grid_points(parse_grid(xgrid, "x-grid"))
    worst = worst_norm = 0.0
    checked = skipped = 0
    for x in pts.reshape(-1, pts.shape[-1]):
        step = eps * (1.0 + float(np.max(np.abs(x))))
        try:
            u = np.asarray(field(x), dtype=float)
            for xi in annihilating_fields(solution.frame, u).basis:
                d = float(np.linalg.norm(np.asarray(field(x + step * xi)) - u))
                worst = max(worst, d)
                worst_norm = max(worst_norm, d / step)
        except RiemannKWaveError:
            skipped += 1
            continue
        checked += 1
    return RectificationReport(eps, worst, worst_norm, checked, skipped, False)


def _point_annihilators(solution, us) -> list:
    lams = solution.frame.wave_vectors(us)
    return [annihilators(lam) for lam in np.asarray(lams).reshape(len(us), solution.k, solution.p)]


def _rectification_batch(solution, sample, eps) -> RectificationReport:
    mask = sample.resolved
    skipped = int(np.count_nonzero(~mask))
    xs, rs, us = sample.x[mask], sample.r[mask], sample.u[mask]
    if xs.shape[0] == 0:
        return RectificationReport(eps, 0.0, 0.0, 0, skipped, False)
    steps = eps * (1.0 + np.max(np.abs(xs), axis=1))
    bases = np.stack([a.basis for a in _point_annihilators(solution, us)])  # (N, p-k, p)
    shifted = xs[:, None, :] + steps[:, None, None] * bases
    fn = solution.stencil_field(rs)
    moved = fn(shifted)  # (N, p-k, q)
    d = np.linalg.norm(moved - us[:, None, :], axis=-1)
    ok = np.all(np.isfinite(d), axis=1)
    if not np.any(ok):
        return RectificationReport(eps, 0.0, 0.0, 0, skipped + xs.shape[0], False)
    worst = float(np.max(d[ok]))
    worst_norm = float(np.max(d[ok] / steps[ok, None]))
    return RectificationReport(eps, worst, worst_norm, int(np.count_nonzero(ok)), skipped + int(np.count_nonzero(~ok)), False)


def reduced_system_residual(
    solution: KWaveSolution, x, h: float = 1e-5, field=None, warm_start=None, model=None
) -> float:
    """Norm of the reduced system ``sum_{i<=k} A^l (Dr^i/Dx^l) ubar_i``.

    ``Dr/Dx = -J^{-1} lambda(r)`` comes from the implicit-system Jacobian at the
    solved invariants (it equals ``phi^{-1} lambda`` when ``psi^s = r^s``).
    ``ubar_i`` are the first ``k`` columns of ``du/dx`` expressed in rectified
    coordinates; the invariance conditions drop the rest.
    """
    x = check_vector(x, solution.p, "space point")
    model = solution.frame.model if model is None else model
    res = solution.solve(x, warm_start)
    _, jac, _, _ = solution.implicit_system(res.r, x)
    _, lam, _ = solution.surface.interpolate(res.r)
    if field is None:
        fn = solution.field(res.r)
        u = solution.surface.f(res.r)
    else:
        fn = field
        u = np.asarray(field(x), dtype=float)
    ux = central_jacobian(fn, x, h)
    return _reduced_value(model, u, ux, jac, lam, solution.newton.singular_cond, x)


def _reduced_value(model, u, ux, jac, lam, singular_cond, x) -> float:
    """Reduced-system norm from ``du/dx``, the implicit Jacobian and ``lambda(r)``."""
    k, p = lam.shape
    dr_dx = -np.linalg.solve(jac, lam)
    ann = annihilators(lam)
    rows = [dr_dx] + [np.eye(p)[a][None, :] for a in ann.free_columns]
    t_mat = np.vstack(rows)
    if np.linalg.cond(t_mat) > singular_cond:
        raise CatastropheError(f"rectifying map is singular at x = {np.asarray(x).tolist()}", x=np.asarray(x))
    ubar = np.linalg.solve(t_mat.T, ux.T).T  # ux = ubar @ T
    mats = model.matrices(u)
    vec = np.zeros(ux.shape[0])
    for l in range(p):
        vec += mats[l] @ (ubar[:, :k] @ dr_dx[:, l])
    return float(np.linalg.norm(vec))


def tangent_phi(frame: Frame, u, x, df_dr, h: float | None = None) -> np.ndarray:
    """``phi^i_j = delta^i_j - (dr^i/du^a) (df^a/dr^j)`` for ``r^i = lambda^i(u) . x``.

    ``df_dr`` has shape ``(q, k)``.
    """
    u = check_vector(u, frame.q, "state")
    x = check_vector(x, frame.p, "space point")
    step = default_state_step(u) if h is None else h
    dr_du = np.array([field_jacobian(frame.wave_vector_field(s), u, step).T @ x for s in range(frame.k)])
    return np.eye(frame.k) - dr_du @ np.asarray(df_dr, dtype=float).reshape(frame.q, frame.k)


def _batch_inputs(solution: KWaveSolution, xs, h, warm_starts):
    """Converged invariants, implicit Jacobians and stencil Jacobians at the rows of ``xs``."""
    xs = np.asarray(xs, dtype=float).reshape(-1, solution.p)
    res = solution.solve_batch(xs, warm_starts)
    ok = res.converged.copy()
    rs = np.where(ok[:, None], res.r, 0.0)
    ux = batch_central_jacobian(solution.stencil_field(rs), xs, h)
    ok &= np.all(np.isfinite(ux), axis=(1, 2))
    _, imp, _, _ = solution._system_batch(rs, xs)
    ch = solution.surface._table.batch(rs)
    us = ch[:, : solution.q]
    lams = ch[:, slice(*solution.surface._split)].reshape(-1, solution.k, solution.p)
    return xs, ok, us, ux, imp, lams


def invariance_residuals(solution: KWaveSolution, xs, h: float = 1e-5, warm_starts=None) -> np.ndarray:
    """:func:`invariance_residual` at every row of ``xs``, batched; NaN where unresolved."""
    xs, ok, us, ux, _, _ = _batch_inputs(solution, xs, h, warm_starts)
    out = np.full(xs.shape[0], np.nan)
    idx = np.flatnonzero(ok)
    for i, ann in zip(idx, _point_annihilators(solution, us[idx])):
        out[i] = _invariance_value(ux[i], ann.basis)
    return out


def reduced_system_residuals(solution: KWaveSolution, xs, h: float = 1e-5, warm_starts=None) -> np.ndarray:
    """:func:`reduced_system_residual` at every row of ``xs``, batched; NaN where unresolved."""
    xs, ok, us, ux, imp, lams = _batch_inputs(solution, xs, h, warm_starts)
    out = np.full(xs.shape[0], np.nan)
    model = solution.frame.model
    for i in np.flatnonzero(ok):
        try:
            out[i] = _reduced_value(model, us[i], ux[i], imp[i], lams[i], solution.newton.singular_cond, xs[i])
        except RiemannKWaveError:
            pass
    return out


def symmetry_report(solution: KWaveSolution, xgrid, h: float = 1e-5, eps: float = 1e-3, threads: int = 1) -> dict:
    """All three checks over an x-grid, as a JSON-ready dict."""
    sample = sample_grid(solution, xgrid, threads=threads)
    mask = sample.resolved
    xs, rs = sample.x[mask], sample.r[mask]
    inv = invariance_residuals(solution, xs, h, rs) if xs.size else np.zeros(0)
    red = reduced_system_residuals(solution, xs, h, rs) if xs.size else np.zeros(0)
    failed = ~np.isfinite(inv) | ~np.isfinite(red)
    inv, red = inv[~failed], red[~failed]
    rect = rectification_check(solution, xgrid, eps, sample=sample)
    return {
        "n_points": int(mask.size),
        "n_resolved": int(np.count_nonzero(mask)),
        "n_failed": int(np.count_nonzero(failed)),
        "invariance": {"max": float(np.max(inv, initial=0.0)), "vacuous": solution.k == solution.p},
        "rectification": rect.to_dict(),
        "reduced_system": {"max": float(np.max(red, initial=0.0))},
    }
