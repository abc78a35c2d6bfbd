"""Ground-truth checks of a field ``u(x)``: PDE residual and rank of ``du/dx``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._fd import batch_central_jacobian, central_jacobian
from ._validation import check_vector, grid_points, parse_grid
from .errors import RiemannKWaveError
from .kwave import KWaveSolution, sample_grid
from .models import HydroModel

RANK_FLOOR = 1e-12


def residual_vector(model: HydroModel, u, jac) -> np.ndarray:
    mats = model.matrices(u)
    return sum(mats[i] @ jac[:, i] for i in range(model.p))


def pde_residual(model: HydroModel, field, x, h: float = 1e-5) -> float:
    """``|| sum_i A^i(u(x)) du/dx^i ||_2`` with central differences of step ``h (1 + |x^i|)``."""
    x = check_vector(x, model.p, "space point")
    jac = central_jacobian(field, x, h)
    return float(np.linalg.norm(residual_vector(model, field(x), jac)))


def pde_residuals(model: HydroModel, solution: KWaveSolution, xs, h: float = 1e-5, warm_starts=None) -> np.ndarray:
    """:func:`pde_residual` of a solution at every row of ``xs``, batched; NaN where unresolved.

    Centres and stencil nodes are solved together with the same difference
    scheme as the pointwise function.
    """
    xs = np.asarray(xs, dtype=float).reshape(-1, model.p)
    us, res = solution.evaluate_batch(xs, warm_starts)
    rs = np.where(res.converged[:, None], res.r, 0.0)
    jacs = batch_central_jacobian(solution.stencil_field(rs), xs, h)
    out = np.full(xs.shape[0], np.nan)
    ok = res.converged & np.all(np.isfinite(jacs), axis=(1, 2))
    for i in np.flatnonzero(ok):
        out[i] = float(np.linalg.norm(residual_vector(model, us[i], jacs[i])))
    return out


def rank_of(jac, rank_tol: float = 1e-6) -> tuple[int, np.ndarray]:
    s = np.linalg.svd(np.atleast_2d(jac), compute_uv=False)
    if s.size == 0 or s[0] <= RANK_FLOOR:
        return 0, s
    return int(np.count_nonzero(s > rank_tol * s[0])), s


def solution_rank(field, x, h: float = 1e-5, rank_tol: float = 1e-6) -> tuple[int, np.ndarray]:
    """Numerical rank of ``du/dx`` and its singular values (descending)."""
    x = check_vector(x, name="space point")
    return rank_of(central_jacobian(field, x, h), rank_tol)


@dataclass
class PointCheck:
    x: np.ndarray
    residual: float
    rank: int
    singular_values: np.ndarray

    def to_dict(self) -> dict:
        return {
            "x": self.x.tolist(),
            "residual": self.residual,
            "rank": self.rank,
            "singular_values": self.singular_values.tolist(),
        }


@dataclass
class VerificationReport:
    grid: tuple
    k: int
    residual_tol: float
    rank_tol: float
    points: list = field(default_factory=list)
    n_unresolved: int = 0

    @property
    def max_residual(self) -> float:
        return max((pt.residual for pt in self.points), default=0.0)

    @property
    def mean_residual(self) -> float:
        return float(np.mean([pt.residual for pt in self.points])) if self.points else 0.0

    @property
    def max_rank(self) -> int:
        return max((pt.rank for pt in self.points), default=0)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.residual_tol and self.max_rank <= self.k

    @property
    def exit_code(self) -> int:
        if not self.passed:
            return 2
        return 3 if self.n_unresolved else 0

    def to_dict(self, include_points: bool = True) -> dict:
        out = {
            "schema_version": 1,
            "grid": [a.to_dict() for a in self.grid],
            "k": self.k,
            "residual_tol": self.residual_tol,
            "rank_tol": self.rank_tol,
            "n_checked": len(self.points),
            "n_unresolved": self.n_unresolved,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "max_rank": self.max_rank,
            "passed": self.passed,
        }
        if include_points:
            out["points"] = [pt.to_dict() for pt in self.points]
        return out


def verify_grid(
    model: HydroModel,
    solution,
    xgrid,
    residual_tol: float = 1e-6,
    rank_tol: float = 1e-6,
    h: float = 1e-5,
    threads: int = 1,
    sample=None,
) -> VerificationReport:
    """PDE residual and rank at every resolved point of ``xgrid``.

    ``solution`` is a :class:`KWaveSolution` or any callable ``x -> u``; a
    plain callable is checked pointwise against the bound ``k = min(p, q)``.
    Passes iff the largest residual is at most ``residual_tol`` and no point
    has rank above ``k``.  Points that are unresolved, or whose stencil cannot
    be evaluated, are counted rather than checked.  Stencils are solved in
    one batch, each node warm-started from its centre's invariants.
    """
    if not isinstance(solution, KWaveSolution):
        return _verify_field(model, solution, xgrid, residual_tol, rank_tol, h)
    sample = sample_grid(solution, xgrid, threads=threads) if sample is None else sample
    report = VerificationReport(sample.axes, solution.k, residual_tol, rank_tol)
    report.n_unresolved = sample.n_unresolved
    mask = sample.resolved
    if not np.any(mask):
        return report
    xs, rs, us = sample.x[mask], sample.r[mask], sample.u[mask]
    jacs = batch_central_jacobian(solution.stencil_field(rs), xs, h)
    ok = np.all(np.isfinite(jacs), axis=(1, 2))
    report.n_unresolved += int(np.count_nonzero(~ok))
    for x, u, jac in zip(xs[ok], us[ok], jacs[ok]):
        res = float(np.linalg.norm(residual_vector(model, u, jac)))
        rank, s = rank_of(jac, rank_tol)
        report.points.append(PointCheck(x.copy(), res, rank, s))
    return report


def _verify_field(model, field, xgrid, residual_tol, rank_tol, h) -> VerificationReport:
    axes = parse_grid(xgrid, "x-grid")
    report = VerificationReport(axes, min(model.p, model.q), residual_tol, rank_tol)
    for x in grid_points(axes).reshape(-1, model.p):
        try:
            jac = central_jacobian(field, x, h)
            res = float(np.linalg.norm(residual_vector(model, field(x), jac)))
        except RiemannKWaveError:
            report.n_unresolved += 1
            continue
        rank, s = rank_of(jac, rank_tol)
        report.points.append(PointCheck(x.copy(), res, rank, s))
    return report
