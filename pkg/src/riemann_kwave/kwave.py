"""Riemann k-waves by the method of characteristics.

The construction has three stages:

1. integrate the surface ``df/dr^s = gamma_s(f)`` over a rectangular grid of
   Riemann invariants (the frame must commute, so the result does not depend
   on the order in which the axes are swept);
2. pick profiles ``psi^s(r)`` and solve ``lambda^s_mu(r) x^mu = psi^s(r)``
   for ``r`` at every space point by damped Newton iteration;
3. read off ``u(x) = f(r(x))``.

The Newton Jacobian ``J = d(lambda x)/dr - dpsi/dr`` doubles as the
gradient-catastrophe detector: with ``psi^s = r^s`` it equals ``-phi`` where
``phi = I - (dr/du)(df/dr)`` is the matrix of the tangent map.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations_with_replacement, product

import numpy as np

from ._validation import Axis, check_vector, grid_points, parse_grid
from .errors import (
    CatastropheError,
    ContractError,
    CoverageError,
    DomainError,
    NoConvergenceError,
    PartialSurfaceError,
    RiemannKWaveError,
)
from .geometry import Frame

# integration may land on a closed domain bound up to rounding
_DOMAIN_SLACK = 1e-10
# fraction of a grid cell by which the surface may be extrapolated past its edge
EDGE_MARGIN = 1e-2


# -- implicit profiles -------------------------------------------------------


@dataclass(frozen=True)
class ImplicitProfile:
    """A profile ``psi(r)`` of the ``k`` Riemann invariants.

    ``kind`` is one of

    ``"linear"``
        ``slope . r + offset``
    ``"gaussian"``
        ``amplitude * exp(-|r - center|^2 / (2 width^2))``
    ``"polynomial"``
        ``sum_j coef_j prod_l r_l^powers_j[l]`` with total degree at most 3.
    """

    kind: str
    params: dict

    def __post_init__(self):
        kind, prm = self.kind, self.params
        if kind == "linear":
            slope = check_vector(prm["slope"], name="slope")
            offset = float(prm.get("offset", 0.0))
            if not np.any(slope) and offset == 0.0:
                raise ValueError("linear profile needs a nonzero slope or offset")
            object.__setattr__(self, "_k", slope.shape[0])
        elif kind == "gaussian":
            center = check_vector(prm["center"], name="center")
            if not float(prm["width"]) > 0:
                raise ValueError(f"gaussian width must be positive, got {prm['width']}")
            if float(prm["amplitude"]) == 0.0:
                raise ValueError("gaussian amplitude must be nonzero")
            object.__setattr__(self, "_k", center.shape[0])
        elif kind == "polynomial":
            terms = prm["terms"]
            if not terms:
                raise ValueError("polynomial profile needs at least one term")
            dims = {len(t["powers"]) for t in terms}
            if len(dims) != 1:
                raise ValueError("polynomial terms disagree on the number of invariants")
            for t in terms:
                if any(int(e) < 0 for e in t["powers"]) or sum(int(e) for e in t["powers"]) > 3:
                    raise ValueError(f"polynomial term powers {t['powers']} exceed total degree 3")
            if not any(float(t["coef"]) for t in terms):
                raise ValueError("polynomial profile has only zero coefficients")
            k = dims.pop()
            object.__setattr__(self, "_k", k)
            coefs = np.array([float(t["coef"]) for t in terms])
            powers = np.array([[int(e) for e in t["powers"]] for t in terms], dtype=np.intp)
            # exponents of d/dr^l of every term; the coefficient factor is powers[:, l]
            lowered = np.maximum(powers[None, :, :] - np.eye(k, dtype=np.intp)[:, None, :], 0)
            object.__setattr__(self, "_terms", (coefs, powers, lowered))
        else:
            raise ValueError(f"unknown profile kind {kind!r}")

    @property
    def k(self) -> int:
        return self._k

    @classmethod
    def linear(cls, slope, offset=0.0):
        return cls("linear", {"slope": [float(v) for v in np.atleast_1d(slope)], "offset": float(offset)})

    @classmethod
    def gaussian(cls, amplitude, center, width):
        return cls(
            "gaussian",
            {"amplitude": float(amplitude), "center": [float(v) for v in np.atleast_1d(center)], "width": float(width)},
        )

    @classmethod
    def polynomial(cls, terms):
        """``terms`` is a mapping ``powers tuple -> coefficient`` or a list of dicts."""
        if isinstance(terms, dict):
            terms = [{"powers": [int(e) for e in pw], "coef": float(c)} for pw, c in terms.items()]
        return cls("polynomial", {"terms": list(terms)})

    def batch(self, rs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Values ``(N,)`` and gradients ``(N, k)`` at the rows of ``rs``."""
        rs = np.asarray(rs, dtype=float).reshape(-1, self.k)
        prm = self.params
        if self.kind == "linear":
            slope = np.asarray(prm["slope"], dtype=float)
            return np.sum(rs * slope, axis=1) + float(prm.get("offset", 0.0)), np.broadcast_to(slope, rs.shape).copy()
        if self.kind == "gaussian":
            d = rs - np.asarray(prm["center"], dtype=float)
            w2 = float(prm["width"]) ** 2
            val = float(prm["amplitude"]) * np.exp(-np.sum(d * d, axis=1) / (2.0 * w2))
            return val, -val[:, None] * d / w2
        coefs, powers, lowered = self._terms
        k = self.k
        # table[n, l, e] = r_l^e for e = 0..3
        table = np.stack([np.ones_like(rs), rs, rs * rs, rs * rs * rs], axis=-1)
        axes = np.arange(k)
        mono = np.prod(table[:, axes, powers], axis=-1)  # (N, T)
        lowered_mono = np.prod(table[:, axes, lowered], axis=-1)  # (N, k, T)
        # explicit sums keep every row's arithmetic independent of the batch size
        grad = np.sum(lowered_mono * (coefs[:, None] * powers).T, axis=-1)
        return np.sum(mono * coefs, axis=1), grad

    def value_and_gradient(self, r) -> tuple[float, np.ndarray]:
        val, grad = self.batch(r)
        return float(val[0]), grad[0]

    def __call__(self, r) -> float:
        return self.value_and_gradient(r)[0]

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, d: dict) -> "ImplicitProfile":
        d = dict(d)
        return cls(d.pop("kind"), d)


def monomials(k: int, degree: int = 3):
    """All exponent tuples of total degree at most ``degree`` in ``k`` variables."""
    out = [(0,) * k]
    for deg in range(1, degree + 1):
        for combo in combinations_with_replacement(range(k), deg):
            out.append(tuple(combo.count(l) for l in range(k)))
    return out


# -- surfaces ----------------------------------------------------------------


def _origin_index(axes) -> tuple:
    idx = []
    for a in axes:
        nodes = a.nodes()
        i = int(np.argmin(np.abs(nodes)))
        if a.n < 2:
            raise ContractError("every r-grid axis needs at least two nodes")
        if abs(nodes[i]) > 1e-9 * (a.hi - a.lo):
            raise ContractError(f"r-grid axis [{a.lo}, {a.hi}] with {a.n} nodes has no node at the origin")
        idx.append(i)
    return tuple(idx)


def _axis_nodes(axis: Axis, origin: int) -> np.ndarray:
    nodes = axis.nodes()
    nodes[origin] = 0.0
    return nodes


def _gamma_batch(frame: Frame, states: np.ndarray, s: int) -> np.ndarray:
    if frame.vectorized:
        return np.asarray(frame.fields(states)[1][..., s, :], dtype=float)
    return np.array([frame.fields(v)[1][s] for v in states])


def _states_ok(frame: Frame, states: np.ndarray) -> bool:
    if frame.model is not None and frame.domain_check is None:
        return bool(np.all(frame.model.in_domain(states, _DOMAIN_SLACK)))
    if not np.all(np.isfinite(states)):
        return False
    if frame.domain_check is None:
        return True
    try:
        for v in states:
            frame.domain_check(v)
    except DomainError:
        return False
    return True


def _integrate_line(frame, starts, s, nodes, origin, substeps):
    """RK4 along axis ``s`` from ``r^s = 0`` to every node; returns ``(n_s, M, q)``."""
    out = np.empty((nodes.shape[0],) + starts.shape)
    out[origin] = starts
    for direction in (1, -1):
        y = starts.copy()
        idx = origin
        while 0 <= idx + direction < nodes.shape[0]:
            nxt = idx + direction
            dr = (nodes[nxt] - nodes[idx]) / substeps
            for _ in range(substeps):
                k1 = _gamma_batch(frame, y, s)
                y2 = y + 0.5 * dr * k1
                ok = _states_ok(frame, y2)
                k2 = _gamma_batch(frame, y2, s) if ok else None
                y3 = y + 0.5 * dr * k2 if ok else None
                ok = ok and _states_ok(frame, y3)
                k3 = _gamma_batch(frame, y3, s) if ok else None
                y4 = y + dr * k3 if ok else None
                ok = ok and _states_ok(frame, y4)
                if ok:
                    k4 = _gamma_batch(frame, y4, s)
                    y = y + dr / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                    ok = _states_ok(frame, y)
                if not ok:
                    raise PartialSurfaceError(
                        f"surface left the model domain along r^{s + 1} beyond r^{s + 1} = {float(nodes[idx])!r}",
                        axis=s,
                        reached=float(nodes[idx]),
                    )
            idx = nxt
            out[idx] = y
    return out


def _integrate(frame: Frame, base: np.ndarray, axes, order, substeps: int) -> np.ndarray:
    k = len(axes)
    origin = _origin_index(axes)
    shape = tuple(a.n for a in axes)
    values = np.full(shape + (frame.q,), np.nan)
    values[origin] = base
    done: list[int] = []
    for s in order:
        free = sorted(done + [s])
        sel = [origin[a] if a not in free else slice(None) for a in range(k)]
        block = values[tuple(sel)]  # dims ordered as `free`, then q
        pos = free.index(s)
        block = np.moveaxis(block, pos, 0)  # (n_s, rest..., q)
        rest_shape = block.shape[1:-1]
        starts = block[origin[s]].reshape(-1, frame.q)
        line = _integrate_line(frame, starts, s, _axis_nodes(axes[s], origin[s]), origin[s], substeps)
        line = line.reshape((axes[s].n,) + rest_shape + (frame.q,))
        values[tuple(sel)] = np.moveaxis(line, 0, pos)
        done.append(s)
    values[origin] = base
    return values


class _GridTable:
    """Multilinear interpolation of stacked channels on a uniform grid."""

    def __init__(self, axes, table: np.ndarray):
        self.axes = tuple(axes)
        self.lo = np.array([a.lo for a in axes])
        self.hi = np.array([a.hi for a in axes])
        self.step = np.array([a.step for a in axes])
        self.n = np.array([a.n for a in axes])
        self.table = table
        # points this close outside the grid use the edge cell's linear extension,
        # so that difference stencils centred on boundary nodes stay evaluable
        self.margin = EDGE_MARGIN * self.step
        self.lo_ext = self.lo - self.margin
        self.hi_ext = self.hi + self.margin

    def contains(self, r) -> bool:
        return bool(np.all(r >= self.lo_ext) and np.all(r <= self.hi_ext))

    def clip(self, r):
        return np.minimum(np.maximum(r, self.lo_ext), self.hi_ext)

    def batch(self, rs: np.ndarray) -> np.ndarray:
        """Channels at the points ``rs`` of shape ``(N, k)``; returns ``(N, m)``."""
        k = len(self.axes)
        pos = (rs - self.lo) / self.step
        i = np.clip(np.floor(pos).astype(np.intp), 0, self.n - 2)
        w = pos - i
        offsets = self._offsets(k)
        corners = i[:, None, :] + offsets[None]  # (N, 2^k, k)
        block = self.table[tuple(corners[..., d] for d in range(k))]
        block = block.reshape((rs.shape[0],) + (2,) * k + (self.table.shape[-1],))
        for d in range(k):
            wd = w[:, d].reshape((-1,) + (1,) * (k - d))
            block = (1.0 - wd) * block[:, 0] + wd * block[:, 1]
        return block

    @staticmethod
    def _offsets(k: int) -> np.ndarray:
        return np.array(list(product((0, 1), repeat=k)), dtype=np.intp).reshape(-1, k)

    def __call__(self, r) -> np.ndarray:
        return self.batch(np.asarray(r, dtype=float).reshape(1, -1))[0]


@dataclass
class WaveSurface:
    """Tabulated ``f(r)`` and ``lambda^s(f(r))`` on a rectangular r-grid."""

    frame: Frame
    base_state: np.ndarray
    grid: tuple
    values: np.ndarray
    lambda_values: np.ndarray
    path_error: float = 0.0
    _table: _GridTable = field(init=False, repr=False)

    def __post_init__(self):
        k, p, q = self.k, self.frame.p, self.frame.q
        steps = [a.step for a in self.grid]
        # d lambda^s / d r^l at nodes, second order everywhere
        dlam = np.stack(
            [np.gradient(self.lambda_values, steps[l], axis=l, edge_order=2) for l in range(k)], axis=k
        )  # (n..., l, s, p)
        shape = self.values.shape[:k]
        channels = np.concatenate(
            [self.values, self.lambda_values.reshape(shape + (k * p,)), dlam.reshape(shape + (k * k * p,))],
            axis=-1,
        )
        self._table = _GridTable(self.grid, channels)
        self._split = (q, q + k * p)

    @property
    def k(self) -> int:
        return len(self.grid)

    def contains(self, r) -> bool:
        return self._table.contains(np.asarray(r, dtype=float))

    def interpolate(self, r):
        """``(f(r), lambda(r), dlambda/dr)`` with shapes ``(q,)``, ``(k, p)``, ``(k_l, k_s, p)``."""
        k, p = self.k, self.frame.p
        ch = self._table(r)
        a, b = self._split
        return ch[:a], ch[a:b].reshape(k, p), ch[b:].reshape(k, k, p)

    def f(self, r) -> np.ndarray:
        return self.interpolate(r)[0]

    def f_batch(self, rs) -> np.ndarray:
        """``f`` at the rows of ``rs`` (shape ``(N, k)``)."""
        return self._table.batch(np.asarray(rs, dtype=float).reshape(-1, self.k))[:, : self.frame.q]

    def node_coordinates(self) -> np.ndarray:
        origin = _origin_index(self.grid)
        mesh = np.meshgrid(*[_axis_nodes(a, o) for a, o in zip(self.grid, origin)], indexing="ij")
        return np.stack(mesh, axis=-1)

    def consistency_residual(self) -> float:
        """Max over interior nodes and axes of ``|df/dr^s - gamma_s(f)| / |gamma_s(f)|``."""
        k = self.k
        interior = tuple(slice(1, -1) for _ in range(k))
        worst = 0.0
        for s, a in enumerate(self.grid):
            deriv = np.gradient(self.values, a.step, axis=s)[interior]
            f_in = self.values[interior]
            gam = _gamma_batch(self.frame, f_in.reshape(-1, self.frame.q), s).reshape(f_in.shape)
            err = np.linalg.norm(deriv - gam, axis=-1) / np.linalg.norm(gam, axis=-1)
            worst = max(worst, float(np.max(err))) if err.size else worst
        return worst


def integrate_surface(frame: Frame, base_state, grid, substeps: int = 4, strict: bool = True) -> WaveSurface:
    """Tabulate ``df/dr^s = gamma_s(f)``, ``f(0) = base_state``, over ``grid``.

    RK4 (``substeps`` steps per grid interval) runs along ``r^1`` from the
    origin, then fans out along ``r^2`` from every ``r^1`` node, and so on.
    The reverse sweep order is also run and the largest nodal discrepancy is
    stored as ``path_error``.

    Raises
    ------
    ContractError
        If ``strict`` and the frame has not been certified as commuting.
    PartialSurfaceError
        If a trajectory leaves the model domain.
    """
    if strict and not frame.commuting_certified:
        raise ContractError(f"frame {frame.selectors} is not certified as commuting; run commutation_residual first")
    axes = parse_grid(grid, "r-grid")
    if len(axes) != frame.k:
        raise ContractError(f"r-grid has {len(axes)} axes but the frame has k = {frame.k}")
    base = check_vector(base_state, frame.q, "base state")
    frame.check_state(base)
    forward = _integrate(frame, base, axes, list(range(frame.k)), substeps)
    path_err = 0.0
    if frame.k > 1:
        backward = _integrate(frame, base, axes, list(range(frame.k))[::-1], substeps)
        path_err = float(np.max(np.linalg.norm(forward - backward, axis=-1)))
    lam = frame.wave_vectors(forward.reshape(-1, frame.q)).reshape(forward.shape[:-1] + (frame.k, frame.p))
    return WaveSurface(frame, base, axes, forward, np.asarray(lam, dtype=float), path_err)


def path_independence_error(frame: Frame, base_state, grid, substeps: int = 4) -> float:
    """``max |f_(1,2,...,k) - f_(k,...,2,1)|`` over the grid nodes.

    Unlike :func:`integrate_surface` this does not require certification: it
    is the diagnostic that exposes non-commuting frames.
    """
    axes = parse_grid(grid, "r-grid")
    base = check_vector(base_state, frame.q, "base state")
    frame.check_state(base)
    order = list(range(frame.k))
    forward = _integrate(frame, base, axes, order, substeps)
    backward = _integrate(frame, base, axes, order[::-1], substeps)
    return float(np.max(np.linalg.norm(forward - backward, axis=-1)))


# -- second-order constraints on the wave vectors ---------------------------


@dataclass
class LambdaConstraintReport:
    """Pointwise least-squares fit of ``d2 lambda^s/dr^s dr^l + alpha d_s lambda^s + beta d_l lambda^s``."""

    alpha: dict = field(default_factory=dict)
    beta: dict = field(default_factory=dict)
    residual: dict = field(default_factory=dict)

    @property
    def vacuous(self) -> bool:
        return not self.residual

    @property
    def max_residual(self) -> float:
        return max((float(np.max(v)) if v.size else 0.0 for v in self.residual.values()), default=0.0)

    @property
    def finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for d in (self.alpha, self.beta, self.residual) for v in d.values())

    def to_dict(self) -> dict:
        return {
            "vacuous": self.vacuous,
            "max_residual": self.max_residual,
            "pairs": [
                {
                    "s": s,
                    "l": l,
                    "max_residual": float(np.max(self.residual[s, l])) if self.residual[s, l].size else 0.0,
                    "alpha_range": [float(np.min(self.alpha[s, l])), float(np.max(self.alpha[s, l]))],
                    "beta_range": [float(np.min(self.beta[s, l])), float(np.max(self.beta[s, l]))],
                }
                for s, l in sorted(self.residual)
            ],
        }


def check_lambda_constraints(surface: WaveSurface) -> LambdaConstraintReport:
    """Fit ``alpha^s_l``, ``beta^s_l`` at every interior node for every ``s != l``.

    This is a diagnostic: the construction never enforces these constraints.
    """
    k = surface.k
    report = LambdaConstraintReport()
    if k == 1:
        return report
    if any(a.n < 3 for a in surface.grid):
        raise ContractError("second differences need at least 3 nodes per r-grid axis")
    steps = [a.step for a in surface.grid]
    interior = tuple(slice(1, -1) for _ in range(k))
    for s in range(k):
        lam_s = surface.lambda_values[..., s, :]
        d_s = np.gradient(lam_s, steps[s], axis=s)
        for l in range(k):
            if l == s:
                continue
            d_l = np.gradient(lam_s, steps[l], axis=l)
            d_sl = np.gradient(d_s, steps[l], axis=l)
            a = np.stack([d_s[interior], d_l[interior]], axis=-1)  # (..., p, 2)
            b = d_sl[interior]
            coef = -np.einsum("...ij,...j->...i", np.linalg.pinv(a), b)
            res = np.linalg.norm(b + np.einsum("...ij,...j->...i", a, coef), axis=-1)
            report.alpha[s, l] = coef[..., 0]
            report.beta[s, l] = coef[..., 1]
            report.residual[s, l] = res
    return report


# -- implicit solve ----------------------------------------------------------


@dataclass(frozen=True)
class NewtonSettings:
    tol: float = 1e-12
    max_iter: int = 50
    damping: float = 0.5
    max_halvings: int = 30
    singular_cond: float = 1e12

    def to_dict(self) -> dict:
        return {
            "tol": self.tol,
            "max_iter": self.max_iter,
            "damping": self.damping,
            "max_halvings": self.max_halvings,
            "singular_cond": self.singular_cond,
        }


@dataclass(frozen=True)
class NewtonResult:
    r: np.ndarray
    iterations: int
    residual: float
    jac_cond: float
    det_jac: float
    phi_det: float

    @property
    def past_catastrophe(self) -> bool:
        return bool(np.isfinite(self.phi_det) and self.phi_det <= 0.0)


def _smallest_singular_values(a: np.ndarray) -> np.ndarray:
    """``sigma_min`` of a stack ``(N, k, k)``; closed forms for ``k <= 2``."""
    k = a.shape[-1]
    if k == 1:
        return np.abs(a[:, 0, 0])
    if k == 2:
        fro2 = np.sum(a * a, axis=(1, 2))
        det = a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]
        big2 = 0.5 * (fro2 + np.sqrt(np.maximum(fro2 * fro2 - 4.0 * det * det, 0.0)))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(big2 > 0, np.abs(det) / np.sqrt(big2), 0.0)
    return np.linalg.svd(a, compute_uv=False)[:, -1]


def _relative_conditions(jac: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """``scale / sigma_min(J)``; ``scale`` is the size of the terms that cancel in ``J``."""
    smin = _smallest_singular_values(jac)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(smin > 0, scale / smin, np.inf)


def _dets(a: np.ndarray) -> np.ndarray:
    k = a.shape[-1]
    if k == 1:
        return a[:, 0, 0].copy()
    if k == 2:
        return a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]
    return np.linalg.det(a)


def _fro(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(a * a, axis=(1, 2)))


# Newton outcome codes, one per point of a batch
CONVERGED, NO_CONVERGENCE, CATASTROPHE, COVERAGE, LINE_SEARCH = range(5)


@dataclass
class NewtonBatch:
    """Per-point outcome of :meth:`KWaveSolution.solve_batch`.

    ``r`` holds the converged invariants, or the last iterate where
    ``status`` is not ``CONVERGED``; diagnostics are NaN there.
    """

    x: np.ndarray
    r: np.ndarray
    status: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray
    jac_cond: np.ndarray
    det_jac: np.ndarray
    phi_det: np.ndarray

    @property
    def converged(self) -> np.ndarray:
        return self.status == CONVERGED

    def result(self, i: int) -> NewtonResult:
        """The outcome at point ``i``, raising the matching error on failure."""
        st = int(self.status[i])
        x, r = self.x[i], self.r[i]
        if st == CATASTROPHE:
            cond = float(self.jac_cond[i])
            raise CatastropheError(
                f"gradient catastrophe at x = {x.tolist()}: implicit Jacobian condition {cond:.3e}",
                x=x.copy(),
                condition=cond,
            )
        if st == COVERAGE:
            raise CoverageError(
                f"Riemann invariants left the surface grid at x = {x.tolist()} (r = {r.tolist()})",
                last_iterate=r.copy(),
            )
        if st == LINE_SEARCH:
            raise NoConvergenceError(
                f"line search failed at x = {x.tolist()} after {int(self.iterations[i])} iterations",
                last_iterate=r.copy(),
            )
        if st == NO_CONVERGENCE:
            raise NoConvergenceError(
                f"Newton did not converge at x = {x.tolist()} in {int(self.iterations[i])} iterations "
                f"(|g| = {float(self.residual[i]):.3e})",
                last_iterate=r.copy(),
            )
        return NewtonResult(
            r.copy(),
            int(self.iterations[i]),
            float(self.residual[i]),
            float(self.jac_cond[i]),
            float(self.det_jac[i]),
            float(self.phi_det[i]),
        )


@dataclass
class KWaveSolution:
    """A Riemann k-wave ``u(x) = f(r(x))`` with ``lambda^s(r) . x = psi^s(r)``."""

    surface: WaveSurface
    profiles: tuple
    newton: NewtonSettings = field(default_factory=NewtonSettings)
    last_diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.profiles = tuple(self.profiles)
        k = self.surface.k
        if len(self.profiles) != k:
            raise ContractError(f"need k = {k} profiles, got {len(self.profiles)}")
        for prof in self.profiles:
            if prof.k != k:
                raise ContractError(f"profile {prof.to_dict()} depends on {prof.k} invariants, expected {k}")

    @property
    def k(self) -> int:
        return self.surface.k

    @property
    def frame(self) -> Frame:
        return self.surface.frame

    @property
    def p(self) -> int:
        return self.surface.frame.p

    @property
    def q(self) -> int:
        return self.surface.frame.q

    def _psi_batch(self, rs):
        out = [prof.batch(rs) for prof in self.profiles]
        return np.stack([v for v, _ in out], axis=1), np.stack([g for _, g in out], axis=1)

    def _system_batch(self, rs, xs):
        """``(g, J, d(lambda x)/dr, dpsi/dr)`` for stacks ``rs (N, k)``, ``xs (N, p)``."""
        k, p = self.k, self.p
        ch = self.surface._table.batch(rs)
        a, b = self.surface._split
        lam = ch[:, a:b].reshape(-1, k, p)
        dlam = ch[:, b:].reshape(-1, k, k, p)
        psi, dpsi = self._psi_batch(rs)
        dlx = np.swapaxes(np.sum(dlam * xs[:, None, None, :], axis=-1), 1, 2)
        g = np.sum(lam * xs[:, None, :], axis=-1) - psi
        return g, dlx - dpsi, dlx, dpsi

    def implicit_system(self, r, x):
        """Residual ``g(r; x)`` and Jacobian ``dg/dr`` of the implicit equations."""
        r = check_vector(r, self.k, "Riemann invariants")
        x = check_vector(x, self.p, "space point")
        g, jac, dlx, dpsi = self._system_batch(r[None], x[None])
        return g[0], jac[0], dlx[0], dpsi[0]

    def _conditions(self, jac, dlx, dpsi) -> np.ndarray:
        return _relative_conditions(jac, _fro(dlx) + _fro(dpsi))

    def solve_batch(self, xs, warm_starts=None) -> NewtonBatch:
        """Damped Newton at every row of ``xs`` (shape ``(N, p)``), vectorized.

        ``warm_starts`` is ``None`` (cold start at ``r = 0``) or ``(N, k)``.
        Each point follows exactly the iteration of :meth:`solve`; failures
        are reported through ``status`` instead of being raised.
        """
        st = self.newton
        k = self.k
        table = self.surface._table
        xs = np.asarray(xs, dtype=float).reshape(-1, self.p)
        n = xs.shape[0]
        if warm_starts is None:
            rs = np.zeros((n, k))
        else:
            rs = np.array(warm_starts, dtype=float).reshape(n, k)
        rs = table.clip(rs)
        status = np.full(n, NO_CONVERGENCE)
        iters = np.zeros(n, dtype=int)
        cond_at = np.full(n, np.nan)
        g, jac, dlx, dpsi = self._system_batch(rs, xs)
        gnorm = np.max(np.abs(g), axis=1)
        act = np.arange(n)
        for it in range(st.max_iter + 1):
            done = gnorm[act] <= st.tol
            status[act[done]] = CONVERGED
            iters[act] = it
            act = act[~done]
            if act.size == 0 or it == st.max_iter:
                break
            cond = self._conditions(jac[act], dlx[act], dpsi[act])
            sing = cond > st.singular_cond
            status[act[sing]] = CATASTROPHE
            cond_at[act[sing]] = cond[sing]
            act = act[~sing]
            if k == 1:
                dr = -g[act] / jac[act, 0]
            else:
                dr = -np.linalg.solve(jac[act], g[act][..., None])[..., 0]
            g2 = np.sqrt(np.sum(g[act] ** 2, axis=1))
            alpha = np.ones(act.size)
            accepted = np.zeros(act.size, dtype=bool)
            pend = np.arange(act.size)
            for _ in range(st.max_halvings + 1):
                if pend.size == 0:
                    break
                rows = act[pend]
                trial = table.clip(rs[rows] + alpha[pend, None] * dr[pend])
                stuck = np.all(trial == rs[rows], axis=1)
                status[rows[stuck]] = COVERAGE
                pend, rows, trial = pend[~stuck], rows[~stuck], trial[~stuck]
                tg, tj, tdlx, tdpsi = self._system_batch(trial, xs[rows])
                ok = np.sqrt(np.sum(tg**2, axis=1)) <= (1.0 - 1e-4 * alpha[pend]) * g2[pend]
                good = rows[ok]
                rs[good], g[good], jac[good], dlx[good], dpsi[good] = trial[ok], tg[ok], tj[ok], tdlx[ok], tdpsi[ok]
                gnorm[good] = np.max(np.abs(tg[ok]), axis=1)
                accepted[pend[ok]] = True
                alpha[pend[~ok]] *= st.damping
                pend = pend[~ok]
            status[act[pend]] = LINE_SEARCH
            act = act[accepted]
        conv = status == CONVERGED
        cond_at[conv] = self._conditions(jac[conv], dlx[conv], dpsi[conv])
        det = np.full(n, np.nan)
        phi_det = np.full(n, np.nan)
        if np.any(conv):
            det[conv] = _dets(jac[conv])
            det_psi = _dets(dpsi[conv])
            psi_cond = _relative_conditions(dpsi[conv], _fro(dpsi[conv]))
            # phi = (dpsi/dr)^-1 (-J); phi = I on x = 0
            with np.errstate(divide="ignore", invalid="ignore"):
                phi = (-1.0) ** k * det[conv] / det_psi
            phi_det[conv] = np.where(psi_cond < st.singular_cond, phi, np.nan)
        return NewtonBatch(xs, rs, status, iters, gnorm, cond_at, det, phi_det)

    def solve(self, x, warm_start=None) -> NewtonResult:
        """Damped Newton for ``r`` at the space point ``x``; see :func:`solve_invariants`."""
        x = check_vector(x, self.p, "space point")
        warm = None if warm_start is None else check_vector(warm_start, self.k, "warm start")[None]
        return self.solve_batch(x[None], warm).result(0)

    def evaluate_batch(self, xs, warm_starts=None) -> tuple[np.ndarray, NewtonBatch]:
        """``u`` at every row of ``xs``; NaN rows where Newton failed."""
        res = self.solve_batch(xs, warm_starts)
        u = self.surface.f_batch(res.r)
        u[~res.converged] = np.nan
        return u, res

    def solve_invariants(self, x, warm_start=None) -> np.ndarray:
        res = self.solve(x, warm_start)
        self.last_diagnostics = {"newton_iters": res.iterations, "jac_cond": res.jac_cond, "residual": res.residual}
        return res.r

    def evaluate(self, x, warm_start=None) -> np.ndarray:
        return self.surface.f(self.solve_invariants(x, warm_start))

    def stencil_field(self, warm_starts):
        """Batched ``x -> u`` for difference stencils.

        The returned function takes nodes of shape ``(N, ..., p)`` and solves
        all nodes of row ``n`` warm-started at ``warm_starts[n]``; failed
        nodes come back as NaN.
        """
        warm = np.asarray(warm_starts, dtype=float).reshape(-1, self.k)

        def fn(nodes):
            nodes = np.asarray(nodes, dtype=float)
            flat = nodes.reshape(nodes.shape[0], -1, self.p)
            starts = np.repeat(warm[:, None, :], flat.shape[1], axis=1)
            u, _ = self.evaluate_batch(flat.reshape(-1, self.p), starts.reshape(-1, self.k))
            return u.reshape(nodes.shape[:-1] + (self.q,))

        return fn

    def field(self, warm_start=None):
        """Callable ``x -> u(x)`` that warm-starts every solve at ``warm_start``."""
        return lambda x: self.surface.f(self.solve(x, warm_start).r)

    def with_profiles(self, profiles) -> "KWaveSolution":
        return replace(self, profiles=tuple(profiles), last_diagnostics={})


def solve_invariants(solution: KWaveSolution, x, warm_start=None) -> np.ndarray:
    """Riemann invariants ``r`` with ``|lambda^s(r) . x - psi^s(r)|_inf <= tol``.

    Raises
    ------
    NoConvergenceError
        Iteration cap or line-search failure.
    CatastropheError
        Relative condition of the implicit Jacobian above ``singular_cond``.
    CoverageError
        The iterate is pinned against the edge of the surface grid.
    """
    return solution.solve_invariants(x, warm_start)


def evaluate(solution: KWaveSolution, x, warm_start=None) -> np.ndarray:
    """``u(x) = f(r(x))``."""
    return solution.evaluate(x, warm_start)


# -- grid sweeps -------------------------------------------------------------


@dataclass
class CatastropheCell:
    kind: str  # "sign_change" or "ill_conditioned"
    index_a: tuple
    index_b: tuple
    x_a: np.ndarray
    x_b: np.ndarray
    locus: np.ndarray

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "index_a": list(self.index_a),
            "index_b": list(self.index_b),
            "x_a": self.x_a.tolist(),
            "x_b": self.x_b.tolist(),
            "locus": self.locus.tolist(),
        }


@dataclass
class CatastropheReport:
    cells: list
    threshold: float

    def __len__(self):
        return len(self.cells)

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "cells": [c.to_dict() for c in self.cells]}


@dataclass
class GridSample:
    """A solution swept over an x-grid; arrays are shaped like the grid."""

    axes: tuple
    x: np.ndarray
    r: np.ndarray
    u: np.ndarray
    iterations: np.ndarray
    jac_cond: np.ndarray
    det_jac: np.ndarray
    converged: np.ndarray
    resolved: np.ndarray
    catastrophes: CatastropheReport

    @property
    def n_unresolved(self) -> int:
        return int(np.count_nonzero(~self.resolved))


def _try_solve(solution: KWaveSolution, x, warm):
    if warm is not None:
        try:
            return solution.solve(x, warm)
        except RiemannKWaveError:
            pass
    try:
        return solution.solve(x)
    except RiemannKWaveError:
        return None


def _solve_with_fallback(solution: KWaveSolution, xs, warm, has_warm) -> NewtonBatch:
    """Warm-started batch solve; rows that fail from a warm start retry cold."""
    res = solution.solve_batch(xs, np.where(has_warm[:, None], warm, 0.0))
    retry = np.flatnonzero(has_warm & ~res.converged)
    if retry.size:
        cold = solution.solve_batch(xs[retry])
        for name in ("r", "status", "iterations", "residual", "jac_cond", "det_jac", "phi_det"):
            getattr(res, name)[retry] = getattr(cold, name)
    return res


def _find_cells(axes, x, det, cond, converged, threshold) -> list:
    cells = []
    shape = det.shape
    for idx in np.ndindex(*shape):
        if converged[idx] and cond[idx] > threshold:
            cells.append(CatastropheCell("ill_conditioned", idx, idx, x[idx], x[idx], x[idx].copy()))
    for ax in range(len(shape)):
        for idx in np.ndindex(*shape):
            if idx[ax] + 1 >= shape[ax]:
                continue
            jdx = idx[:ax] + (idx[ax] + 1,) + idx[ax + 1 :]
            if not (converged[idx] and converged[jdx]):
                continue
            da, db = det[idx], det[jdx]
            if da * db < 0:
                frac = da / (da - db)
                locus = x[idx] + frac * (x[jdx] - x[idx])
                cells.append(CatastropheCell("sign_change", idx, jdx, x[idx], x[jdx], locus))
    # recheck on emit
    def holds(c):
        if c.kind == "sign_change":
            return det[c.index_a] * det[c.index_b] < 0
        return cond[c.index_a] > threshold

    return [c for c in cells if holds(c)]


def sample_grid(solution: KWaveSolution, xgrid, threads: int = 1, cond_threshold: float = 1e8) -> GridSample:
    """Evaluate ``u`` over an x-grid by warm-started continuation.

    The first point of every grid row (rows run along the last axis) is solved
    in lexicographic order, each warm-started from the previous row start;
    rows are then swept independently, each point warm-started from its
    predecessor.  A failed warm start falls back to a cold start at ``r = 0``.
    Output does not depend on ``threads``.

    Points where Newton fails, or where ``det phi <= 0`` (the sheet beyond a
    gradient catastrophe), are marked unresolved.
    """
    axes = parse_grid(xgrid, "x-grid")
    if len(axes) != solution.p:
        raise ContractError(f"x-grid has {len(axes)} axes but the model has p = {solution.p}")
    pts = grid_points(axes)
    shape = pts.shape[:-1]
    n_last = shape[-1]
    k, q, p = solution.k, solution.q, solution.p
    flat = pts.reshape(-1, n_last, p)
    n_rows = flat.shape[0]

    names = ("r", "status", "iterations", "residual", "jac_cond", "det_jac", "phi_det")
    cols = {
        "r": np.full((n_rows, n_last, k), np.nan),
        "status": np.full((n_rows, n_last), NO_CONVERGENCE),
        "iterations": np.full((n_rows, n_last), -1),
        "residual": np.full((n_rows, n_last), np.nan),
        "jac_cond": np.full((n_rows, n_last), np.nan),
        "det_jac": np.full((n_rows, n_last), np.nan),
        "phi_det": np.full((n_rows, n_last), np.nan),
    }

    def store(rows, j, res):
        for name in names:
            cols[name][rows, j] = getattr(res, name)

    prev = None
    for i in range(n_rows):
        res = _try_solve(solution, flat[i, 0], prev)
        if res is not None:
            prev = res.r
            cols["r"][i, 0] = res.r
            cols["status"][i, 0] = CONVERGED
            cols["iterations"][i, 0] = res.iterations
            cols["residual"][i, 0] = res.residual
            cols["jac_cond"][i, 0] = res.jac_cond
            cols["det_jac"][i, 0] = res.det_jac
            cols["phi_det"][i, 0] = res.phi_det

    def sweep(rows):
        # every row is continued along the last axis from its own previous point
        last = cols["r"][rows, 0].copy()
        has = cols["status"][rows, 0] == CONVERGED
        for j in range(1, n_last):
            res = _solve_with_fallback(solution, flat[rows, j], last, has)
            store(rows, j, res)
            ok = res.converged
            last[ok] = res.r[ok]
            has = has | ok

    chunks = [c for c in np.array_split(np.arange(n_rows), max(1, min(threads, n_rows))) if c.size]
    if len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            list(pool.map(sweep, chunks))
    else:
        for c in chunks:
            sweep(c)

    converged = (cols["status"] == CONVERGED).reshape(shape)
    r = cols["r"].reshape(shape + (k,))
    r[~converged] = np.nan
    iters = np.where(converged, cols["iterations"].reshape(shape), -1)
    cond = cols["jac_cond"].reshape(shape)
    det = cols["det_jac"].reshape(shape)
    phi_det = cols["phi_det"].reshape(shape)
    past = np.isfinite(phi_det) & (phi_det <= 0.0)
    resolved = converged & ~past & (cond <= solution.newton.singular_cond)
    u = np.full(shape + (q,), np.nan)
    if np.any(resolved):
        u[resolved] = solution.surface.f_batch(r[resolved])
    cells = _find_cells(axes, pts, det, cond, converged, cond_threshold)
    return GridSample(axes, pts, r, u, iters, cond, det, converged, resolved, CatastropheReport(cells, cond_threshold))
