"""scikit-learn style wrapper around the k-wave construction."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ContractError
from .geometry import certification_states, commutation_residual, make_frame
from .kwave import ImplicitProfile, KWaveSolution, NewtonSettings, integrate_surface
from .models import get_model


class RiemannKWave(TransformerMixin, BaseEstimator):
    """Build a Riemann k-wave in :meth:`fit`; map space points to invariants or states.

    Parameters
    ----------
    model : str
        Catalogue name, e.g. ``"shallow-water"``.
    model_params : dict or None
        Keyword parameters of the model factory.
    frame : sequence of str
        Branch selectors, e.g. ``("fast",)`` or ``("fast", "slow")``.
    base_state : array-like
        ``f(0)``.
    rgrid : str or sequence
        Surface grid, ``"min:max:n[,...]"``.
    profiles : sequence of dict
        Implicit profiles ``psi^s`` in their JSON form.
    tracked : bool
        Use unit kernel vectors instead of the analytic commuting frame.
    newton : dict or None
        Overrides of :class:`~riemann_kwave.kwave.NewtonSettings`.
    certify_samples, seed : int
        States used to certify the frame as commuting.

    ``fit`` ignores its ``X`` apart from recording ``n_features_in_``; the
    construction is determined by the parameters alone.
    """

    def __init__(
        self,
        model="shallow-water",
        model_params=None,
        frame=("fast",),
        base_state=(0.0, 1.0),
        rgrid="-1:1:201",
        profiles=({"kind": "linear", "slope": [1.0], "offset": 0.0},),
        tracked=False,
        newton=None,
        certify_samples=25,
        seed=0,
    ):
        self.model = model
        self.model_params = model_params
        self.frame = frame
        self.base_state = base_state
        self.rgrid = rgrid
        self.profiles = profiles
        self.tracked = tracked
        self.newton = newton
        self.certify_samples = certify_samples
        self.seed = seed

    def fit(self, X=None, y=None):
        model = get_model(self.model, **(self.model_params or {}))
        frame = make_frame(model, list(self.frame), tracked=self.tracked)
        base = np.asarray(self.base_state, dtype=float)
        states = certification_states(frame, base, n=self.certify_samples, seed=self.seed)
        self.commutation_residual_ = commutation_residual(frame, states)
        if not frame.commuting_certified:
            raise ContractError(f"frame {list(frame.selectors)} is not commuting near {base.tolist()}")
        surface = integrate_surface(frame, base, self.rgrid)
        profiles = [ImplicitProfile.from_dict(p) for p in self.profiles]
        self.solution_ = KWaveSolution(surface, profiles, NewtonSettings(**(self.newton or {})))
        self.model_ = model
        self.n_features_in_ = model.p
        if X is not None:
            check_array(X, ensure_2d=True)
        return self

    def _solve(self, X):
        check_is_fitted(self, "solution_")
        X = check_array(X, ensure_2d=True, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, but {type(self).__name__} expects {self.n_features_in_}")
        res = self.solution_.solve_batch(X)
        r = res.r.copy()
        r[~res.converged] = np.nan
        return r, res

    def transform(self, X):
        """Riemann invariants ``r(x)`` per row; NaN where Newton fails.

        Every row is solved from a cold start at ``r = 0``; use
        :func:`~riemann_kwave.kwave.sample_grid` for continuation along a grid.
        """
        return self._solve(X)[0]

    def predict(self, X):
        """States ``u(x)`` per row; NaN where Newton fails."""
        r, res = self._solve(X)
        u = np.full((r.shape[0], self.solution_.q), np.nan)
        ok = res.converged
        if np.any(ok):
            u[ok] = self.solution_.surface.f_batch(r[ok])
        return u
