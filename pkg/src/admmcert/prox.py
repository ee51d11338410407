"""Closed-form subproblem solvers for the x- and y-updates.

The x-update for a quadratic f solves (2s A^T A + F^T F) x = rhs; for an
affine indicator it solves the equality-constrained least-squares KKT
system. The r-proximal variant replaces F^T F on the left by r*I, which
stays solvable even when A and F share a null direction. All factorizations
are computed once per (problem, parameters) pair and cached.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import IllConditionedError, ParameterError, UnsupportedProblemError
from .functions import AffineIndicator, HuberSmoothedL1, Quadratic, ScaledL1

COND_LIMIT = 1e12


def soft_threshold(v, t):
    """Componentwise shrink: sign(v) * max(|v| - t, 0). Ties at |v| = t map to 0."""
    if t < 0:
        raise ParameterError("shrink threshold must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def huber_prox(v, t, w, delta):
    """prox of t * huber_{w,delta} applied componentwise."""
    if t < 0:
        raise ParameterError("prox step must be nonnegative")
    v = np.asarray(v, dtype=float)
    cut = delta + t * w
    quad = np.abs(v) <= cut
    return np.where(quad, v * (delta / cut), v - t * w * np.sign(v))


class FactorizationCache:
    """Caches linear-system factorizations keyed by (problem tag, kind, s, r)."""

    def __init__(self):
        self._store = {}

    def get(self, key, builder):
        entry = self._store.get(key)
        if entry is None:
            entry = builder()
            self._store[key] = entry
        return entry

    def __len__(self):
        return len(self._store)


def _spd_entry(M):
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedError(
            f"x-update system has condition estimate {cond:.3e} > {COND_LIMIT:.0e}; "
            "use the r-proximal variant instead"
        )
    factor = scipy.linalg.cho_factor(M, lower=True)
    return {"matrix": M, "cond": cond, "solve": lambda rhs: scipy.linalg.cho_solve(factor, rhs)}


def _kkt_entry(M):
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedError(
            f"KKT system has condition estimate {cond:.3e} > {COND_LIMIT:.0e}"
        )
    lu, piv = scipy.linalg.lu_factor(M)
    return {"matrix": M, "cond": cond, "solve": lambda rhs: scipy.linalg.lu_solve((lu, piv), rhs)}


def quadratic_x_update(spec, y_k, lambda_k, s, cache=None):
    """x-update for quadratic f: stationarity s*grad f + F^T(Fx + Gy - h + s*lam) = 0."""
    f = spec.f
    if not isinstance(f, Quadratic):
        raise UnsupportedProblemError("quadratic_x_update requires a quadratic f")
    cache = cache if cache is not None else FactorizationCache()
    entry = cache.get(
        (spec.tag, "std_quad", float(s)),
        lambda: _spd_entry(2.0 * s * f.gram + spec.FtF),
    )
    rhs = 2.0 * s * f.gram_rhs + spec.F.T @ (spec.h - spec.G @ y_k - s * lambda_k)
    x = entry["solve"](rhs)
    res = np.linalg.norm(entry["matrix"] @ x - rhs)
    if res > 1e-10 * (1.0 + np.linalg.norm(rhs)):
        raise IllConditionedError(f"x-update solve residual {res:.3e} exceeds tolerance")
    return x


def indicator_x_update(spec, y_k, lambda_k, s, cache=None):
    """x-update for an affine-indicator f: project in the F-metric onto {Ax = b}."""
    f = spec.f
    if not isinstance(f, AffineIndicator):
        raise UnsupportedProblemError("indicator_x_update requires an affine-indicator f")
    cache = cache if cache is not None else FactorizationCache()
    m1 = f.A.shape[0]

    def build():
        K = np.block([
            [spec.FtF, f.A.T],
            [f.A, np.zeros((m1, m1))],
        ])
        return _kkt_entry(K)

    entry = cache.get((spec.tag, "std_kkt"), build)
    rhs = np.concatenate([spec.F.T @ (spec.h - spec.G @ y_k - s * lambda_k), f.b])
    x = entry["solve"](rhs)[: spec.d1]
    if np.linalg.norm(f.A @ x - f.b) > 1e-10 * (1.0 + np.linalg.norm(f.b)):
        raise IllConditionedError("indicator x-update left the constraint set")
    return x


def l1_y_update(spec, x_next, lambda_k, s):
    """y-update for g = w||.||_1 with G = +/-I: a shrink of c*(h - Fx - s*lam)."""
    if spec.G_sign is None:
        raise UnsupportedProblemError("general G y-update unsupported; need G = +I or -I")
    if not isinstance(spec.g, ScaledL1):
        raise UnsupportedProblemError("l1_y_update requires g = w||.||_1")
    u = spec.G_sign * (spec.h - spec.F @ x_next - s * lambda_k)
    return soft_threshold(u, s * spec.g.w)


def huber_y_update(spec, x_next, lambda_k, s):
    """y-update for the Huber-smoothed regularizer with G = +/-I."""
    if spec.G_sign is None:
        raise UnsupportedProblemError("general G y-update unsupported; need G = +I or -I")
    g = spec.g
    u = spec.G_sign * (spec.h - spec.F @ x_next - s * lambda_k)
    return huber_prox(u, s, g.w, g.delta)


def y_update(spec, x_next, lambda_k, s):
    if isinstance(spec.g, ScaledL1):
        return l1_y_update(spec, x_next, lambda_k, s)
    if isinstance(spec.g, HuberSmoothedL1):
        return huber_y_update(spec, x_next, lambda_k, s)
    raise UnsupportedProblemError(f"no closed-form y-update for {type(spec.g).__name__}")


def _check_r(spec, r):
    if not r > spec.FtF_norm:
        raise ParameterError(
            f"r = {r!r} must be greater than the maximum eigenvalue of F^T F "
            f"({spec.FtF_norm!r})"
        )


def proximal_x_update_general(spec, x_k, y_k, lambda_k, s, r, cache=None):
    """r-proximal x-update: adds (r||x - x_k||^2 - ||F(x - x_k)||^2)/(2s) to the subproblem.

    For quadratic f the system matrix becomes 2s A^T A + r I, so no
    invertibility of A^T A + s F^T F is needed.
    """
    _check_r(spec, r)
    cache = cache if cache is not None else FactorizationCache()
    f = spec.f
    drive = spec.F.T @ (spec.h - spec.G @ y_k - s * lambda_k) + r * x_k - spec.FtF @ x_k

    if isinstance(f, Quadratic):
        entry = cache.get(
            (spec.tag, "gen_quad", float(s), float(r)),
            lambda: _spd_entry(2.0 * s * f.gram + r * np.eye(spec.d1)),
        )
        rhs = 2.0 * s * f.gram_rhs + drive
        x = entry["solve"](rhs)
        res = np.linalg.norm(entry["matrix"] @ x - rhs)
        if res > 1e-10 * (1.0 + np.linalg.norm(rhs)):
            raise IllConditionedError(f"general x-update solve residual {res:.3e}")
        return x

    if isinstance(f, AffineIndicator):
        m1 = f.A.shape[0]

        def build():
            K = np.block([
                [r * np.eye(spec.d1), f.A.T],
                [f.A, np.zeros((m1, m1))],
            ])
            return _kkt_entry(K)

        entry = cache.get((spec.tag, "gen_kkt", float(r)), build)
        rhs = np.concatenate([drive, f.b])
        return entry["solve"](rhs)[: spec.d1]

    raise UnsupportedProblemError("general x-update needs a quadratic or indicator f")


def x_update(spec, y_k, lambda_k, s, cache=None):
    """Standard x-update, dispatching on the structure of f."""
    if isinstance(spec.f, Quadratic):
        return quadratic_x_update(spec, y_k, lambda_k, s, cache)
    if isinstance(spec.f, AffineIndicator):
        return indicator_x_update(spec, y_k, lambda_k, s, cache)
    raise UnsupportedProblemError(f"no closed-form x-update for {type(spec.f).__name__}")
