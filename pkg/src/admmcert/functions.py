"""Separable objective terms: least squares, weighted l1, affine indicator, Huber.

Each class evaluates its function and measures distances to its
subdifferential, which is what the dual residuals and every optimality
inclusion check are built from.
"""

from __future__ import annotations

import numpy as np

from .errors import ProblemConstructionError

# Membership tolerance for the affine indicator: points produced by the
# equality-constrained x-update satisfy their constraint to ~1e-10.
INDICATOR_FEAS_TOL = 1e-8


def _as_matrix(M, name):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0 or M.shape[0] == 0:
        raise ProblemConstructionError(f"empty data matrix {name!r}")
    return M


def _as_vector(v, name):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.ndim != 1:
        raise ProblemConstructionError(f"{name!r} must be a vector")
    return v


class Quadratic:
    """f(v) = ||A v - b||^2 (no 1/2 factor; strong convexity modulus 2*lam_min(A^T A))."""

    smooth = True

    def __init__(self, A, b):
        self.A = _as_matrix(A, "A")
        self.b = _as_vector(b, "b")
        if self.A.shape[0] != self.b.shape[0]:
            raise ProblemConstructionError(
                f"rows of A ({self.A.shape[0]}) do not match length of b ({self.b.shape[0]})"
            )
        self.dim = self.A.shape[1]
        self._AtA = self.A.T @ self.A
        self._Atb = self.A.T @ self.b
        self.A.flags.writeable = False
        self.b.flags.writeable = False

    @property
    def gram(self):
        return self._AtA

    @property
    def gram_rhs(self):
        return self._Atb

    def value(self, v):
        r = self.A @ v - self.b
        return float(r @ r)

    def grad(self, v):
        return 2.0 * (self.A.T @ (self.A @ v - self.b))

    def subgrad_distance(self, target, at):
        return float(np.linalg.norm(target - self.grad(at)))

    def strong_convexity_modulus(self):
        return 2.0 * float(np.linalg.eigvalsh(self._AtA)[0])


class ScaledL1:
    """g(v) = w * ||v||_1 with w > 0."""

    smooth = False

    def __init__(self, w):
        w = float(w)
        if w <= 0:
            raise ProblemConstructionError("l1 weight must be positive")
        self.w = w

    def value(self, v):
        return self.w * float(np.sum(np.abs(v)))

    def subgrad_distance(self, target, at):
        # Coordinatewise: [-w, w] at zero, the single point w*sign elsewhere.
        at = np.asarray(at, dtype=float)
        target = np.asarray(target, dtype=float)
        zero = at == 0.0
        d = np.where(
            zero,
            np.maximum(np.abs(target) - self.w, 0.0),
            np.abs(target - self.w * np.sign(at)),
        )
        return float(np.linalg.norm(d))


class AffineIndicator:
    """f(v) = 0 if A v = b, +inf otherwise. A must have full row rank."""

    smooth = False

    def __init__(self, A, b, rank_tol=1e-10):
        self.A = _as_matrix(A, "A")
        self.b = _as_vector(b, "b")
        if self.A.shape[0] != self.b.shape[0]:
            raise ProblemConstructionError(
                f"rows of A ({self.A.shape[0]}) do not match length of b ({self.b.shape[0]})"
            )
        sv = np.linalg.svd(self.A, compute_uv=False)
        if sv[-1] <= rank_tol * sv[0] or self.A.shape[0] > self.A.shape[1]:
            raise ProblemConstructionError("indicator set ill-posed: A is rank-deficient")
        self.dim = self.A.shape[1]
        self.A.flags.writeable = False
        self.b.flags.writeable = False

    def feasible(self, v, tol=INDICATOR_FEAS_TOL):
        return float(np.max(np.abs(self.A @ v - self.b))) <= tol

    def value(self, v):
        return 0.0 if self.feasible(v) else np.inf

    def subgrad_distance(self, target, at):
        # Subdifferential on the feasible set is range(A^T); empty off it.
        if not self.feasible(at):
            return np.inf
        nu, *_ = np.linalg.lstsq(self.A.T, target, rcond=None)
        return float(np.linalg.norm(target - self.A.T @ nu))


class HuberSmoothedL1:
    """C^1 smoothing of w*||v||_1: quadratic on [-delta, delta], linear outside.

    Pointwise below w*|v| and within w*delta/2 of it.
    """

    smooth = True

    def __init__(self, w, delta):
        w = float(w)
        delta = float(delta)
        if w <= 0 or delta <= 0:
            raise ProblemConstructionError("Huber weight and width must be positive")
        self.w = w
        self.delta = delta

    def value(self, v):
        a = np.abs(np.asarray(v, dtype=float))
        per = np.where(a <= self.delta, a * a / (2.0 * self.delta), a - self.delta / 2.0)
        return self.w * float(np.sum(per))

    def grad(self, v):
        v = np.asarray(v, dtype=float)
        return self.w * np.clip(v / self.delta, -1.0, 1.0)

    def hess_diag(self, v):
        v = np.asarray(v, dtype=float)
        return np.where(np.abs(v) <= self.delta, self.w / self.delta, 0.0)

    def subgrad_distance(self, target, at):
        return float(np.linalg.norm(np.asarray(target, dtype=float) - self.grad(at)))
