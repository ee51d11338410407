"""Constrained problem model: min f(x) + g(y) subject to F x + G y = h.

Holds the problem container, the canonical builders (generalized lasso,
basis pursuit), Lagrangians, KKT residuals, and the instance file format.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import ProblemConstructionError
from .functions import AffineIndicator, HuberSmoothedL1, Quadratic, ScaledL1

FEASIBILITY_TOL = 1e-10

_tag_counter = itertools.count()


class ProblemSpec:
    """Immutable problem instance (f, g, F, G, h)."""

    def __init__(self, f, g, F, G, h):
        self.f = f
        self.g = g
        self.F = np.atleast_2d(np.asarray(F, dtype=float))
        self.G = np.atleast_2d(np.asarray(G, dtype=float))
        self.h = np.atleast_1d(np.asarray(h, dtype=float))

        self.m, self.d1 = self.F.shape
        if self.G.shape[0] != self.m:
            raise ProblemConstructionError(
                f"rows of G ({self.G.shape[0]}) do not match rows of F ({self.m})"
            )
        self.d2 = self.G.shape[1]
        if self.h.shape[0] != self.m:
            raise ProblemConstructionError(
                f"length of h ({self.h.shape[0]}) does not match rows of F ({self.m})"
            )
        if getattr(self.f, "dim", self.d1) != self.d1:
            raise ProblemConstructionError("f acts on a space of the wrong dimension")
        if getattr(self.g, "dim", self.d2) != self.d2:
            raise ProblemConstructionError("g acts on a space of the wrong dimension")

        stacked = np.hstack([self.F, self.G])
        z, *_ = np.linalg.lstsq(stacked, self.h, rcond=None)
        feas = float(np.linalg.norm(stacked @ z - self.h))
        if feas > FEASIBILITY_TOL:
            raise ProblemConstructionError(
                f"constraint F x + G y = h is infeasible (least-squares residual {feas:.3e})"
            )

        self.FtF = self.F.T @ self.F
        self.FtG = self.F.T @ self.G
        sv = np.linalg.svd(self.F, compute_uv=False)
        self.FtF_norm = float(sv[0] ** 2)

        # G = c*I with c in {+1, -1} enables the closed-form y-update.
        self.G_sign = None
        if self.d2 == self.m:
            eye = np.eye(self.m)
            if np.array_equal(self.G, eye):
                self.G_sign = 1.0
            elif np.array_equal(self.G, -eye):
                self.G_sign = -1.0

        self.tag = next(_tag_counter)
        for arr in (self.F, self.G, self.h):
            arr.flags.writeable = False

    def constraint_residual(self, x, y):
        return self.F @ x + self.G @ y - self.h

    def objective(self, x, y):
        return self.f.value(x) + self.g.value(y)

    def smoothed(self, huber_delta=1e-3):
        """Replace an l1 regularizer by its Huber smoothing (for continuous runs)."""
        if isinstance(self.g, HuberSmoothedL1):
            return self
        if not isinstance(self.g, ScaledL1):
            raise ProblemConstructionError("only an l1 regularizer can be smoothed")
        return ProblemSpec(self.f, HuberSmoothedL1(self.g.w, huber_delta), self.F, self.G, self.h)


class SaddlePoint:
    """Certified reference solution (x*, y*, lambda*) with its KKT residual."""

    def __init__(self, x_star, y_star, lambda_star, kkt_residual):
        self.x_star = np.asarray(x_star, dtype=float)
        self.y_star = np.asarray(y_star, dtype=float)
        self.lambda_star = np.asarray(lambda_star, dtype=float)
        self.kkt_residual = float(kkt_residual)
        for arr in (self.x_star, self.y_star, self.lambda_star):
            arr.flags.writeable = False


def build_generalized_lasso(A, b, F_reg, w):
    """min ||A x - b||^2 + w ||y||_1 subject to F_reg x - y = 0."""
    f = Quadratic(A, b)
    F_reg = np.atleast_2d(np.asarray(F_reg, dtype=float))
    if F_reg.shape[1] != f.dim:
        raise ProblemConstructionError(
            f"columns of F_reg ({F_reg.shape[1]}) do not match columns of A ({f.dim})"
        )
    m = F_reg.shape[0]
    return ProblemSpec(f, ScaledL1(w), F_reg, -np.eye(m), np.zeros(m))


def build_basis_pursuit(A, b):
    """min ||y||_1 subject to A x = b and x - y = 0."""
    f = AffineIndicator(A, b)
    d = f.dim
    return ProblemSpec(f, ScaledL1(1.0), np.eye(d), -np.eye(d), np.zeros(d))


def lagrangian(spec, x, y, lam):
    """Unaugmented Lagrangian f(x) + g(y) + <lam, Fx + Gy - h>."""
    base = spec.f.value(x) + spec.g.value(y)
    if not np.isfinite(base):
        return np.inf
    return base + float(lam @ spec.constraint_residual(x, y))


def augmented_lagrangian(spec, x, y, lam, s):
    """Lagrangian plus the (1/2s)||Fx + Gy - h||^2 penalty."""
    from .errors import ParameterError

    if s <= 0:
        raise ParameterError("penalty parameter s must be positive")
    base = lagrangian(spec, x, y, lam)
    if not np.isfinite(base):
        return np.inf
    r = spec.constraint_residual(x, y)
    return base + float(r @ r) / (2.0 * s)


def kkt_residuals(spec, x, y, lam):
    """(primal, dual_x, dual_y): constraint norm and subgradient-membership distances."""
    primal = float(np.linalg.norm(spec.constraint_residual(x, y)))
    dual_x = spec.f.subgrad_distance(-(spec.F.T @ lam), x)
    dual_y = spec.g.subgrad_distance(-(spec.G.T @ lam), y)
    return primal, dual_x, dual_y


# ---------------------------------------------------------------------------
# Instance file format: named CSV blocks, row-major, decimal floats.

_VARIANT_NAMES = {
    Quadratic: "quadratic",
    ScaledL1: "scaled_l1",
    AffineIndicator: "affine_indicator",
    HuberSmoothedL1: "huber_l1",
}


def _fmt_matrix(M):
    M = np.atleast_2d(M)
    return "\n".join(",".join(repr(float(v)) for v in row) for row in M)


def save_instance(spec, path):
    f_line = _VARIANT_NAMES[type(spec.f)]
    g = spec.g
    if isinstance(g, ScaledL1):
        g_line = f"scaled_l1,{g.w!r}"
    elif isinstance(g, HuberSmoothedL1):
        g_line = f"huber_l1,{g.w!r},{g.delta!r}"
    else:
        raise ProblemConstructionError("only l1-type g variants are serializable")
    parts = [
        "[f.variant]", f_line,
        "[g.variant]", g_line,
        "[A]", _fmt_matrix(spec.f.A),
        "[b]", _fmt_matrix(spec.f.b.reshape(-1, 1)),
        "[F]", _fmt_matrix(spec.F),
        "[G]", _fmt_matrix(spec.G),
        "[h]", _fmt_matrix(spec.h.reshape(-1, 1)),
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def load_instance(path):
    sections = {}
    current = None
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                sections[current] = []
            else:
                if current is None:
                    raise ProblemConstructionError(f"malformed instance file {path}")
                sections[current].append(line)

    required = ["f.variant", "g.variant", "A", "b", "F", "G", "h"]
    missing = [k for k in required if k not in sections]
    if missing:
        raise ProblemConstructionError(f"instance file missing sections {missing}")

    def block(name, vector=False):
        rows = [[float(v) for v in line.split(",")] for line in sections[name]]
        M = np.array(rows, dtype=float)
        return M[:, 0] if vector else M

    A = block("A")
    b = block("b", vector=True)
    f_kind = sections["f.variant"][0]
    if f_kind == "quadratic":
        f = Quadratic(A, b)
    elif f_kind == "affine_indicator":
        f = AffineIndicator(A, b)
    else:
        raise ProblemConstructionError(f"unknown f variant {f_kind!r}")

    g_parts = sections["g.variant"][0].split(",")
    if g_parts[0] == "scaled_l1":
        g = ScaledL1(float(g_parts[1]))
    elif g_parts[0] == "huber_l1":
        g = HuberSmoothedL1(float(g_parts[1]), float(g_parts[2]))
    else:
        raise ProblemConstructionError(f"unknown g variant {g_parts[0]!r}")

    return ProblemSpec(f, g, block("F"), block("G"), block("h", vector=True))
