"""Localization landscape: solve Lu = 1 and work with W = 1/u."""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import (NonPositiveLandscape, NotConverged, SingularOperator,
                     ValidationError)

DEFAULT_TOLERANCE = 1e-10


@dataclass(frozen=True)
class LandscapeField:
    grid: object
    u: np.ndarray
    residual_norm: float
    iterations: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        u = np.array(self.grid.check_field(self.u), dtype=np.float64)
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @cached_property
    def W(self):
        return effective_potential(self)


def _pcg(op, b, tol, max_iterations, jacobi, x0=None):
    """Preconditioned CG on the grid-shaped system; returns (x, iterations)."""
    diag = 2.0 * op.grid.dim * op.inv_h2 + op.V
    minv = 1.0 / diag if jacobi else None
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - op.apply(x) if x0 is not None else b.copy()
    bnorm = np.linalg.norm(b)
    z = r * minv if jacobi else r
    p = z.copy()
    rz = np.vdot(r, z)
    for it in range(1, max_iterations + 1):
        Ap = op.apply(p)
        alpha = rz / np.vdot(p, Ap)
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= tol * bnorm:
            return x, it
        z = r * minv if jacobi else r
        rz_new = np.vdot(r, z)
        p *= rz_new / rz
        p += z
        rz = rz_new
    return x, max_iterations


def solve_landscape(op, tolerance=DEFAULT_TOLERANCE, max_iterations=None,
                    preconditioner="jacobi", restarts=3):
    """Conjugate-gradient solution of (-Laplace + V) u = 1 on the torus."""
    V = op.V
    if np.any(V < 0):
        raise ValidationError("landscape requires a nonnegative potential")
    if not np.any(V > 0):
        raise SingularOperator("V == 0: constants span the kernel of -Laplace, Lu = 1 has no solution")
    if preconditioner not in ("jacobi", "none"):
        raise ValueError(f"unknown preconditioner {preconditioner!r}")
    if max_iterations is None:
        max_iterations = max(1000, 20 * op.grid.total_points)
    b = np.ones(op.grid.shape)
    bnorm = np.linalg.norm(b)
    x, total = None, 0
    # the recursive residual drifts from the true one; verify and restart
    for _ in range(restarts + 1):
        x, it = _pcg(op, b, tolerance, max_iterations - total, preconditioner == "jacobi", x)
        total += it
        res = np.linalg.norm(b - op.apply(x)) / bnorm
        if res <= tolerance:
            return LandscapeField(op.grid, x, float(res), total,
                                  provenance={"tolerance": tolerance, "preconditioner": preconditioner})
        if total >= max_iterations:
            break
    raise NotConverged(f"CG stopped at relative residual {res:.3e} after {total} iterations")


def _u_of(landscape):
    return landscape.u if isinstance(landscape, LandscapeField) else np.asarray(landscape, dtype=np.float64)


def effective_potential(landscape):
    u = _u_of(landscape)
    if np.any(~(u > 0)):
        raise NonPositiveLandscape("landscape must be strictly positive")
    return 1.0 / u


def local_minima_indices(W):
    """Representative linear indices of the local minima of W, ordered by value then index."""
    W = np.asarray(W, dtype=np.float64)
    reps = _kernels.plateau_minima(W, W.shape)
    vals = W.ravel()[reps]
    return reps[np.lexsort((reps, vals))]


def local_minima(W):
    """Values of the local minima of W (plateaus counted once), nondecreasing."""
    W = np.asarray(W, dtype=np.float64)
    return W.ravel()[local_minima_indices(W)]


def ground_state_identity_residual(op, landscape, f):
    """Relative gap between <Lf,f> and its rewriting through g = f/u."""
    u = op.grid.check_field(_u_of(landscape))
    f = op._check(f)
    g = f / u
    lhs = op.quadratic_form(f)
    grad = sum(np.sum(u * np.roll(u, -1, axis=a) * (g - np.roll(g, -1, axis=a)) ** 2)
               for a in range(op.grid.dim))
    hd = op.grid.cell_volume
    rhs = hd * op.inv_h2 * grad + hd * float(np.sum(f * f / u))
    return abs(lhs - rhs) / abs(lhs)
