"""Exact cyclic coordinate ascent on the dual problem.

Each coordinate update solves its marginal equation exactly: with the other
potential held fixed, the map ``t -> sum_j w[j] * (t - theta[j])_+`` is
piecewise linear, continuous, nondecreasing and strictly increasing where
positive, so for a positive target the root is unique and can be located by
scanning the sorted breakpoints. No inner iteration and no tolerance enter a
single update; only the outer sweep loop is iterative.

The same kernel covers the self-transport mode: the diagonal term
``mu_tilde[i] * (2 t - c[i, i])_+`` is rewritten as a breakpoint at
``c[i, i] / 2`` with doubled weight.
"""

from dataclasses import dataclass

import numpy as np

from .model import (
    Potentials,
    ValidationError,
    density_from_potentials,
    dual_objective,
    duality_gap,
    marginal_residuals,
    shift_potentials,
)

__all__ = [
    "SolverConfig",
    "RowEquation",
    "solve_row_equation",
    "sweep",
    "solve",
    "solve_symmetric",
]

NORMALIZATIONS = ("anchor_first_component_zero", "mean_zero_f", "none")


@dataclass(frozen=True)
class SolverConfig:
    tol_residual: float = 1e-10
    max_sweeps: int = 100_000
    normalization: str = "anchor_first_component_zero"
    check_monotone: bool = True

    def __post_init__(self):
        if not self.tol_residual > 0:
            raise ValidationError("tol_residual must be positive")
        if self.max_sweeps < 1:
            raise ValidationError("max_sweeps must be at least 1")
        if self.normalization not in NORMALIZATIONS:
            raise ValidationError(
                f"normalization must be one of {NORMALIZATIONS}, got {self.normalization!r}"
            )


@dataclass(frozen=True)
class RowEquation:
    """One marginal equation: find ``t`` with ``sum_j weights[j] (t - thresholds[j])_+ = target``."""

    thresholds: np.ndarray
    weights: np.ndarray
    target: float

    def __post_init__(self):
        thresholds = np.asarray(self.thresholds, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if thresholds.shape != weights.shape or thresholds.ndim != 1:
            raise ValidationError("thresholds and weights must be 1-d arrays of equal length")
        if not np.all(weights > 0):
            raise ValidationError("weights must be strictly positive")
        if not self.target > 0:
            raise ValidationError("nonpositive target")
        object.__setattr__(self, "thresholds", thresholds)
        object.__setattr__(self, "weights", weights)


def _pw_roots(thresholds, weights, targets):
    """Roots of ``sum_k w[r, k] (t - th[r, k])_+ = targets[r]``, one per row.

    Sort the breakpoints of each row, accumulate slopes, evaluate the function
    at the breakpoints, and solve the linear equation on the segment whose
    value range brackets the target. Targets must be strictly positive, which
    makes each root unique. Exact up to floating point; no iteration.
    """
    th = np.atleast_2d(np.asarray(thresholds, dtype=float))
    w = np.asarray(weights, dtype=float)
    if w.ndim == 1:
        w = np.broadcast_to(w, th.shape)
    order = np.argsort(th, axis=1, kind="stable")
    th = np.take_along_axis(th, order, axis=1)
    w = np.take_along_axis(w, order, axis=1)
    slopes = np.cumsum(w, axis=1)
    values = np.zeros_like(th)
    if th.shape[1] > 1:
        values[:, 1:] = np.cumsum(slopes[:, :-1] * np.diff(th, axis=1), axis=1)
    targets = np.asarray(targets, dtype=float).reshape(-1)
    # first breakpoint with value >= target; its left neighbor starts the
    # bracketing segment (values[:, 0] = 0 < target, so j >= 0)
    j = np.sum(values < targets[:, None], axis=1) - 1
    rows = np.arange(th.shape[0])
    return th[rows, j] + (targets - values[rows, j]) / slopes[rows, j]


def solve_row_equation(eq):
    """Exact root of a single piecewise-linear marginal equation."""
    return float(_pw_roots(eq.thresholds, eq.weights, [eq.target])[0])


def sweep(inst, p):
    """One full Gauss-Seidel cycle: all row updates, then all column updates.

    Row updates use the current ``g`` and make every row equation exact; the
    column updates then use the fresh ``f``. Each update maximizes the concave
    dual objective in its coordinate, so the dual value never decreases along
    a sweep.
    """
    f = _pw_roots(inst.cost - p.g[None, :], inst.nu_tilde, inst.epsilon * inst.mu_ratio)
    g = _pw_roots(inst.cost.T - f[None, :], inst.mu_tilde, inst.epsilon * inst.nu_ratio)
    return Potentials(f=f, g=g)


def _normalize(p, mode):
    if mode == "none" or p.symmetric:
        return p
    if mode == "anchor_first_component_zero":
        return shift_potentials(p, -p.f[0])
    if mode == "mean_zero_f":
        return shift_potentials(p, -float(np.mean(p.f)))
    raise ValidationError(f"unknown normalization {mode!r}")


def _residual_norm(inst, p):
    cd = density_from_potentials(inst, p)
    row, col = marginal_residuals(inst, cd)
    return max(float(np.max(np.abs(row))), float(np.max(np.abs(col))))


def solve(inst, cfg=None, init=None):
    """Solve the dual by exact cyclic coordinate ascent.

    Iterates :func:`sweep` until the worst marginal residual falls below
    ``cfg.tol_residual`` or ``cfg.max_sweeps`` is exhausted; the configured
    normalization shift is applied once after the loop (shifts do not change
    the density). Non-convergence is reported through
    ``report.converged = False``, not raised.

    Parameters
    ----------
    inst : Instance
    cfg : SolverConfig, optional
    init : Potentials, optional
        Starting point, defaults to zero potentials. Useful for warm starts
        across a family of instances.

    Returns
    -------
    (Potentials, SolveReport)
    """
    cfg = cfg or SolverConfig()
    p = init if init is not None else Potentials(np.zeros(inst.n), np.zeros(inst.m))
    if cfg.check_monotone:
        dual_prev = dual_objective(inst, p)

    converged = False
    sweeps = 0
    for sweeps in range(1, cfg.max_sweeps + 1):
        p = sweep(inst, p)
        if cfg.check_monotone:
            dual_now = dual_objective(inst, p)
            if dual_now < dual_prev - 1e-12 * (1.0 + abs(dual_prev)):
                raise RuntimeError(
                    f"dual objective decreased across a sweep: {dual_prev} -> {dual_now}"
                )
            dual_prev = dual_now
        if _residual_norm(inst, p) <= cfg.tol_residual:
            converged = True
            break

    p = _normalize(p, cfg.normalization)
    report = duality_gap(
        inst, p, density_from_potentials(inst, p), iterations=sweeps, converged=converged
    )
    return p, report


def _check_self_transport(inst):
    if inst.n != inst.m:
        raise ValidationError("asymmetric input: marginal sizes differ")
    if not np.allclose(inst.mu, inst.nu, rtol=0, atol=1e-12):
        raise ValidationError("asymmetric input: mu != nu")
    if not np.allclose(inst.mu_tilde, inst.nu_tilde, rtol=0, atol=1e-12):
        raise ValidationError("asymmetric input: mu_tilde != nu_tilde")
    if not np.allclose(inst.cost, inst.cost.T, rtol=0, atol=1e-12):
        raise ValidationError("asymmetric input: cost matrix is not symmetric")


def _symmetric_pass(inst, f):
    """Sequential coordinate updates of the single symmetric potential vector."""
    f = f.copy()
    targets = inst.epsilon * inst.mu_ratio
    for i in range(inst.n):
        th = inst.cost[i] - f
        th[i] = 0.5 * inst.cost[i, i]
        w = inst.mu_tilde.copy()
        w[i] = 2.0 * inst.mu_tilde[i]  # diagonal term (2t - c_ii)_+ has slope 2 mu_tilde[i]
        f[i] = _pw_roots(th[None, :], w, [targets[i]])[0]
    return f


def _symmetric_dual(inst, f):
    return dual_objective(inst, Potentials(f=f, g=f, symmetric=True))


def solve_symmetric(inst, cfg=None, init=None):
    """Self-transport solver maintaining a single potential vector ``f = g``.

    Requires ``n = m``, equal marginals, equal references and a symmetric
    cost. Coordinate updates remain exact piecewise-linear root findings; as a
    safeguard, a sweep that decreases the symmetric dual value (which exact
    updates should never produce) is replaced by a line search between the old
    and new iterates.
    """
    _check_self_transport(inst)
    cfg = cfg or SolverConfig()
    f = init.f.copy() if init is not None else np.zeros(inst.n)
    dual_prev = _symmetric_dual(inst, f)

    converged = False
    sweeps = 0
    for sweeps in range(1, cfg.max_sweeps + 1):
        f_new = _symmetric_pass(inst, f)
        dual_new = _symmetric_dual(inst, f_new)
        if dual_new < dual_prev - 1e-12 * (1.0 + abs(dual_prev)):
            f_new, dual_new = _bisection_fallback(inst, f, f_new, dual_prev)
        f = f_new
        dual_prev = dual_new
        p = Potentials(f=f, g=f, symmetric=True)
        if _residual_norm(inst, p) <= cfg.tol_residual:
            converged = True
            break

    p = Potentials(f=f, g=f, symmetric=True)
    report = duality_gap(
        inst, p, density_from_potentials(inst, p), iterations=sweeps, converged=converged
    )
    return p, report


def _bisection_fallback(inst, f_old, f_new, dual_old):
    """Line search on the segment toward the rejected sweep iterate.

    The symmetric dual is concave, hence concave along the segment; a ternary
    search locates its maximizer to high precision. Falls back to the old
    iterate if not even the searched point improves.
    """
    direction = f_new - f_old
    lo, hi = 0.0, 1.0
    for _ in range(200):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if _symmetric_dual(inst, f_old + m1 * direction) < _symmetric_dual(
            inst, f_old + m2 * direction
        ):
            lo = m1
        else:
            hi = m2
        if hi - lo < 1e-14:
            break
    s = 0.5 * (lo + hi)
    candidate = f_old + s * direction
    dual_candidate = _symmetric_dual(inst, candidate)
    if dual_candidate >= dual_old:
        return candidate, dual_candidate
    return f_old, dual_old
