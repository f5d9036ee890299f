"""Semi-implicit step of the constrained phase equation.

One backward-Euler step of

    mu * beta_t - lap(beta) + dI_[0,1](beta)  contains  g,

with the driving force g frozen (the temperature enters through g
explicitly).  The inclusion is solved as a box-constrained
complementarity system by projected Gauss-Seidel; a Yosida-regularised
path solves the smooth approximation instead and serves as an
independent cross-check.

The multiplier xi (the constraint reaction selecting the
subdifferential) is recovered by substituting the converged beta back
into the discrete equation, so it absorbs the residual exactly at
active nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .constitutive import ModelParams
from .errors import NonConvergence, ValidationError
from .grid import Field, Grid, gradient_arrays, weighted_divergence_arrays

_CHECK_EVERY = 8  # sweeps between full residual evaluations


@dataclass
class PhaseStepResult:
    beta_new: Field
    xi: Field
    iterations: int
    complementarity_residual: float
    pde_residual: float


def _face_coefficients(grid: Grid):
    """Per-face coupling coefficient face_volume / h_axis^2."""
    fvols = grid.face_volumes()
    return tuple(fv / h**2 for fv, h in zip(fvols, grid.spacing))


def assemble_diagonal(grid: Grid, base: np.ndarray):
    """Stencil diagonal base + sum of adjacent face couplings.

    The accumulation order (x-left, x-right, y-left, y-right) matches
    the sweep kernels' numerator exactly, which keeps constant states
    bitwise stationary.
    """
    coeffs = _face_coefficients(grid)
    diag = np.array(base)
    if grid.dim == 1:
        (cx,) = coeffs
        cxm = np.zeros_like(diag)
        cxm[1:] = cx
        cxp = np.zeros_like(diag)
        cxp[:-1] = cx
        diag = (diag + cxm) + cxp
    else:
        cx, cy = coeffs
        cxm = np.zeros_like(diag)
        cxm[1:, :] = cx
        cxp = np.zeros_like(diag)
        cxp[:-1, :] = cx
        cym = np.zeros_like(diag)
        cym[:, 1:] = cy
        cyp = np.zeros_like(diag)
        cyp[:, :-1] = cy
        diag = (((diag + cxm) + cxp) + cym) + cyp
    return diag, coeffs


def apply_operator(grid: Grid, base: np.ndarray, values: np.ndarray) -> np.ndarray:
    """base * values - volume-weighted lap(values)."""
    grads = gradient_arrays(grid, values)
    return base * values - weighted_divergence_arrays(grid, grads)


def _projected_residual(beta, xi, tol_active=0.0):
    """KKT residual in multiplier units, infinity norm.

    Interior nodes must have xi ~ 0; nodes at the lower bound allow
    xi <= 0, nodes at the upper bound allow xi >= 0.
    """
    viol = np.abs(xi)
    viol = np.where(beta <= tol_active, np.maximum(xi, 0.0), viol)
    viol = np.where(beta >= 1.0 - tol_active, np.maximum(-xi, 0.0), viol)
    return float(np.max(viol)) if viol.size else 0.0


def complementarity_residual(beta: np.ndarray, xi: np.ndarray) -> float:
    """max over nodes of min(beta, max(0,-xi)) and min(1-beta, max(0,xi))."""
    lower = np.minimum(beta, np.maximum(0.0, -xi))
    upper = np.minimum(1.0 - beta, np.maximum(0.0, xi))
    return float(max(np.max(lower), np.max(upper))) + 0.0


def _validate_inputs(beta_old: Field, theta: Field, dt: float, tol: float):
    if beta_old.grid is not theta.grid and beta_old.grid != theta.grid:
        raise ValidationError("beta and theta live on different grids")
    if np.any(beta_old.values < 0.0) or np.any(beta_old.values > 1.0):
        raise ValidationError("beta_old violates the [0, 1] bounds")
    if dt <= 0.0:
        raise ValidationError("dt must be positive")
    if tol <= 0.0:
        raise ValidationError("tol must be positive")


def driving_force(theta: Field, params: ModelParams, extra_source=None) -> np.ndarray:
    """(theta - theta_c)/theta_c plus an optional manufactured source."""
    g = (theta.values - params.theta_c) / params.theta_c
    if extra_source is not None:
        g = g + extra_source
    return g


def phase_step_projected(
    beta_old: Field,
    theta: Field,
    dt: float,
    params: ModelParams,
    tol: float = 1e-10,
    max_iter: int = 50_000,
    extra_source=None,
) -> PhaseStepResult:
    """Backward-Euler phase step by projected Gauss-Seidel.

    Sweeps lexicographically until the projected KKT residual (in
    multiplier units, infinity norm) drops below `tol`.  Raises
    NonConvergence when the sweep budget runs out, which usually means
    dt is too large for the requested tolerance.
    """
    _validate_inputs(beta_old, theta, dt, tol)
    grid = beta_old.grid
    vol = grid.node_volumes()
    base = params.mu * vol / dt
    g = driving_force(theta, params, extra_source)
    rhs = np.ascontiguousarray((base * beta_old.values) + vol * g)
    diag, coeffs = assemble_diagonal(grid, base)
    diag = np.ascontiguousarray(diag)

    # warm start: the no-diffusion clamp solution
    beta = np.ascontiguousarray(np.clip(beta_old.values + dt * g / params.mu, 0.0, 1.0))

    def residuals(b):
        xi = (rhs - apply_operator(grid, base, b)) / vol
        return xi, _projected_residual(b, xi)

    if grid.dim == 2:
        cx = np.ascontiguousarray(coeffs[0])
        cy = np.ascontiguousarray(coeffs[1])

    sweeps = 0
    converged = False
    while sweeps < max_iter:
        if grid.dim == 1:
            change = kernels.pgs_sweep_1d(beta, rhs, diag, float(coeffs[0][0]))
        else:
            change = kernels.pgs_sweep_2d(beta, rhs, diag, cx, cy)
        sweeps += 1
        if change == 0.0 or sweeps % _CHECK_EVERY == 0:
            xi, pde_res = residuals(beta)
            if pde_res <= tol or change == 0.0:
                # A sweep that changes nothing is the exact floating-point
                # fixed point, i.e. the discrete solution; the measured
                # residual is then evaluation roundoff and cannot improve.
                converged = True
                break
    if not converged:
        xi, pde_res = residuals(beta)
        if pde_res > tol:
            raise NonConvergence(
                "projected Gauss-Seidel", sweeps, pde_res,
                hint="reduce dt or relax tol",
            )
    beta_field = Field(grid, beta)
    xi_field = Field(grid, xi)
    return PhaseStepResult(
        beta_new=beta_field,
        xi=xi_field,
        iterations=sweeps,
        complementarity_residual=complementarity_residual(beta, xi),
        pde_residual=pde_res,
    )


def _yosida_scalar_update(q, a, s):
    """Exact solution of a*b + s*(b - clamp(b, 0, 1)) = q for one node."""
    b = q / a
    if b > 1.0:
        return (q + s) / (a + s)
    if b < 0.0:
        return q / (a + s)
    return b


def phase_step_yosida(
    beta_old: Field,
    theta: Field,
    dt: float,
    params: ModelParams,
    lam: float,
    tol: float = 1e-10,
    max_iter: int = 50_000,
    damping: float = 1.0,
    extra_source=None,
) -> PhaseStepResult:
    """Phase step with the Yosida-regularised constraint term.

    The subdifferential is replaced by xi_lam(b) = (b - clamp(b,0,1))/lam
    and the smooth semilinear system is solved by damped nodewise
    fixed-point sweeps (each node solved exactly, lexicographic order).
    The returned beta is clamped to [0, 1]; xi is xi_lam evaluated at
    the unclamped solution, so the overshoot beyond the bounds equals
    lam * |xi| by construction.
    """
    _validate_inputs(beta_old, theta, dt, tol)
    if lam <= 0.0:
        raise ValidationError("lambda must be positive")
    if not 0.0 < damping <= 1.0:
        raise ValidationError("damping must lie in (0, 1]")
    grid = beta_old.grid
    vol = grid.node_volumes()
    base = params.mu * vol / dt
    g = driving_force(theta, params, extra_source)
    rhs = base * beta_old.values + vol * g
    diag, coeffs = assemble_diagonal(grid, base)
    slope = vol / lam

    beta = np.array(beta_old.values)
    flat = beta.reshape(-1)
    rhs_flat = rhs.reshape(-1)
    diag_flat = diag.reshape(-1)
    slope_flat = slope.reshape(-1)
    shape = beta.shape

    if grid.dim == 1:
        (cx,) = coeffs
        neighbors = [
            (np.arange(1, shape[0]), np.arange(0, shape[0] - 1), cx),
        ]
    else:
        cx, cy = coeffs
        nx, ny = shape
        idx = np.arange(nx * ny).reshape(shape)
        neighbors = [
            (idx[1:, :].ravel(), idx[:-1, :].ravel(), cx.ravel()),
            (idx[:, 1:].ravel(), idx[:, :-1].ravel(), cy.ravel()),
        ]
    # per-node neighbour lists for the sequential sweep
    nbr = [[] for _ in range(flat.size)]
    for hi, lo, cc in neighbors:
        for a_, b_, c_ in zip(np.ravel(hi), np.ravel(lo), np.ravel(cc)):
            nbr[a_].append((b_, c_))
            nbr[b_].append((a_, c_))

    def semilinear_residual(b_flat):
        b = b_flat.reshape(shape)
        lin = apply_operator(grid, base, b).reshape(-1)
        xi_l = (b_flat - np.clip(b_flat, 0.0, 1.0)) / lam
        return (rhs_flat - lin) / vol.reshape(-1) - xi_l

    sweeps = 0
    res = np.inf
    while sweeps < max_iter:
        change = 0.0
        for i in range(flat.size):
            q = rhs_flat[i]
            for j, c in nbr[i]:
                q += c * flat[j]
            b_new = _yosida_scalar_update(q, diag_flat[i], slope_flat[i])
            step = damping * (b_new - flat[i])
            if abs(step) > change:
                change = abs(step)
            flat[i] = flat[i] + step
        sweeps += 1
        res = float(np.max(np.abs(semilinear_residual(flat))))
        # change == 0 is the exact floating-point fixed point: the nodal
        # solves are exact, so the remaining residual is roundoff.
        if res <= tol or change == 0.0:
            break
    else:
        raise NonConvergence(
            "Yosida fixed-point sweep", sweeps, res, hint="reduce dt or increase lambda"
        )

    xi = (flat - np.clip(flat, 0.0, 1.0)) / lam
    beta_clamped = np.clip(flat, 0.0, 1.0).reshape(shape)
    xi = xi.reshape(shape)
    return PhaseStepResult(
        beta_new=Field(grid, beta_clamped),
        xi=Field(grid, xi),
        iterations=sweeps,
        complementarity_residual=complementarity_residual(beta_clamped, xi),
        pde_residual=res,
    )
