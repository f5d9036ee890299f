"""Semi-implicit step of the (optionally regularised) temperature equation.

One backward-Euler step of

    theta_t + beta_t - eps*lap(theta) - div(kappa(grad theta) grad theta) = r,
    kappa = beta_f + (1 - beta_f) * (|grad theta|^2 + delta^2)^((p-2)/2),

with the nonlinear face coefficient frozen from the previous Picard
iterate.  Each Picard sweep solves a symmetric positive-definite system
by Jacobi-preconditioned conjugate gradients, matrix-free on the face
stencil.

The solve works on the increment theta - theta_old, which keeps the
right-hand side at the size of the per-step change: the telescoping of
the face fluxes then conserves integral(theta + beta) to within the
tiny absolute CG residual, step after step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constitutive import ModelParams, Variant, power_law_coeff
from .errors import LinearSolveFailure, NonConvergence, ValidationError
from .grid import (
    Field,
    Grid,
    VectorField,
    average_to_faces,
    gradient_arrays,
    norm_L2,
    transverse_magnitude_sq,
    weighted_divergence_arrays,
)


@dataclass
class HeatStepResult:
    theta_new: Field
    flux: VectorField
    picard_iterations: int
    picard_residual: float
    linear_solver_iterations: int
    picard_history: list = field(default_factory=list)


@dataclass
class AprioriRecord:
    """Per-step contributions to the running energy-estimate ledger."""

    half_theta_l2_sq: float
    beta_grad_sq_inc: float
    grad_p_inc: float
    eps_grad_sq_inc: float
    source_theta_inc: float
    betat_theta_inc: float


def _face_conductivity(grid: Grid, theta_values, beta_faces, params: ModelParams):
    """kappa + eps on every face, from the gradient of `theta_values`.

    The power-law factor sees the full gradient magnitude (native
    component plus transverse average), so face dissipation
    kappa * g^2 matches the quadrature used by the diagnostics.
    """
    grads = gradient_arrays(grid, theta_values)
    msq = transverse_magnitude_sq(grid, grads)
    out = []
    for bf, m2 in zip(beta_faces, msq):
        a = power_law_coeff(m2, params.p, params.delta)
        out.append(bf + (1.0 - bf) * a + params.epsilon)
    return tuple(out)


def _apply_diffusion(grid: Grid, kappa_faces, values):
    """Volume-weighted -div(kappa grad values) (symmetric PSD)."""
    grads = gradient_arrays(grid, values)
    fluxes = tuple(k * g for k, g in zip(kappa_faces, grads))
    return -weighted_divergence_arrays(grid, fluxes)


def _diffusion_diagonal(grid: Grid, kappa_faces):
    coeffs = tuple(
        k * fv / h**2
        for k, fv, h in zip(kappa_faces, grid.face_volumes(), grid.spacing)
    )
    diag = np.zeros(grid.shape)
    if grid.dim == 1:
        diag[:-1] += coeffs[0]
        diag[1:] += coeffs[0]
    else:
        diag[:-1, :] += coeffs[0]
        diag[1:, :] += coeffs[0]
        diag[:, :-1] += coeffs[1]
        diag[:, 1:] += coeffs[1]
    return diag


def _pcg(apply_A, b, diag, rel_tol, max_iter):
    """Jacobi-preconditioned conjugate gradients, zero initial guess."""
    b_norm = float(np.sqrt(np.sum(b * b)))
    x = np.zeros_like(b)
    if b_norm == 0.0:
        return x, 0
    inv_diag = 1.0 / diag
    r = np.array(b)
    z = inv_diag * r
    p = np.array(z)
    rz = float(np.sum(r * z))
    for it in range(1, max_iter + 1):
        Ap = apply_A(p)
        pAp = float(np.sum(p * Ap))
        if pAp <= 0.0:
            raise LinearSolveFailure(
                "conjugate gradients", it, float(np.sqrt(np.sum(r * r))) / b_norm,
                hint="operator lost positive definiteness",
            )
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        res = float(np.sqrt(np.sum(r * r)))
        if res <= rel_tol * b_norm:
            return x, it
        z = inv_diag * r
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise LinearSolveFailure(
        "conjugate gradients", max_iter,
        float(np.sqrt(np.sum(r * r))) / b_norm,
        hint="system too ill-conditioned for the iteration budget",
    )


def _heat_solve(theta_old, beta_new, beta_old, r, dt, params,
                tol, max_picard, linear_tol, coupling, extra_source):
    grid = theta_old.grid
    vol = grid.node_volumes()
    beta_faces = average_to_faces(grid, beta_new.values, clamp01=True)

    source = r.values if r is not None else 0.0
    if extra_source is not None:
        source = source + extra_source
    # increment form: unknown is phi = theta - theta_old
    rhs_fixed = vol * (dt * source - coupling)

    theta = np.array(theta_old.values)
    phi = np.zeros(grid.shape)
    total_linear = 0
    history = []
    max_linear = 10 * grid.num_nodes

    converged = False
    for sweep in range(1, max_picard + 1):
        kappa = _face_conductivity(grid, theta, beta_faces, params)
        diag = vol + dt * _diffusion_diagonal(grid, kappa)

        def apply_A(x, kappa=kappa):
            return vol * x + dt * _apply_diffusion(grid, kappa, x)

        b = rhs_fixed - dt * _apply_diffusion(grid, kappa, theta_old.values)
        # warm start via the residual of the previous iterate
        b_shift = b - apply_A(phi)
        dphi, iters = _pcg(apply_A, b_shift, diag, linear_tol, max_linear)
        phi = phi + dphi
        total_linear += iters
        theta_next = theta_old.values + phi
        diff = norm_L2(Field(grid, theta_next - theta))
        scale = 1.0 + norm_L2(Field(grid, theta_next))
        history.append(diff / scale)
        theta = theta_next
        if history[-1] <= tol:
            converged = True
            break
    if not converged:
        raise NonConvergence(
            "Picard iteration", max_picard, history[-1],
            hint="reduce dt or increase delta",
        )

    # physical flux at the converged state (coefficient re-evaluated there)
    grads = gradient_arrays(grid, theta)
    msq = transverse_magnitude_sq(grid, grads)
    flux = []
    for bf, m2, g in zip(beta_faces, msq, grads):
        a = power_law_coeff(m2, params.p, params.delta)
        flux.append(-(bf + (1.0 - bf) * a) * g)
    return HeatStepResult(
        theta_new=Field(grid, theta),
        flux=VectorField(grid, flux),
        picard_iterations=len(history),
        picard_residual=history[-1],
        linear_solver_iterations=total_linear,
        picard_history=history,
    )


def _validate(theta_old, beta_new, beta_old, dt):
    for b in (beta_new, beta_old):
        if np.any(b.values < 0.0) or np.any(b.values > 1.0):
            raise ValidationError("beta fields must lie in [0, 1]")
    if dt <= 0.0:
        raise ValidationError("dt must be positive")
    if theta_old.grid != beta_new.grid or theta_old.grid != beta_old.grid:
        raise ValidationError("fields live on different grids")


def heat_step(theta_old: Field, beta_new: Field, beta_old: Field, r,
              dt: float, params: ModelParams, tol: float = 1e-11,
              max_picard: int = 60, linear_tol: float = 1e-12,
              extra_source=None) -> HeatStepResult:
    """One temperature step of the simplified model (coupling term beta_t)."""
    _validate(theta_old, beta_new, beta_old, dt)
    coupling = beta_new.values - beta_old.values
    return _heat_solve(theta_old, beta_new, beta_old, r, dt, params,
                       tol, max_picard, linear_tol, coupling, extra_source)


def heat_step_full_energy(theta_old: Field, beta_new: Field, beta_old: Field, r,
                          dt: float, params: ModelParams, tol: float = 1e-11,
                          max_picard: int = 60, linear_tol: float = 1e-12,
                          extra_source=None) -> HeatStepResult:
    """Temperature step retaining the quadratic phase-rate heating.

    The coupling carries the explicit factor theta_old/theta_c and the
    source gains |beta_t|^2.  Positivity of theta is monitored, not
    enforced: a PositivityLossWarning is emitted if the update crosses
    zero anywhere.
    """
    if params.variant is not Variant.FULL_ENERGY:
        raise ValidationError("params.variant must be FULL_ENERGY for this step")
    _validate(theta_old, beta_new, beta_old, dt)
    if np.any(theta_old.values <= 0.0):
        raise ValidationError("full-energy step requires theta_old > 0")
    beta_t = (beta_new.values - beta_old.values) / dt
    coupling = (theta_old.values / params.theta_c) * (beta_new.values - beta_old.values)
    dissipation = beta_t * beta_t
    if extra_source is not None:
        dissipation = dissipation + extra_source
    result = _heat_solve(theta_old, beta_new, beta_old, r, dt, params,
                         tol, max_picard, linear_tol, coupling, dissipation)
    if np.any(result.theta_new.values <= 0.0):
        import warnings

        from .errors import PositivityLossWarning

        warnings.warn("theta_new lost positivity", PositivityLossWarning,
                      stacklevel=2)
    return result


def apriori_monitor(result: HeatStepResult, beta_new: Field, beta_old: Field,
                    r, dt: float, params: ModelParams) -> AprioriRecord:
    """Per-step increments of the bounded quantities tracked by the ledger.

    Pure bookkeeping: recomputes face quadratures of the converged state
    for accumulation; no assertions are made here.
    """
    from .grid import face_quadrature_p, face_quadrature_sq, gradient, inner

    grid = result.theta_new.grid
    theta = result.theta_new
    gtheta = gradient(theta)
    beta_faces = average_to_faces(grid, beta_new.values, clamp01=True)
    beta_t = Field(grid, (beta_new.values - beta_old.values) / dt)
    source_theta = inner(r, theta) if r is not None else 0.0
    return AprioriRecord(
        half_theta_l2_sq=0.5 * norm_L2(theta) ** 2,
        beta_grad_sq_inc=dt * face_quadrature_sq(gtheta, beta_faces),
        grad_p_inc=dt * face_quadrature_p(gtheta, params.p),
        eps_grad_sq_inc=dt * params.epsilon * face_quadrature_sq(gtheta),
        source_theta_inc=dt * source_theta,
        betat_theta_inc=dt * inner(beta_t, theta),
    )
