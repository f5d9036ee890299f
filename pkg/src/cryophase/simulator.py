"""Time integration driver, diagnostics ledger, and study harnesses.

Each time step advances the pair (beta, theta) with the phase update
first and the temperature update second, the temperature entering the
phase equation explicitly.  `Staggered` coupling does one such pass per
step; `Iterated` repeats the pair until the temperature stops moving,
the discrete analogue of iterating the composition of the two
single-field solution maps to a fixed point.

The EnergyLedger records, per step, the discrete counterparts of the
quantities that stay bounded in the underlying a priori estimates, plus
conservation and complementarity residuals and the two per-step
inequality checks the test suite asserts on.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .constitutive import ModelParams, Variant
from .errors import NonConvergence, ValidationError
from .expressions import Expression
from .grid import (
    Field,
    Grid,
    face_quadrature_p,
    face_quadrature_sq,
    gradient,
    inner,
    integral,
    laplacian_neumann,
    norm_L2,
    restrict_nested,
    average_to_faces,
)
from .heat import heat_step, heat_step_full_energy
from .phase import driving_force, phase_step_projected


@dataclass
class CouplingSpec:
    mode: str = "staggered"
    max_outer: int = 50
    outer_tol: float = 1e-10

    def __post_init__(self):
        if self.mode not in ("staggered", "iterated"):
            raise ValidationError(
                f"coupling mode must be 'staggered' or 'iterated', got {self.mode!r}"
            )
        if self.max_outer < 1:
            raise ValidationError("max_outer must be >= 1")
        if self.outer_tol <= 0:
            raise ValidationError("outer_tol must be positive")


@dataclass
class SolverOptions:
    phase_tol: float = 1e-10
    phase_max_iter: int = 50_000
    picard_tol: float = 1e-11
    picard_max: int = 60
    linear_tol: float = 1e-12

    def __post_init__(self):
        for name in ("phase_tol", "picard_tol", "linear_tol"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        for name in ("phase_max_iter", "picard_max"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")


def _steps_of(total: float, piece: float, what: str) -> int:
    n = total / piece
    n_int = int(round(n))
    if n_int < 1 or abs(n - n_int) > 1e-9 * max(1.0, n):
        raise ValidationError(
            f"{what} must be an integer multiple of dt (got ratio {n!r})"
        )
    return n_int


@dataclass
class SimConfig:
    """Fully specified simulation run.

    theta0/beta0 accept a Field, a nodal array, or an expression string
    over (x, y, theta_c, pi).  source accepts "zero", an expression
    string over (x, y, t, theta_c, pi), or a callable (grid, t) -> array.
    mms_phase_source is an extra source injected into the phase
    equation; it exists only so manufactured-solution verification can
    drive beta, and is never populated from user configs.
    """

    grid: Grid
    params: ModelParams
    dt: float
    t_end: float
    theta0: object
    beta0: object
    source: object = "zero"
    coupling: CouplingSpec = field(default_factory=CouplingSpec)
    solvers: SolverOptions = field(default_factory=SolverOptions)
    output_cadence: float = 0.0  # 0 means snapshots only at t=0 and t_end
    output_dir: str = "cryophase_out"
    mms_phase_source: object = None
    label: str = "run"

    def validate(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise ValidationError("dt and t_end must be positive")
        if self.dt > self.t_end:
            raise ValidationError("dt must not exceed t_end")
        n_steps = _steps_of(self.t_end, self.dt, "t_end")
        cadence = self.output_cadence if self.output_cadence else self.t_end
        if cadence < self.dt:
            raise ValidationError("output cadence must be at least dt")
        snap_every = _steps_of(cadence, self.dt, "output cadence")
        _steps_of(self.t_end, cadence, "t_end (relative to cadence)")
        self.params.validate_for_dimension(self.grid.dim)
        return n_steps, snap_every

    def initial_fields(self):
        theta0 = _as_field(self.grid, self.theta0, self.params, "theta0")
        beta0 = _as_field(self.grid, self.beta0, self.params, "beta0")
        if np.any(beta0.values < 0.0) or np.any(beta0.values > 1.0):
            raise ValidationError("beta0 must lie in [0, 1] at every node")
        return theta0, beta0

    def source_fn(self):
        """Returns callable(t) -> Field or None (for r identically zero)."""
        if self.source is None or self.source == "zero":
            return lambda t: None
        if callable(self.source):
            return lambda t: Field(self.grid, self.source(self.grid, t))
        expr = Expression(self.source)
        names = _coordinate_names(self.grid)

        def fn(t):
            out = expr(t=t, theta_c=self.params.theta_c, **names)
            return Field(self.grid, np.broadcast_to(out, self.grid.shape))

        return fn


def _coordinate_names(grid: Grid):
    mesh = grid.meshgrid()
    names = {"x": mesh[0]}
    if grid.dim == 2:
        names["y"] = mesh[1]
    return names


def _as_field(grid: Grid, spec, params: ModelParams, what: str) -> Field:
    if isinstance(spec, Field):
        if spec.grid != grid:
            raise ValidationError(f"{what} lives on a different grid")
        return spec
    if isinstance(spec, np.ndarray):
        return Field(grid, spec)
    if isinstance(spec, (int, float)):
        return Field.constant(grid, float(spec))
    if isinstance(spec, str):
        expr = Expression(spec)
        out = expr(theta_c=params.theta_c, **_coordinate_names(grid))
        return Field(grid, np.broadcast_to(np.asarray(out, dtype=float), grid.shape))
    raise ValidationError(f"cannot interpret {what} of type {type(spec).__name__}")


class EnergyLedger:
    """Per-step diagnostics table; one row per completed time step."""

    COLUMNS = (
        "step", "t",
        "betat_sq_inc",        # dt * ||beta_t||_L2^2
        "grad_beta_l2",        # ||grad beta||_L2
        "lap_beta_sq_inc",     # dt * ||lap beta||_L2^2
        "theta_l2",
        "beta_grad_theta_sq_inc",  # dt * int beta |grad theta|^2
        "grad_theta_p_inc",        # dt * int |grad theta|^p
        "eps_grad_theta_sq_inc",   # dt * eps int |grad theta|^2
        "xi_l2",
        "conservation_residual",   # source-corrected drift of int(theta+beta)
        "complementarity_residual",
        "energy_lhs", "energy_rhs", "energy_scale",
        "apriori_lhs", "apriori_rhs", "apriori_scale",
        "outer_iterations", "phase_sweeps", "picard_iterations",
        "linear_iterations",
    )

    def __init__(self):
        self.rows = []

    def append(self, **values):
        row = [float(values[c]) for c in self.COLUMNS]
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        i = self.COLUMNS.index(name)
        return np.array([row[i] for row in self.rows])

    def accumulate(self, name: str) -> float:
        return float(np.sum(self.column(name)))

    def __len__(self):
        return len(self.rows)


@dataclass
class Snapshot:
    t: float
    theta: Field
    beta: Field
    xi: Field


@dataclass
class RunResult:
    config: SimConfig
    snapshots: list
    ledger: EnergyLedger
    theta: Field
    beta: Field
    xi: Field
    wall_time: float
    total_phase_sweeps: int
    total_picard: int
    total_linear: int


def _dump_state(grid, theta, beta, xi, step):
    import tempfile
    from . import io as _io

    path = tempfile.mktemp(prefix=f"cryophase_state_step{step}_", suffix=".csv")
    _io.write_snapshot(path, Field(grid, theta), Field(grid, beta),
                       Field(grid, xi))
    return path


def run(config: SimConfig) -> RunResult:
    """Integrate from t=0 to t_end and return fields plus diagnostics."""
    started = time.perf_counter()
    n_steps, snap_every = config.validate()
    grid = config.grid
    theta, beta = config.initial_fields()
    source_fn = config.source_fn()

    ledger = EnergyLedger()
    baseline = integral(theta) + integral(beta)
    source_accum = 0.0
    xi = Field.constant(grid, 0.0)
    snapshots = [Snapshot(0.0, theta, beta, xi)]
    totals = {"sweeps": 0, "picard": 0, "linear": 0}

    for k in range(1, n_steps + 1):
        t_new = k * config.dt
        r_field = source_fn(t_new)
        g_extra = None
        if config.mms_phase_source is not None:
            g_extra = config.mms_phase_source(grid, t_new)
        theta_old, beta_old = theta, beta
        try:
            theta, beta, xi, stats = _advance(
                theta_old, beta_old, r_field, g_extra, config)
        except NonConvergence as exc:
            path = _dump_state(grid, theta_old.values, beta_old.values,
                               xi.values, k)
            raise type(exc)(
                f"{exc.what} at step {k} (t={t_new:.6g})",
                exc.iterations, exc.residual,
                hint=f"state dumped to {path}",
            ) from exc
        totals["sweeps"] += stats["phase_sweeps"]
        totals["picard"] += stats["picard_iterations"]
        totals["linear"] += stats["linear_iterations"]

        if r_field is not None:
            source_accum += config.dt * integral(r_field)
        _append_ledger_row(ledger, k, t_new, config, theta_old, beta_old,
                           theta, beta, xi, r_field, baseline, source_accum,
                           stats, g_extra)
        if k % snap_every == 0 or k == n_steps:
            snapshots.append(Snapshot(t_new, theta, beta, xi))

    return RunResult(
        config=config,
        snapshots=snapshots,
        ledger=ledger,
        theta=theta,
        beta=beta,
        xi=xi,
        wall_time=time.perf_counter() - started,
        total_phase_sweeps=totals["sweeps"],
        total_picard=totals["picard"],
        total_linear=totals["linear"],
    )


def _advance(theta_old, beta_old, r_field, g_extra, config):
    """One time step; returns (theta, beta, xi, stats)."""
    params = config.params
    solv = config.solvers
    full_energy = params.variant is Variant.FULL_ENERGY
    heat_fn = heat_step_full_energy if full_energy else heat_step
    coupling = config.coupling
    outer_max = 1 if coupling.mode == "staggered" else coupling.max_outer

    theta_ref = theta_old
    stats = {"phase_sweeps": 0, "picard_iterations": 0, "linear_iterations": 0,
             "outer_iterations": 0}
    for outer in range(1, outer_max + 1):
        phase = phase_step_projected(
            beta_old, theta_ref, config.dt, params,
            tol=solv.phase_tol, max_iter=solv.phase_max_iter,
            extra_source=g_extra,
        )
        heat = heat_fn(
            theta_old, phase.beta_new, beta_old, r_field, config.dt, params,
            tol=solv.picard_tol, max_picard=solv.picard_max,
            linear_tol=solv.linear_tol,
        )
        stats["phase_sweeps"] += phase.iterations
        stats["picard_iterations"] += heat.picard_iterations
        stats["linear_iterations"] += heat.linear_solver_iterations
        stats["outer_iterations"] = outer
        stats["phase_result"] = phase
        diff = norm_L2(Field(theta_old.grid,
                             heat.theta_new.values - theta_ref.values))
        theta_ref = heat.theta_new
        if coupling.mode == "staggered" or diff <= coupling.outer_tol:
            return heat.theta_new, phase.beta_new, phase.xi, stats
    raise NonConvergence(
        "outer coupling iteration", outer_max, diff,
        hint="reduce dt or relax outer_tol",
    )


def _append_ledger_row(ledger, k, t_new, config, theta_old, beta_old,
                       theta, beta, xi, r_field, baseline, source_accum,
                       stats, g_extra):
    grid = config.grid
    params = config.params
    dt = config.dt
    beta_t = Field(grid, (beta.values - beta_old.values) / dt)
    gtheta = gradient(theta)
    beta_faces = average_to_faces(grid, beta.values, clamp01=True)

    theta_l2 = norm_L2(theta)
    eps_grad = params.epsilon * face_quadrature_sq(gtheta)
    beta_grad = face_quadrature_sq(gtheta, beta_faces)
    grad_p = face_quadrature_p(gtheta, params.p)
    source_theta = inner(r_field, theta) if r_field is not None else 0.0
    betat_theta = inner(beta_t, theta)

    # temperature-equation energy inequality (tested by theta)
    half_new = 0.5 * theta_l2**2
    half_old = 0.5 * norm_L2(theta_old) ** 2
    beta_grad_p = face_quadrature_p(gtheta, params.p, beta_faces)
    energy_lhs = half_new - half_old + dt * (eps_grad + beta_grad + grad_p)
    energy_rhs = dt * (source_theta - betat_theta + beta_grad_p)
    energy_scale = 1.0 + half_new + half_old + dt * (
        abs(source_theta) + abs(betat_theta) + eps_grad + beta_grad + grad_p
    )

    # phase-equation a priori estimate (tested by beta_t)
    g = driving_force(theta_old, params, g_extra)
    g_l2_sq = float(np.sum(grid.node_volumes() * g * g))
    grad_beta_new = face_quadrature_sq(gradient(beta))
    grad_beta_old = face_quadrature_sq(gradient(beta_old))
    betat_sq = norm_L2(beta_t) ** 2
    apriori_lhs = params.mu * dt * betat_sq + grad_beta_new
    apriori_rhs = grad_beta_old + dt * g_l2_sq / params.mu
    apriori_scale = 1.0 + apriori_lhs + abs(apriori_rhs)

    conservation = (integral(theta) + integral(beta)) - baseline - source_accum

    ledger.append(
        step=k, t=t_new,
        betat_sq_inc=dt * betat_sq,
        grad_beta_l2=np.sqrt(grad_beta_new),
        lap_beta_sq_inc=dt * norm_L2(laplacian_neumann(beta)) ** 2,
        theta_l2=theta_l2,
        beta_grad_theta_sq_inc=dt * beta_grad,
        grad_theta_p_inc=dt * grad_p,
        eps_grad_theta_sq_inc=dt * eps_grad,
        xi_l2=norm_L2(xi),
        conservation_residual=conservation,
        complementarity_residual=stats["phase_result"].complementarity_residual,
        energy_lhs=energy_lhs, energy_rhs=energy_rhs, energy_scale=energy_scale,
        apriori_lhs=apriori_lhs, apriori_rhs=apriori_rhs,
        apriori_scale=apriori_scale,
        outer_iterations=stats["outer_iterations"],
        phase_sweeps=stats["phase_sweeps"],
        picard_iterations=stats["picard_iterations"],
        linear_iterations=stats["linear_iterations"],
    )


# ---------------------------------------------------------------------------
# studies


@dataclass
class SweepReport:
    eps_values: tuple
    theta_gaps: tuple   # sup over snapshot times of ||theta_eps - theta_0||_L2
    beta_gaps: tuple
    monotone: bool

    def rows(self):
        return [
            {"epsilon": e, "theta_gap": tg, "beta_gap": bg}
            for e, tg, bg in zip(self.eps_values, self.theta_gaps, self.beta_gaps)
        ]


def sweep_epsilon(config: SimConfig, eps_list) -> SweepReport:
    """Compare runs at decreasing artificial diffusion against eps = 0.

    The gap to the eps=0 reference must not increase as eps decreases;
    the report records whether that held.
    """
    eps_list = tuple(float(e) for e in eps_list)
    if not eps_list:
        raise ValidationError("eps list must not be empty")
    if any(e <= 0.0 for e in eps_list):
        raise ValidationError("eps values must be positive (0 is the reference)")
    if any(later >= earlier for earlier, later in zip(eps_list, eps_list[1:])):
        raise ValidationError("eps values must be strictly decreasing")

    def run_with(eps):
        cfg = replace(config, params=config.params.with_updates(epsilon=eps),
                      label=f"{config.label}_eps{eps:g}")
        return run(cfg)

    reference = run_with(0.0)
    theta_gaps, beta_gaps = [], []
    for eps in eps_list:
        try:
            res = run_with(eps)
        except NonConvergence as exc:
            done = ", ".join(
                f"eps={e:g}: {g:.3e}" for e, g in zip(eps_list, theta_gaps))
            raise type(exc)(
                f"{exc.what} during the eps={eps:g} member run",
                exc.iterations, exc.residual,
                hint=f"partial theta gaps so far: [{done}]",
            ) from exc
        tgap = max(
            norm_L2(Field(config.grid, a.theta.values - b.theta.values))
            for a, b in zip(res.snapshots, reference.snapshots)
        )
        bgap = max(
            norm_L2(Field(config.grid, a.beta.values - b.beta.values))
            for a, b in zip(res.snapshots, reference.snapshots)
        )
        theta_gaps.append(tgap)
        beta_gaps.append(bgap)
    monotone = all(
        later <= earlier + 1e-14
        for earlier, later in zip(theta_gaps, theta_gaps[1:])
    )
    return SweepReport(eps_list, tuple(theta_gaps), tuple(beta_gaps), monotone)


@dataclass
class ConvergenceReport:
    levels: tuple          # refinement multipliers, coarse to fine
    nodes: tuple
    dts: tuple
    theta_diffs: tuple     # L2 difference to the finest level at t_end
    beta_diffs: tuple
    theta_rates: tuple
    beta_rates: tuple


def convergence_study(config: SimConfig, levels=(1, 2, 4, 8)) -> ConvergenceReport:
    """Self-convergence under simultaneous h and dt refinement.

    Every level must nest inside the finest one (each multiplier divides
    the last), so fine solutions restrict to coarse nodes by injection.
    """
    levels = tuple(int(v) for v in levels)
    if len(levels) < 3:
        raise ValidationError("need at least 3 refinement levels")
    if any(b <= a for a, b in zip(levels, levels[1:])) or levels[0] < 1:
        raise ValidationError("levels must be strictly increasing and >= 1")
    if any(levels[-1] % l != 0 for l in levels):
        raise ValidationError(
            "levels must be nested: every multiplier must divide the finest"
        )

    results = []
    for mult in levels:
        cfg = replace(
            config,
            grid=config.grid.refined(mult),
            dt=config.dt / mult,
            label=f"{config.label}_x{mult}",
        )
        results.append(run(cfg))

    fine = results[-1]
    theta_diffs, beta_diffs = [], []
    for mult, res in zip(levels[:-1], results[:-1]):
        ratio = levels[-1] // mult
        grid_l = res.config.grid
        th = restrict_nested(fine.theta.values, ratio)
        be = restrict_nested(fine.beta.values, ratio)
        theta_diffs.append(norm_L2(Field(grid_l, res.theta.values - th)))
        beta_diffs.append(norm_L2(Field(grid_l, res.beta.values - be)))

    def rates(diffs):
        out = []
        for (m1, d1), (m2, d2) in zip(
            zip(levels, diffs), zip(levels[1:], diffs[1:])
        ):
            if d1 > 0 and d2 > 0:
                out.append(float(np.log(d1 / d2) / np.log(m2 / m1)))
            else:
                out.append(float("inf"))
        return tuple(out)

    return ConvergenceReport(
        levels=levels,
        nodes=tuple(r.config.grid.num_nodes for r in results),
        dts=tuple(r.config.dt for r in results),
        theta_diffs=tuple(theta_diffs),
        beta_diffs=tuple(beta_diffs),
        theta_rates=rates(theta_diffs),
        beta_rates=rates(beta_diffs),
    )
