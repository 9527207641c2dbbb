"""Time loop: CFL step control, predictor -> ledger -> corrector ->
relaxation pipeline, boundary entropy accounting and retry policy."""

from dataclasses import dataclass, field

import numpy as np

from . import cases as cases_mod
from . import relaxation as relax
from .corrector import Corrector
from .errors import (RelaxationFailureError, RunAbortError, SolverError,
                     StateError)
from .mesh import BoundarySpec, build_structured_tri_mesh, read_mesh_file
from .operators import DGOperators, DGState
from .pde_systems import make_system
from .predictor import Predictor

DIAG_COLUMNS = ("step", "t", "dt", "gamma", "entropy", "entropy_residual",
                "mass_0", "newton_iters", "alpha_min", "alpha_max")


@dataclass
class RunConfig:
    """Everything one run needs; validated on construction."""

    case: str = "traveling_bump"
    case_params: dict = field(default_factory=dict)
    pde: str = None                   # inferred from the case when None
    pde_params: dict = field(default_factory=dict)
    nx: int = 16
    ny: int = None                    # defaults to nx scaled by the case aspect
    mesh_file: str = None
    degree: int = 2
    cfl: float = 0.4
    t_final: float = None             # defaults to the case's final time
    relaxation: str = None            # off | conservative | dissipative
    correction: bool = True
    use_diffusive_flux: bool = True
    gamma_solver: str = "newton"      # newton | quadratic
    output_dir: str = None
    output_every: int = 0             # VTK cadence in steps; 0 = never
    reproducible: bool = False
    picard_max_iter: int = None       # defaults to N + 2
    picard_tol: float = 1e-12
    picard_strict: bool = False
    gamma_tol: float = None
    volume_degree: int = None
    face_degree: int = None
    stages: int = None
    max_retries: int = 8

    def __post_init__(self):
        if self.degree not in (1, 2, 3):
            raise ValueError("polynomial degree must be 1, 2 or 3")
        if not (0.0 < self.cfl <= 1.0):
            raise ValueError("CFL must lie in (0, 1]")
        if self.t_final is not None and self.t_final < 0.0:
            raise ValueError("final time must be nonnegative")
        if self.gamma_solver not in ("newton", "quadratic"):
            raise ValueError("gamma_solver must be newton or quadratic")
        if self.relaxation is not None and self.relaxation not in (
                "off", "conservative", "dissipative"):
            raise ValueError("relaxation must be off, conservative or dissipative")


@dataclass
class RunDiagnostics:
    rows: list                        # tuples matching DIAG_COLUMNS
    boundary_outflow: float           # cumulative integral of the entropy flux
    entropy_initial: float
    final_time: float
    l2_errors: np.ndarray = None      # per-variable, when an exact solution exists
    h_bar: float = None
    state: object = None

    def column(self, name):
        return np.array([row[DIAG_COLUMNS.index(name)] for row in self.rows])


class Simulation:
    """Wires mesh, operators, system and case together for stepping."""

    def __init__(self, config):
        self.config = config
        case = None
        if isinstance(config.case, cases_mod.TestCase):
            case = config.case
        elif config.case:
            case = cases_mod.get_case(config.case, **config.case_params)
        self.case = case

        pde_name = config.pde or (case.pde_name if case else None)
        if pde_name is None:
            raise ValueError("either a case or a pde must be configured")
        params = dict(case.pde_params) if case and not config.pde else {}
        params.update(config.pde_params)
        self.pde = make_system(pde_name, **params)

        bc = case.bc if case else BoundarySpec()
        if config.mesh_file:
            domain = case.domain if case else None
            self.mesh = read_mesh_file(config.mesh_file, domain=domain, bc=bc)
        else:
            domain = case.domain if case else ((0.0, 1.0), (0.0, 1.0))
            ax, ay = case.aspect if case else (1, 1)
            ny = config.ny if config.ny is not None else max(1, config.nx * ay // ax)
            self.mesh = build_structured_tri_mesh(config.nx, ny, domain, bc)

        self.ops = DGOperators(self.mesh, config.degree,
                               volume_degree=config.volume_degree,
                               face_degree=config.face_degree,
                               stages=config.stages)
        self.predictor = Predictor(self.ops, self.pde)
        self.corrector = Corrector(self.ops, self.pde,
                                   use_diffusive_flux=config.use_diffusive_flux,
                                   use_correction=config.correction)
        self.relax_mode = config.relaxation
        if self.relax_mode is None:
            self.relax_mode = case.relaxation if case else "conservative"
        self.t_final = config.t_final if config.t_final is not None else (
            case.t_final if case else 0.0)

    # -- boundary ghosts ---------------------------------------------------

    def ghost_fn(self, tag, qm, pts, time, normal):
        if tag == "wall":
            return self.pde.wall_ghost(qm, normal)
        if tag == "transmissive":
            return np.array(qm, copy=True)
        if tag == "dirichlet":
            if self.case is None:
                raise SolverError("dirichlet boundary needs a case state function")
            return self.case.boundary_state(pts, time, self.mesh.h_bar)
        raise SolverError(f"unhandled boundary tag {tag!r}")

    # -- initial data -------------------------------------------------------

    def initial_state(self):
        if self.case is None:
            raise SolverError("no case configured; provide a state explicitly")
        h_bar = self.mesh.h_bar
        return DGState.project(self.ops, lambda p: self.case.initial(p, h_bar))

    # -- stepping -----------------------------------------------------------

    def compute_dt(self, state):
        """CFL * min over cells of incircle / ((2N+1) max wavespeed)."""
        u = self.ops.values_at_volume(state.coeffs)
        self.pde.check_admissible(u)
        lam = self.pde.max_speed(u, self.ops.vol_pts).max(axis=1)
        remaining = self.t_final - state.time
        with np.errstate(divide="ignore"):
            per_cell = np.where(lam > 0.0,
                                self.mesh.incircle / ((2 * self.ops.N + 1) * lam),
                                np.inf)
        dt = self.config.cfl * per_cell.min()
        if not np.isfinite(dt):
            dt = max(remaining, 0.0)
        return dt

    def step(self, state, dt):
        """One relaxed ADER step at the given dt; raises on bad states."""
        cfg = self.config
        self.predictor.prepare(dt)
        pred = self.predictor.solve(state.coeffs, dt,
                                    max_iter=cfg.picard_max_iter,
                                    tol=cfg.picard_tol)
        if cfg.picard_strict and not pred.converged:
            raise StateError("picard", "predictor did not converge")
        delta, ledger = self.corrector.assemble(
            pred.coeffs, self.predictor.stage_time_table, state.time, dt,
            self.ghost_fn)

        if self.relax_mode == "off":
            problem = None
            gamma = relax.GammaResult(1.0, 0, 0.0, "off")
        else:
            problem = relax.RelaxationProblem.from_ledger(
                self.ops, self.pde, state.coeffs, delta, dt, ledger,
                self.relax_mode)
            if cfg.gamma_solver == "quadratic":
                gamma = relax.solve_gamma_quadratic(problem)
            else:
                gamma = relax.solve_gamma(problem, tol_R=cfg.gamma_tol)

        coeffs, t_new = relax.apply_relaxation(state.coeffs, state.time,
                                               delta, gamma.gamma, dt)
        new_state = DGState(coeffs, t_new)
        internals = {"predictor": pred, "ledger": ledger, "delta": delta,
                     "gamma": gamma, "problem": problem, "dt": dt}
        return new_state, internals

    def run(self, state=None, observer=None, max_steps=10**7):
        cfg = self.config
        if state is None:
            state = self.initial_state()
        ops, pde = self.ops, self.pde

        e0 = relax.total_entropy(ops, pde, state.coeffs)
        mass0 = ops.totals(state.coeffs)[0]
        rows = [(0, state.time, 0.0, 1.0, e0, 0.0, mass0, 0, 0.0, 0.0)]
        outflow = 0.0
        snapshots = []

        step_idx = 0
        tiny = 1e-12 * max(1.0, abs(self.t_final))
        landed = False
        while not landed and self.t_final - state.time > tiny and step_idx < max_steps:
            remaining = self.t_final - state.time
            dt = min(self.compute_dt(state), remaining)
            retries = 0
            while True:
                try:
                    new_state, internals = self.step(state, dt)
                    break
                except (StateError, RelaxationFailureError) as exc:
                    retries += 1
                    if retries > cfg.max_retries:
                        diags = RunDiagnostics(rows, outflow, e0, state.time,
                                               h_bar=self.mesh.h_bar, state=state)
                        raise RunAbortError(
                            f"step {step_idx + 1} failed after "
                            f"{cfg.max_retries} retries: {exc}",
                            diagnostics=diags, state=state) from exc
                    dt *= 0.5
            # the step intended to cover the gap is the last one: accept the
            # gamma-sized landing offset (retry halvings cancel the landing)
            landed = dt >= remaining * (1.0 - 1e-12)

            step_idx += 1
            state = new_state
            ledger = internals["ledger"]
            gam = internals["gamma"]
            entropy = relax.total_entropy(ops, pde, state.coeffs)
            flux_step = gam.gamma * dt * float(
                np.dot(ops.stage_weights, ledger.boundary_gflux))
            outflow += flux_step
            mass = ops.totals(state.coeffs)[0]
            rows.append((step_idx, state.time, dt, gam.gamma, entropy,
                         gam.residual, mass, gam.iterations,
                         float(ledger.alpha.min()), float(ledger.alpha.max())))
            if observer is not None:
                observer(step_idx, state, internals)
            if cfg.output_every and step_idx % cfg.output_every == 0:
                snapshots.append((step_idx, state.copy()))

        errs = None
        if self.case is not None and self.case.exact is not None:
            errs = cases_mod.l2_error(ops, state.coeffs, self.case.exact,
                                      state.time, self.mesh.h_bar)
        diags = RunDiagnostics(rows, outflow, e0, state.time, l2_errors=errs,
                               h_bar=self.mesh.h_bar, state=state)
        diags.snapshots = snapshots
        return diags


def run(config, state=None, observer=None):
    """Build a Simulation from the config and integrate to the final time."""
    return Simulation(config).run(state=state, observer=observer)
