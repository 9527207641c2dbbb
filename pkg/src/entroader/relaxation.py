"""Relaxation parameter: rescale the step so total entropy balances exactly.

After the corrector has produced an increment, the scalar gamma solving

    E(u + gamma du) - E(u) + gamma dt sum_s beta_s B_s = 0

replaces the update by u + gamma du and advances time by gamma dt. B_s is the
per-stage entropy budget from the ledger: F + alpha E per cell (Ghat where
the flat-region flag replaced the division) plus, in dissipative mode, the
jump-dissipation terms D. Quadratic entropies admit the closed form; the
general path is a guarded Newton iteration with a bisection fallback, always
targeting the root near 1 and rejecting the trivial root at 0.
"""

from dataclasses import dataclass

import numpy as np

from .errors import RelaxationFailureError, StateError

GAMMA_MIN = 1e-3
GAMMA_MAX = 2.0
BRACKET_MAX = 4.0


def total_entropy(ops, pde, coeffs):
    """Domain integral of eta(u_h) with the solver's volume quadrature."""
    u = ops.values_at_volume(coeffs)
    pde.check_admissible(u)
    return ops.integrate_pointwise(pde.entropy(u))


@dataclass
class RelaxationProblem:
    """Frozen inputs of one gamma solve."""

    ops: object
    pde: object
    uhat: np.ndarray            # (C, nm, m) state at t^n
    delta: np.ndarray           # (C, nm, m) corrector increment
    dt: float
    stage_budgets: np.ndarray   # (S1,) B_s with replacement rule applied
    beta: np.ndarray            # (S1,) time-quadrature weights
    entropy_n: float = None

    def __post_init__(self):
        if self.entropy_n is None:
            self.entropy_n = total_entropy(self.ops, self.pde, self.uhat)
        self.budget = float(self.dt * np.dot(self.beta, self.stage_budgets))
        # quadratic entropies admit the exact bilinear residual; evaluating
        # it cancellation-free resolves gamma to round-off (the generic
        # entropy-difference path is noise-limited near the root)
        self._bilinear = getattr(self.pde, "quadratic_entropy", False)
        if self._bilinear:
            self._cross = self.ops.mass_inner(self.delta, self.uhat)
            self._norm = self.ops.mass_inner(self.delta, self.delta)

    @staticmethod
    def from_ledger(ops, pde, uhat, delta, dt, ledger, mode):
        """mode: "conservative" drops the D terms, "dissipative" keeps them."""
        b = ledger.conservative_budget()
        if mode == "dissipative":
            b = b + ledger.dissipative_budget()
        elif mode != "conservative":
            raise ValueError(f"unknown relaxation mode {mode!r}")
        return RelaxationProblem(ops, pde, uhat, delta, dt, b,
                                 ops.stage_weights.copy())


@dataclass
class GammaResult:
    gamma: float
    iterations: int
    residual: float
    method: str


def residual_R(problem, gamma):
    """R(gamma); raises StateError when u + gamma du leaves the admissible set."""
    if problem._bilinear:
        return (gamma * (problem._cross + problem.budget)
                + 0.5 * gamma * gamma * problem._norm)
    coeffs = problem.uhat + gamma * problem.delta
    e_new = total_entropy(problem.ops, problem.pde, coeffs)
    return e_new - problem.entropy_n + gamma * problem.budget


def residual_derivative(problem, gamma):
    """dR/dgamma = <v(u + gamma du), du> + dt sum beta B."""
    if problem._bilinear:
        return problem._cross + problem.budget + gamma * problem._norm
    ops = problem.ops
    coeffs = problem.uhat + gamma * problem.delta
    u = ops.values_at_volume(coeffs)
    problem.pde.check_admissible(u)
    du = ops.values_at_volume(problem.delta)
    v = problem.pde.entropy_vars(u)
    pairing = np.einsum("cp,cpm,cpm->", ops.vol_wts, v, du, optimize=True)
    return float(pairing) + problem.budget


def default_tolerance(problem):
    return 1e-13 * max(1.0, abs(problem.entropy_n))


def solve_gamma(problem, tol_R=None, max_iter=60):
    """Newton from 1 guarded into (GAMMA_MIN, GAMMA_MAX]; bisection fallback."""
    if not np.any(problem.delta):
        return GammaResult(1.0, 0, 0.0, "stationary")
    if tol_R is None:
        tol_R = default_tolerance(problem)

    gamma = 1.0
    nit = 0
    try:
        r = residual_R(problem, gamma)
        best = (gamma, r)
        while nit < max_iter:
            # polish past the residual tolerance until the Newton step
            # itself reaches round-off, so gamma is resolved to ~1e-13 and
            # accumulated per-step entropy drift stays at the floor
            dr = residual_derivative(problem, gamma)
            if dr == 0.0:
                break
            step = r / dr
            cand = gamma - step
            if not (GAMMA_MIN < cand <= GAMMA_MAX):
                break
            r = residual_R(problem, cand)
            gamma = cand
            nit += 1
            if abs(r) < abs(best[1]):
                best = (gamma, r)
            if r == 0.0 or abs(step) <= 1e-13 * max(1.0, abs(gamma)):
                break
        gamma, r = best
        if abs(r) <= tol_R:
            return GammaResult(gamma, nit, r, "newton")
    except StateError:
        pass

    gamma, extra, r = _bisect(problem, tol_R, max_iter)
    return GammaResult(gamma, nit + extra, r, "fallback-bisection")


def _safe_residual(problem, gamma):
    try:
        return residual_R(problem, gamma)
    except StateError:
        return None


def _bisect(problem, tol_R, max_iter):
    """Expand a bracket around 1 inside [GAMMA_MIN, BRACKET_MAX], then bisect."""
    lo, hi = None, None
    rlo = rhi = None
    width = 0.125
    while width <= BRACKET_MAX:
        a = max(GAMMA_MIN, 1.0 - width)
        b = min(BRACKET_MAX, 1.0 + width)
        ra = _safe_residual(problem, a)
        rb = _safe_residual(problem, b)
        if ra is not None and rb is not None and ra * rb <= 0.0:
            lo, hi, rlo, rhi = a, b, ra, rb
            break
        width *= 2.0
    if lo is None:
        raise RelaxationFailureError(
            "no admissible sign change for the relaxation root in "
            f"[{GAMMA_MIN}, {BRACKET_MAX}]")
    nit = 0
    for nit in range(1, max_iter + 81):
        mid = 0.5 * (lo + hi)
        rm = _safe_residual(problem, mid)
        if rm is None:
            # shrink toward the admissible side (gamma = lo was evaluable)
            hi = mid
            continue
        if abs(rm) <= tol_R or (hi - lo) < 1e-16:
            return mid, nit, rm
        if rlo * rm <= 0.0:
            hi, rhi = mid, rm
        else:
            lo, rlo = mid, rm
    raise RelaxationFailureError("bisection failed to reach the residual tolerance")


def solve_gamma_quadratic(problem):
    """Closed form for quadratic entropies: the nonzero root of the parabola.

    gamma = -2 (dt sum beta B + <du, u>_M) / <du, du>_M with mass-matrix
    inner products; returns 1 for a vanishing increment.
    """
    ops = problem.ops
    nrm = ops.mass_inner(problem.delta, problem.delta)
    if nrm < 1e-28:
        return GammaResult(1.0, 0, 0.0, "quadratic")
    cross = ops.mass_inner(problem.delta, problem.uhat)
    gamma = -2.0 * (problem.budget + cross) / nrm
    res = gamma * cross + 0.5 * gamma * gamma * nrm + gamma * problem.budget
    return GammaResult(gamma, 0, res, "quadratic")


def apply_relaxation(state_coeffs, t_n, delta, gamma, dt):
    """u <- u + gamma du, t <- t + gamma dt (next step starts from there)."""
    if gamma <= 0.0:
        raise ValueError("relaxation parameter must be positive")
    return state_coeffs + gamma * delta, t_n + gamma * dt
