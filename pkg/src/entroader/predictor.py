"""Element-local space-time predictor solved by discrete Picard iteration.

Each cell carries a space-time Taylor polynomial whose coefficients solve

    (end-time Gram - time-derivative Gram) qhat = proj(uhat at t^n) - flux,

iterated with the flux term lagged. The update is applied in defect form
(qhat += K1^-1 * (rhs - K1 qhat)) so that an exact fixed point -- notably
any constant state -- passes through with a bitwise-zero correction.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class PredictorCoeffs:
    """Converged (or best-effort) space-time coefficients for every cell."""

    coeffs: np.ndarray          # (C, nq, m)
    iterations: int
    converged: bool


class Predictor:
    """Batched Picard solver bound to one DGOperators table and one system."""

    def __init__(self, ops, pde):
        self.ops = ops
        self.pde = pde
        self._dt = None
        self._k1 = None
        self._tvals = None

    def prepare(self, dt):
        """(Re)build the dt-dependent operator tables."""
        if self._dt is not None and abs(dt - self._dt) <= 1e-14 * abs(self._dt):
            return
        self._dt = dt
        self._k1 = self.ops.predictor_lhs(dt)
        self._tvals = self.ops.stage_time_values(dt)

    @property
    def stage_time_table(self):
        return self._tvals

    def init_guess(self, uhat):
        """Time-constant extension of u_h(., t^n): r = 0 block copies uhat."""
        ops = self.ops
        C, nm, m = uhat.shape
        qhat = np.zeros((C, ops.stbasis.count, m))
        qhat[:, ops.r0_block, :] = uhat
        return qhat

    def _projection_rhs(self, uhat):
        ops = self.ops
        proj = np.einsum("ckl,clm->ckm", ops.mass, uhat)
        rhs = np.zeros((uhat.shape[0], ops.stbasis.count, uhat.shape[2]))
        rhs[:, ops.r0_block, :] = proj
        return rhs

    def _flux_rhs(self, qhat):
        """-int theta_k div F(q_h) over the space-time cell (quadrature)."""
        ops = self.ops
        pde = self.pde
        dt = self._dt
        C, nq, m = qhat.shape
        S = ops.num_stages
        shat = ops.stage_spatial_coeffs(qhat, self._tvals)     # (C, S1, nm, m)
        q, gq = ops.stage_fields(shat)                         # (C,P,S,m), (C,2,P,S,m)
        pde.check_admissible(q)
        divf = pde.flux_div(q, np.moveaxis(gq, 1, 0),
                            ops.vol_pts[:, :, None, :])         # (C, P, S, m)
        P = divf.shape[1]
        v = (ops.phiw_T @ divf.reshape(C, P, S * m)).reshape(C, -1, S, m)
        vg = v[:, ops.st_sp, :, :]                             # (C, nq, S, m)
        wfac = (dt * ops.stage_weights)[None, None, :] * self._tvals.transpose(0, 2, 1)
        return -np.einsum("cls,clsm->clm", wfac, vg)

    def picard_step(self, qhat, uhat):
        """One lagged-flux iteration; returns the new coefficient block."""
        rhs = self._projection_rhs(uhat) + self._flux_rhs(qhat)
        defect = rhs - np.einsum("ckl,clm->ckm", self._k1, qhat)
        if not np.any(defect):
            return qhat.copy()
        return qhat + np.linalg.solve(self._k1, defect)

    def solve(self, uhat, dt, max_iter=None, tol=1e-12):
        """Iterate picard_step until the sup-norm increment stalls below tol."""
        if max_iter is None:
            max_iter = self.ops.N + 2
        if max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        self.prepare(dt)
        qhat = self.init_guess(uhat)
        converged = False
        nit = 0
        for nit in range(1, max_iter + 1):
            qnew = self.picard_step(qhat, uhat)
            inc = np.max(np.abs(qnew - qhat))
            ref = 1.0 + np.max(np.abs(qnew))
            qhat = qnew
            if inc <= tol * ref:
                converged = True
                break
        return PredictorCoeffs(qhat, nit, converged)


def solve_predictor(ops, pde, uhat, dt, max_iter=None, tol=1e-12):
    """Convenience wrapper building a Predictor for a single solve."""
    return Predictor(ops, pde).solve(uhat, dt, max_iter=max_iter, tol=tol)
