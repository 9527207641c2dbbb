"""Per-mesh precomputed tables fusing geometry, bases and quadrature.

Everything the predictor/corrector/relaxation stages need repeatedly is
assembled once per (mesh, degree): physical quadrature points and weights,
basis values/gradients at those points, per-cell mass matrices, face trace
tables for both adjacent cells (periodic faces evaluate the partner side at
translated points), and scatter operators mapping face sums into cells.

Array shape conventions (used throughout the solver):

    C cells, F faces, P volume points, Pf face points, S1 time nodes,
    nm spatial modes, nq space-time modes, m conserved variables.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis_quadrature import (SpaceTimeBasis, SpatialBasis, eval_spatial_table,
                               face_rule, time_rule, triangle_rule)
from .errors import DegenerateCellError


class DGOperators:
    """Immutable discretization tables for one mesh and one degree."""

    def __init__(self, mesh, N, volume_degree=None, face_degree=None, stages=None):
        self.mesh = mesh
        self.N = int(N)
        self.basis = SpatialBasis(self.N)
        self.stbasis = SpaceTimeBasis(self.N)
        if volume_degree is None:
            volume_degree = 2 * self.N + 2
        if face_degree is None:
            face_degree = 2 * self.N + 2
        if stages is None:
            stages = self.N

        # --- volume quadrature in physical coordinates -------------------
        vol = triangle_rule(volume_degree)
        verts = mesh.cell_vertices()                      # (C, 3, 2)
        v0 = verts[:, 0]
        e1 = verts[:, 1] - verts[:, 0]
        e2 = verts[:, 2] - verts[:, 0]
        ref = vol.points
        self.vol_pts = (v0[:, None, :]
                        + ref[None, :, 0, None] * e1[:, None, :]
                        + ref[None, :, 1, None] * e2[:, None, :])  # (C, P, 2)
        detj = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        self.vol_wts = vol.weights[None, :] * detj[:, None]   # (C, P)

        xb = mesh.barycenter[:, None, :]
        h = mesh.circumradius[:, None]
        self.phi_vol, self.grad_vol = eval_spatial_table(self.basis, self.vol_pts, xb, h)

        # mass matrices and cell integrals of each mode
        self.mass = np.einsum("cq,cqk,cql->ckl", self.vol_wts, self.phi_vol, self.phi_vol,
                              optimize=True)
        try:
            np.linalg.cholesky(self.mass)
        except np.linalg.LinAlgError as exc:
            raise DegenerateCellError("a cell mass matrix is not SPD") from exc
        self.phi_int = np.einsum("cq,cqk->ck", self.vol_wts, self.phi_vol)

        # --- face quadrature ---------------------------------------------
        fr = face_rule(face_degree)
        a = mesh.vertices[mesh.face_vertices[:, 0]]
        b = mesh.vertices[mesh.face_vertices[:, 1]]
        s = fr.points
        self.face_pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]  # (F, Pf, 2)
        self.face_wts = fr.weights[None, :] * mesh.face_length[:, None]          # (F, Pf)

        cl = mesh.face_left
        cr_raw = mesh.face_right
        self.face_has_right = cr_raw >= 0
        cr = np.where(self.face_has_right, cr_raw, 0)
        self.face_right_safe = cr
        self.phi_face_left, _ = eval_spatial_table(
            self.basis, self.face_pts, mesh.barycenter[cl][:, None, :],
            mesh.circumradius[cl][:, None])
        pts_r = self.face_pts + mesh.face_offset[:, None, :]
        self.phi_face_right, _ = eval_spatial_table(
            self.basis, pts_r, mesh.barycenter[cr][:, None, :],
            mesh.circumradius[cr][:, None])

        # face -> cell scatter operators (fixed summation order, so the
        # reductions are deterministic regardless of thread count)
        C = mesh.num_cells
        F = mesh.num_faces
        self.scatter_left = sp.csr_matrix(
            (np.ones(F), (cl, np.arange(F))), shape=(C, F))
        idx = np.flatnonzero(self.face_has_right)
        self.scatter_right = sp.csr_matrix(
            (np.ones(idx.size), (cr_raw[idx], idx)), shape=(C, F))

        # --- time rule and space-time mode bookkeeping --------------------
        tr = time_rule(stages)
        self.stage_nodes = tr.points      # sigma_s on [0, 1]
        self.stage_weights = tr.weights   # beta_s, sum 1
        self.num_stages = tr.points.size
        self.st_sp = self.stbasis.spatial_index          # (nq,)
        self.st_r = self.stbasis.exponents[:, 2]         # (nq,)
        self.r0_block = self.stbasis.r0_block

        # closed-form factors for the predictor LHS: K1[k,l] =
        # M_sp[sp(k), sp(l)] * mu^(rk+rl) / (rk! rl!) * wfac(rk, rl), where
        # wfac = 1 for rk = 0 and rl/(rk+rl) otherwise (exactly zero when a
        # time-derivative row meets a time-constant column -- this exactness
        # is what keeps constant states bitwise fixed points).
        # rearranged hot-path tables: transposed weighted basis blocks so the
        # inner loops are plain batched matmuls
        C = mesh.num_cells
        P = self.phi_vol.shape[1]
        nm = self.basis.count
        self.phiw_T = np.ascontiguousarray(
            (self.vol_wts[:, :, None] * self.phi_vol).transpose(0, 2, 1))  # (C, nm, P)
        self.grad_flat = np.ascontiguousarray(
            self.grad_vol.transpose(0, 3, 1, 2).reshape(C, 2 * P, nm))     # (C, 2P, nm)
        # gradw_T rows pair with the (d-major, point-minor) layout of grad_flat
        self.gradw_T = np.ascontiguousarray(
            (self.vol_wts[:, :, None, None] * self.grad_vol)
            .transpose(0, 2, 3, 1).reshape(C, nm, 2 * P))
        self.phiw_face_left_T = np.ascontiguousarray(
            (self.face_wts[:, :, None] * self.phi_face_left).transpose(0, 2, 1))
        self.phiw_face_right_T = np.ascontiguousarray(
            (self.face_wts[:, :, None] * self.phi_face_right).transpose(0, 2, 1))

        import math as _math
        rk = self.st_r[:, None]
        rl = self.st_r[None, :]
        fct = np.array([_math.factorial(k) for k in range(self.N + 1)], dtype=float)
        self._k1_pow = rk + rl
        wfac = np.where(rk == 0, 1.0, rl / np.maximum(rk + rl, 1))
        self._k1_fac = wfac / (fct[rk] * fct[rl])
        self._mass_st = self.mass[:, self.st_sp[:, None], self.st_sp[None, :]]
        self._time_fct = fct
        nm = self.basis.count
        collapse = np.zeros((nm, self.stbasis.count))
        collapse[self.st_sp, np.arange(self.stbasis.count)] = 1.0
        self._collapse = collapse

    # -- state evaluation helpers ---------------------------------------

    def values_at_volume(self, coeffs):
        """u_h at the volume points; (C, nm, m) -> (C, P, m)."""
        return self.phi_vol @ coeffs

    def stage_fields(self, shat):
        """All stage fields at the volume points in two batched matmuls.

        ``shat`` (C, S1, nm, m) -> values (C, P, S1, m) and gradients
        (C, 2, P, S1, m) with the derivative axis leading.
        """
        C, S, nm, m = shat.shape
        sh2 = np.ascontiguousarray(shat.transpose(0, 2, 1, 3)).reshape(C, nm, S * m)
        P = self.phi_vol.shape[1]
        q = (self.phi_vol @ sh2).reshape(C, P, S, m)
        gq = (self.grad_flat @ sh2).reshape(C, 2, P, S, m)
        return q, gq

    def face_stage_traces(self, shat):
        """Left/right stage traces at the face points; (F, Pf, S1, m) each."""
        C, S, nm, m = shat.shape
        F = self.mesh.num_faces
        Pf = self.face_pts.shape[1]
        shl = np.ascontiguousarray(
            shat[self.mesh.face_left].transpose(0, 2, 1, 3)).reshape(F, nm, S * m)
        shr = np.ascontiguousarray(
            shat[self.face_right_safe].transpose(0, 2, 1, 3)).reshape(F, nm, S * m)
        qm = (self.phi_face_left @ shl).reshape(F, Pf, S, m)
        qp = (self.phi_face_right @ shr).reshape(F, Pf, S, m)
        return qm, qp

    def gradients_at_volume(self, coeffs):
        return np.einsum("cpkd,ckm->cpmd", self.grad_vol, coeffs)

    def cell_averages(self, coeffs):
        num = np.einsum("ck,ckm->cm", self.phi_int, coeffs)
        return num / self.mesh.area[:, None]

    def totals(self, coeffs):
        """Per-variable global integrals (mass bookkeeping)."""
        return np.einsum("ck,ckm->m", self.phi_int, coeffs)

    def integrate_pointwise(self, values):
        """Sum of a per-point scalar field against the volume weights."""
        return float(np.einsum("cp,cp->", self.vol_wts, values))

    def mass_inner(self, a, b):
        """L2 inner product of two coefficient blocks via the mass matrices."""
        return float(np.einsum("ckm,ckl,clm->", a, self.mass, b, optimize=True))

    def project(self, fn):
        """L2 projection of ``fn(points) -> (..., m)`` onto the basis."""
        vals = np.asarray(fn(self.vol_pts))
        rhs = np.einsum("cp,cpk,cpm->ckm", self.vol_wts, self.phi_vol, vals,
                        optimize=True)
        return np.linalg.solve(self.mass, rhs)

    def l2_errors(self, coeffs, exact_vals):
        """Per-variable L2 norms of u_h minus pointwise exact values."""
        diff = self.values_at_volume(coeffs) - exact_vals
        sq = np.einsum("cp,cpm->m", self.vol_wts, diff * diff)
        return np.sqrt(sq)

    # -- time-factor tables (dt dependent) --------------------------------

    def stage_time_values(self, dt):
        """T[c, s, l] = (sigma_s * dt / h_c)^r_l / r_l!   (theta time factor)."""
        mu = dt / self.mesh.circumradius                        # (C,)
        smu = self.stage_nodes[None, :, None] * mu[:, None, None]
        return smu ** self.st_r[None, None, :] / self._time_fct[self.st_r][None, None, :]

    def predictor_lhs(self, dt):
        """K1 matrices (C, nq, nq) for the given step size."""
        mu = dt / self.mesh.circumradius
        powers = mu[:, None, None] ** self._k1_pow[None, :, :]
        return self._mass_st * (powers * self._k1_fac[None, :, :])

    def stage_spatial_coeffs(self, qhat, tvals):
        """Collapse space-time coefficients to per-stage spatial blocks.

        (C, nq, m) with T (C, S1, nq) -> (C, S1, nm, m): coefficients of the
        spatial basis reproducing q_h(., t^{n,s}) in each cell.
        """
        weighted = tvals[..., None] * qhat[:, None, :, :]       # (C, S1, nq, m)
        return np.einsum("al,cslm->csam", self._collapse, weighted, optimize=True)


@dataclass
class DGState:
    """Modal coefficients (C, nm, m) plus the current simulation time."""

    coeffs: np.ndarray
    time: float = 0.0

    def copy(self):
        return DGState(self.coeffs.copy(), self.time)

    @staticmethod
    def constant(ops, values):
        """Exact constant state: coefficients assigned directly (no solve)."""
        values = np.asarray(values, dtype=float)
        coeffs = np.zeros((ops.mesh.num_cells, ops.basis.count, values.size))
        coeffs[:, 0, :] = values
        return DGState(coeffs, 0.0)

    @staticmethod
    def project(ops, fn, time=0.0):
        return DGState(ops.project(fn), time)
