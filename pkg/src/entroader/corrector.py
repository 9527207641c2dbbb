"""One-step DG update with flux splitting and the entropy correction term.

Per time-quadrature stage s the face/volume sweeps fill a ledger with

    F_i^s  boundary pairing of entropy variables with the central flux
           minus the volume contraction grad(v_h) : F(q_h),
    D_i^s  boundary pairing with the diffusive (jump) flux part,
    E_i^s  nonnegative A0-weighted gradient energy of v_h,
    Ghat_i^s  the consistent numerical entropy flux integrated over the
           cell boundary,

from which the per-cell correction coefficient alpha_i^s = (Ghat - F) / E is
formed wherever E clears the flat-region guard eps^s = hbar^N max_i E_i^s.
The update right-hand side subtracts a per-cell reference flux (the flux of
the predictor value at the barycenter), an exact-zero shift that makes
constant states bitwise fixed points of the assembled step.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class EntropyLedger:
    """Per-cell, per-stage entropy bookkeeping; arrays are (C, S1)."""

    F: np.ndarray
    D: np.ndarray
    E: np.ndarray
    Ghat: np.ndarray
    alpha: np.ndarray
    replaced: np.ndarray        # bool; True where E fell below the guard
    eps: np.ndarray             # (S1,) flat-region guard per stage
    boundary_gflux: np.ndarray  # (S1,) numerical entropy flux over domain boundary

    def conservative_budget(self):
        """Per-stage sum over cells of F + alpha E, replaced cells use Ghat."""
        kept = self.F + self.alpha * self.E
        contrib = np.where(self.replaced, self.Ghat, kept)
        return contrib.sum(axis=0)

    def dissipative_budget(self):
        return self.D.sum(axis=0)


def split_flux(pde, qm, qp, n, x):
    """Rusanov split: central part dotted with n, and the jump part."""
    fc = 0.5 * np.einsum("...md,...d->...m", pde.flux(qm, x) + pde.flux(qp, x), n)
    alf = pde.max_wavespeed(qm, qp, n, x)
    fd = -0.5 * alf[..., None] * (qp - qm)
    return fc, fd


def numerical_entropy_flux(pde, qm, qp, n, x):
    """Consistent numerical entropy flux: vbar^T Fc_n - psibar . n.

    Antisymmetric under (qm, qp, n) -> (qp, qm, -n), so interior face
    contributions telescope and the global balance reduces to the domain
    boundary; reduces to G(q) . n when the traces agree.
    """
    fc, _ = split_flux(pde, qm, qp, n, x)
    vbar = 0.5 * (pde.entropy_vars(qm) + pde.entropy_vars(qp))
    psibar = 0.5 * (pde.entropy_potential(qm, x) + pde.entropy_potential(qp, x))
    return (np.einsum("...m,...m->...", vbar, fc)
            - np.einsum("...d,...d->...", psibar, n))


def compute_alpha(ghat, f, e, eps):
    """Correction coefficients with the division-by-zero guard.

    alpha = (Ghat - F) / E where E >= eps and E > 0; zero (flag set)
    elsewhere. Returns (alpha, replaced mask).
    """
    ok = (e >= eps) & (e > 0.0)
    alpha = np.zeros_like(e)
    np.divide(ghat - f, e, out=alpha, where=ok)
    return alpha, ~ok


def semidiscrete_entropy_balance(ledger, stage):
    """Per-cell residual F + alpha E - Ghat at one stage (0 when unflagged)."""
    return (ledger.F[:, stage] + ledger.alpha[:, stage] * ledger.E[:, stage]
            - ledger.Ghat[:, stage])


class Corrector:
    """Assembles the per-step update and ledger for one operators table."""

    def __init__(self, ops, pde, use_diffusive_flux=True, use_correction=True):
        self.ops = ops
        self.pde = pde
        self.use_diffusive_flux = use_diffusive_flux
        self.use_correction = use_correction

    def assemble(self, qhat, tvals, t_n, dt, ghost_fn):
        """Corrector sweep: returns (delta_uhat, ledger).

        ``qhat``: predictor coefficients (C, nq, m); ``tvals``: the stage
        time table the predictor was solved with; ``ghost_fn(tag, qm, pts,
        time, normal) -> trace`` supplies boundary ghost states.
        """
        ops = self.ops
        pde = self.pde
        mesh = ops.mesh
        C = mesh.num_cells
        F = mesh.num_faces
        nm = ops.basis.count
        m = pde.m
        S1 = ops.num_stages
        beta = ops.stage_weights
        wf = ops.face_wts                                       # (F, Pf)
        Pf = wf.shape[1]

        shat = ops.stage_spatial_coeffs(qhat, tvals)            # (C, S1, nm, m)
        bnd = ~ops.face_has_right
        tags = mesh.face_tag[bnd]
        n_hat = mesh.face_normal[:, None, None, :]              # (F, 1, 1, 2)
        xf = ops.face_pts[:, :, None, :]                        # (F, Pf, 1, 2)

        # ---- traces at every face point and stage -----------------------
        qm, qp = ops.face_stage_traces(shat)                    # (F, Pf, S1, m)
        if np.any(bnd):
            for s in range(S1):
                t_stage = t_n + ops.stage_nodes[s] * dt
                qp[bnd, :, s, :] = _ghost_traces(
                    ghost_fn, tags, qm[bnd, :, s, :], ops.face_pts[bnd],
                    t_stage, mesh.face_normal[bnd])
        pde.check_admissible(qm)
        pde.check_admissible(qp)

        fm = pde.flux(qm, xf)
        fp = pde.flux(qp, xf)
        fc = 0.5 * np.einsum("fpsmd,fpsd->fpsm", fm + fp, n_hat)
        alf = pde.max_wavespeed(qm, qp, n_hat, xf)
        fd = -0.5 * alf[..., None] * (qp - qm)
        if not self.use_diffusive_flux:
            fd = np.zeros_like(fd)

        vm = pde.entropy_vars(qm)
        vp = pde.entropy_vars(qp)
        # psi = v^T F - G assembled from the already computed fluxes
        psim = np.einsum("fpsm,fpsmd->fpsd", vm, fm) - pde.entropy_flux(qm, xf)
        psip = np.einsum("fpsm,fpsmd->fpsd", vp, fp) - pde.entropy_flux(qp, xf)
        gnum = (np.einsum("fpsm,fpsm->fps", 0.5 * (vm + vp), fc)
                - np.einsum("fpsd,fpsd->fps", 0.5 * (psim + psip), n_hat))

        sF_m = np.einsum("fp,fpsm,fpsm->fs", wf, vm, fc)
        sF_p = -np.einsum("fp,fpsm,fpsm->fs", wf, vp, fc)
        sD_m = np.einsum("fp,fpsm,fpsm->fs", wf, vm, fd)
        sD_p = -np.einsum("fp,fpsm,fpsm->fs", wf, vp, fd)
        sG = np.einsum("fp,fps->fs", wf, gnum)

        ledF = ops.scatter_left @ sF_m + ops.scatter_right @ sF_p
        ledD = ops.scatter_left @ sD_m + ops.scatter_right @ sD_p
        ledG = ops.scatter_left @ sG - ops.scatter_right @ sG
        bflux = sG[bnd].sum(axis=0)                             # (S1,)

        # ---- face contribution to the update ----------------------------
        # subtract each cell's reference flux (its predictor value at the
        # barycenter): an exact-zero shift by the divergence theorem that
        # keeps constant states bitwise fixed points
        uref = shat[:, :, 0, :]                                 # (C, S1, m)
        fref = pde.flux(uref, mesh.barycenter[:, None, :])      # (C, S1, m, 2)
        full = fc + fd
        fref_l = np.einsum("fsmd,fd->fsm", fref[mesh.face_left], mesh.face_normal)
        fref_r = np.einsum("fsmd,fd->fsm", fref[ops.face_right_safe], mesh.face_normal)
        excess_l = full - fref_l[:, None]
        excess_r = full - fref_r[:, None]
        face_l = (ops.phiw_face_left_T
                  @ excess_l.reshape(F, Pf, S1 * m)).reshape(F, nm, S1, m)
        face_r = -(ops.phiw_face_right_T
                   @ excess_r.reshape(F, Pf, S1 * m)).reshape(F, nm, S1, m)
        face_cells = (ops.scatter_left @ face_l.reshape(F, -1)
                      + ops.scatter_right @ face_r.reshape(F, -1)
                      ).reshape(C, nm, S1, m)

        # ---- volume sweeps ----------------------------------------------
        qv, gqv = ops.stage_fields(shat)            # (C,P,S1,m), (C,2,P,S1,m)
        P = qv.shape[1]
        pde.check_admissible(qv)
        fvol = pde.flux(qv, ops.vol_pts[:, :, None, :])         # (C, P, S1, m, 2)
        jv = pde.entropy_vars_jacobian(qv)                      # (C, P, S1, m, m)
        gv = np.empty_like(gqv)
        gv[:, 0] = (jv @ gqv[:, 0][..., None])[..., 0]
        gv[:, 1] = (jv @ gqv[:, 1][..., None])[..., 0]

        ledF -= np.einsum("cp,cdpsm,cpsmd->cs", ops.vol_wts, gv, fvol,
                          optimize=True)
        ubar = np.einsum("cp,cpsm->csm", ops.vol_wts, qv) / mesh.area[:, None, None]
        pde.check_admissible(ubar)
        a0 = pde.a0(ubar)                                       # (C, S1, m, m)
        a0gv = np.empty_like(gv)
        a0gv[:, 0] = (a0[:, None] @ gv[:, 0][..., None])[..., 0]
        a0gv[:, 1] = (a0[:, None] @ gv[:, 1][..., None])[..., 0]
        ledE = np.einsum("cp,cdpsm,cdpsm->cs", ops.vol_wts, gv, a0gv,
                         optimize=True)

        fexc = fvol - fref[:, None]                             # (C, P, S1, m, 2)
        fexc_flat = np.ascontiguousarray(
            fexc.transpose(0, 4, 1, 2, 3)).reshape(C, 2 * P, S1 * m)
        vol_cells = (ops.gradw_T @ fexc_flat).reshape(C, nm, S1, m)
        bcorr = (ops.gradw_T @ a0gv.reshape(C, 2 * P, S1 * m)).reshape(C, nm, S1, m)

        eps = (mesh.h_bar ** ops.N) * ledE.max(axis=0)
        alpha, replaced = compute_alpha(ledG, ledF, ledE, eps[None, :])
        if not self.use_correction:
            alpha = np.zeros_like(alpha)

        rhs = np.einsum("s,cksm->ckm", beta, face_cells - vol_cells)
        rhs += np.einsum("cs,s,cksm->ckm", alpha, beta, bcorr, optimize=True)

        delta = np.linalg.solve(ops.mass, -dt * rhs)
        ledger = EntropyLedger(ledF, ledD, ledE, ledG, alpha, replaced, eps, bflux)
        return delta, ledger


def _ghost_traces(ghost_fn, tags, qm, pts, time, normals):
    """Evaluate ghost states tag-group by tag-group (vectorized inside)."""
    out = np.empty_like(qm)
    for tag in np.unique(tags):
        sel = tags == tag
        out[sel] = ghost_fn(str(tag), qm[sel], pts[sel], time,
                            normals[sel][:, None, :])
    return out
