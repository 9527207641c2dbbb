"""PDE abstraction: physical flux, wavespeed, and the entropy algebra.

All operations are vectorized: a state array has shape (..., m) and every
method broadcasts over the leading axes. Position enters explicitly (the
rotating advection field needs it; the nonlinear systems ignore it).

The entropy potential is always derived from the identity psi = v^T F - G
rather than hand-coded, so the compatibility chain has a single source.
"""

import numpy as np

from .errors import StateError

ADMISSIBILITY_FLOOR = 1e-12


class PdeSystem:
    """Interface: flux/wavespeed plus (eta, v, G, psi, A0) per state."""

    m = None
    name = None
    quadratic_entropy = False   # True enables exact bilinear relaxation algebra

    def flux(self, u, x):
        raise NotImplementedError

    def flux_jacobian(self, u, x):
        """d F_d / d u, shape (..., m, m, 2)."""
        raise NotImplementedError

    def flux_div(self, u, gradu, x):
        """div F via the chain rule: sum_d (dF_d/du) . d_d u.

        ``gradu`` has the derivative axis leading: (2, ..., m). Systems
        override this with fused scalar expressions; the generic fallback
        contracts the full Jacobian (and doubles as the test oracle).
        """
        jac = self.flux_jacobian(u, x)
        return (np.einsum("...mn,...n->...m", jac[..., 0], gradu[0])
                + np.einsum("...mn,...n->...m", jac[..., 1], gradu[1]))

    def max_wavespeed(self, um, up, n, x):
        """Local Lax-Friedrichs speed: max over both states of |vel.n| + c."""
        return np.maximum(self._normal_speed(um, n, x), self._normal_speed(up, n, x))

    def max_speed(self, u, x):
        """Directionless bound |vel| + c, used for the CFL condition."""
        raise NotImplementedError

    def _normal_speed(self, u, n, x):
        raise NotImplementedError

    def entropy(self, u):
        raise NotImplementedError

    def entropy_vars(self, u):
        raise NotImplementedError

    def entropy_vars_jacobian(self, u):
        """d v / d u, SPD for admissible states; shape (..., m, m)."""
        raise NotImplementedError

    def entropy_flux(self, u, x):
        raise NotImplementedError

    def entropy_potential(self, u, x):
        """psi = v^T F - G, shape (..., 2)."""
        v = self.entropy_vars(u)
        F = self.flux(u, x)
        return np.einsum("...m,...md->...d", v, F) - self.entropy_flux(u, x)

    def a0(self, u):
        """Inverse entropy Hessian (d v/d u)^-1, SPD; shape (..., m, m)."""
        raise NotImplementedError

    def admissible_mask(self, u):
        return np.ones(np.asarray(u).shape[:-1], dtype=bool)

    def check_admissible(self, u):
        """Raise StateError naming the first offending component."""
        return None

    def wall_ghost(self, u, n):
        """Reflective-wall ghost state (copy for scalar equations)."""
        return np.array(u, copy=True)


class AdvectionSystem(PdeSystem):
    """Linear transport with constant velocity or the rigid rotation (-y, x).

    eta = u^2/2, v = u, G = eta * a(x), A0 = 1.
    """

    m = 1
    quadratic_entropy = True

    def __init__(self, a=(1.0, 0.0), field="constant"):
        if field not in ("constant", "rotation"):
            raise ValueError(f"unknown advection field {field!r}")
        self.a_const = np.asarray(a, dtype=float)
        self.field = field
        self.name = "advection" if field == "constant" else "rotation"

    def velocity(self, x):
        x = np.asarray(x, dtype=float)
        if self.field == "constant":
            return np.broadcast_to(self.a_const, x.shape).copy()
        return np.stack([-x[..., 1], x[..., 0]], axis=-1)

    def flux(self, u, x):
        a = self.velocity(x)
        return u[..., :, None] * a[..., None, :]

    def flux_jacobian(self, u, x):
        a = self.velocity(x)
        return a[..., None, None, :] * np.ones_like(u)[..., None, None]

    def flux_div(self, u, gradu, x):
        a = self.velocity(x)
        return a[..., 0, None] * gradu[0] + a[..., 1, None] * gradu[1]

    def _normal_speed(self, u, n, x):
        a = self.velocity(x)
        return np.abs(np.einsum("...d,...d->...", a, n))

    def max_speed(self, u, x):
        return np.linalg.norm(self.velocity(x), axis=-1)

    def entropy(self, u):
        return 0.5 * u[..., 0] ** 2

    def entropy_vars(self, u):
        return np.array(u, copy=True)

    def entropy_vars_jacobian(self, u):
        return np.ones(u.shape[:-1] + (1, 1))

    def entropy_flux(self, u, x):
        return self.entropy(u)[..., None] * self.velocity(x)

    def a0(self, u):
        return np.ones(u.shape[:-1] + (1, 1))


class ShallowWaterSystem(PdeSystem):
    """Flat-bathymetry shallow water in (h, hu, hv); energy entropy."""

    m = 3
    name = "swe"

    def __init__(self, g=9.81):
        self.g = float(g)

    def _prim(self, u):
        h = u[..., 0]
        vel = u[..., 1:3] / h[..., None]
        k = 0.5 * np.einsum("...d,...d->...", vel, vel)
        return h, vel, k

    def flux(self, u, x):
        h, vel, _ = self._prim(u)
        q = u[..., 1:3]
        ph = 0.5 * self.g * h * h
        F = np.empty(u.shape + (2,))
        F[..., 0, :] = q
        F[..., 1, :] = q[..., 0, None] * vel
        F[..., 2, :] = q[..., 1, None] * vel
        F[..., 1, 0] += ph
        F[..., 2, 1] += ph
        return F

    def flux_jacobian(self, u, x):
        h, vel, _ = self._prim(u)
        uu, vv = vel[..., 0], vel[..., 1]
        g = self.g
        J = np.zeros(u.shape[:-1] + (3, 3, 2))
        J[..., 0, 1, 0] = 1.0
        J[..., 1, 0, 0] = g * h - uu * uu
        J[..., 1, 1, 0] = 2 * uu
        J[..., 2, 0, 0] = -uu * vv
        J[..., 2, 1, 0] = vv
        J[..., 2, 2, 0] = uu
        J[..., 0, 2, 1] = 1.0
        J[..., 1, 0, 1] = -uu * vv
        J[..., 1, 1, 1] = vv
        J[..., 1, 2, 1] = uu
        J[..., 2, 0, 1] = g * h - vv * vv
        J[..., 2, 2, 1] = 2 * vv
        return J

    def flux_div(self, u, gradu, x):
        h, vel, _ = self._prim(u)
        uu, vv = vel[..., 0], vel[..., 1]
        g = self.g
        hx, qxx, qyx = gradu[0, ..., 0], gradu[0, ..., 1], gradu[0, ..., 2]
        hy, qxy, qyy = gradu[1, ..., 0], gradu[1, ..., 1], gradu[1, ..., 2]
        out = np.empty_like(u)
        out[..., 0] = qxx + qyy
        out[..., 1] = ((g * h - uu * uu) * hx + 2 * uu * qxx
                       - uu * vv * hy + vv * qxy + uu * qyy)
        out[..., 2] = (-uu * vv * hx + vv * qxx + uu * qyx
                       + (g * h - vv * vv) * hy + 2 * vv * qyy)
        return out

    def _normal_speed(self, u, n, x):
        h, vel, _ = self._prim(u)
        return np.abs(np.einsum("...d,...d->...", vel, n)) + np.sqrt(self.g * h)

    def max_speed(self, u, x):
        h, vel, _ = self._prim(u)
        return np.linalg.norm(vel, axis=-1) + np.sqrt(self.g * h)

    def entropy(self, u):
        h, _, k = self._prim(u)
        return h * k + 0.5 * self.g * h * h

    def entropy_vars(self, u):
        h, vel, k = self._prim(u)
        return np.stack([self.g * h - k, vel[..., 0], vel[..., 1]], axis=-1)

    def entropy_vars_jacobian(self, u):
        h, vel, k = self._prim(u)
        uu, vv = vel[..., 0], vel[..., 1]
        J = np.zeros(u.shape[:-1] + (3, 3))
        J[..., 0, 0] = self.g * h + 2 * k
        J[..., 0, 1] = -uu
        J[..., 0, 2] = -vv
        J[..., 1, 0] = -uu
        J[..., 1, 1] = 1.0
        J[..., 2, 0] = -vv
        J[..., 2, 2] = 1.0
        return J / h[..., None, None]

    def entropy_flux(self, u, x):
        h, _, k = self._prim(u)
        return u[..., 1:3] * (self.g * h + k)[..., None]

    def a0(self, u):
        h, vel, _ = self._prim(u)
        uu, vv = vel[..., 0], vel[..., 1]
        g = self.g
        A = np.empty(u.shape[:-1] + (3, 3))
        A[..., 0, 0] = 1.0
        A[..., 0, 1] = uu
        A[..., 0, 2] = vv
        A[..., 1, 0] = uu
        A[..., 1, 1] = g * h + uu * uu
        A[..., 1, 2] = uu * vv
        A[..., 2, 0] = vv
        A[..., 2, 1] = uu * vv
        A[..., 2, 2] = g * h + vv * vv
        return A / g

    def admissible_mask(self, u):
        return u[..., 0] > ADMISSIBILITY_FLOOR

    def check_admissible(self, u):
        if not np.all(self.admissible_mask(u)):
            raise StateError("h", f"water height fell below {ADMISSIBILITY_FLOOR}")

    def wall_ghost(self, u, n):
        q = u[..., 1:3]
        qn = np.einsum("...d,...d->...", q, n)
        ghost = np.array(u, copy=True)
        ghost[..., 1:3] = q - 2.0 * qn[..., None] * n
        return ghost


class EulerSystem(PdeSystem):
    """Compressible Euler for a perfect gas in (rho, rho*u, rho*v, E).

    Uses the entropy pair eta = -(g+1)/(g-1) * (rho*p)^(1/(g+1)) with the
    closed-form entropy variables and inverse Hessian; ``gamma_gas`` names
    the adiabatic constant to keep it apart from the relaxation parameter.
    """

    m = 4
    name = "euler"

    def __init__(self, gamma_gas=1.4):
        self.gamma_gas = float(gamma_gas)

    def _prim(self, u):
        rho = u[..., 0]
        vel = u[..., 1:3] / rho[..., None]
        k = 0.5 * np.einsum("...d,...d->...", vel, vel)
        p = (self.gamma_gas - 1.0) * (u[..., 3] - rho * k)
        return rho, vel, k, p

    def pressure(self, u):
        return self._prim(u)[3]

    def flux(self, u, x):
        rho, vel, _, p = self._prim(u)
        mom = u[..., 1:3]
        Ep = u[..., 3] + p
        F = np.empty(u.shape + (2,))
        F[..., 0, :] = mom
        F[..., 1, :] = mom[..., 0, None] * vel
        F[..., 2, :] = mom[..., 1, None] * vel
        F[..., 1, 0] += p
        F[..., 2, 1] += p
        F[..., 3, :] = Ep[..., None] * vel
        return F

    def flux_jacobian(self, u, x):
        g = self.gamma_gas
        rho, vel, k, p = self._prim(u)
        uu, vv = vel[..., 0], vel[..., 1]
        H = (u[..., 3] + p) / rho
        gm = g - 1.0
        J = np.zeros(u.shape[:-1] + (4, 4, 2))
        J[..., 0, 1, 0] = 1.0
        J[..., 1, 0, 0] = gm * k - uu * uu
        J[..., 1, 1, 0] = (3.0 - g) * uu
        J[..., 1, 2, 0] = -gm * vv
        J[..., 1, 3, 0] = gm
        J[..., 2, 0, 0] = -uu * vv
        J[..., 2, 1, 0] = vv
        J[..., 2, 2, 0] = uu
        J[..., 3, 0, 0] = uu * (gm * k - H)
        J[..., 3, 1, 0] = H - gm * uu * uu
        J[..., 3, 2, 0] = -gm * uu * vv
        J[..., 3, 3, 0] = g * uu
        J[..., 0, 2, 1] = 1.0
        J[..., 1, 0, 1] = -uu * vv
        J[..., 1, 1, 1] = vv
        J[..., 1, 2, 1] = uu
        J[..., 2, 0, 1] = gm * k - vv * vv
        J[..., 2, 1, 1] = -gm * uu
        J[..., 2, 2, 1] = (3.0 - g) * vv
        J[..., 2, 3, 1] = gm
        J[..., 3, 0, 1] = vv * (gm * k - H)
        J[..., 3, 1, 1] = -gm * uu * vv
        J[..., 3, 2, 1] = H - gm * vv * vv
        J[..., 3, 3, 1] = g * vv
        return J

    def flux_div(self, u, gradu, x):
        g = self.gamma_gas
        gm = g - 1.0
        rho, vel, k, p = self._prim(u)
        uu, vv = vel[..., 0], vel[..., 1]
        H = (u[..., 3] + p) / rho
        rx, mxx, myx, Ex = (gradu[0, ..., j] for j in range(4))
        ry, mxy, myy, Ey = (gradu[1, ..., j] for j in range(4))
        out = np.empty_like(u)
        out[..., 0] = mxx + myy
        out[..., 1] = ((gm * k - uu * uu) * rx + (3.0 - g) * uu * mxx
                       - gm * vv * myx + gm * Ex
                       - uu * vv * ry + vv * mxy + uu * myy)
        out[..., 2] = (-uu * vv * rx + vv * mxx + uu * myx
                       + (gm * k - vv * vv) * ry - gm * uu * mxy
                       + (3.0 - g) * vv * myy + gm * Ey)
        out[..., 3] = (uu * (gm * k - H) * rx + (H - gm * uu * uu) * mxx
                       - gm * uu * vv * myx + g * uu * Ex
                       + vv * (gm * k - H) * ry - gm * uu * vv * mxy
                       + (H - gm * vv * vv) * myy + g * vv * Ey)
        return out

    def _normal_speed(self, u, n, x):
        rho, vel, _, p = self._prim(u)
        c = np.sqrt(self.gamma_gas * p / rho)
        return np.abs(np.einsum("...d,...d->...", vel, n)) + c

    def max_speed(self, u, x):
        rho, vel, _, p = self._prim(u)
        return np.linalg.norm(vel, axis=-1) + np.sqrt(self.gamma_gas * p / rho)

    def entropy(self, u):
        g = self.gamma_gas
        rho, _, _, p = self._prim(u)
        return -(g + 1.0) / (g - 1.0) * (rho * p) ** (1.0 / (g + 1.0))

    def entropy_vars(self, u):
        g = self.gamma_gas
        rho, _, _, p = self._prim(u)
        w = np.stack([u[..., 3], -u[..., 1], -u[..., 2], rho], axis=-1)
        return -((rho * p) ** (-g / (g + 1.0)))[..., None] * w

    def entropy_vars_jacobian(self, u):
        g = self.gamma_gas
        rho, _, _, p = self._prim(u)
        rp = rho * p
        c1 = (g * (g - 1.0) / (g + 1.0)) * rp ** (-(2.0 * g + 1.0) / (g + 1.0))
        c2 = rp ** (-g / (g + 1.0))
        w = (u[..., 3], -u[..., 1], -u[..., 2], rho)
        J = np.empty(u.shape[:-1] + (4, 4))
        for i in range(4):
            for j in range(i, 4):
                J[..., i, j] = c1 * (w[i] * w[j])
                if i != j:
                    J[..., j, i] = J[..., i, j]
        J[..., 0, 3] -= c2
        J[..., 3, 0] -= c2
        J[..., 1, 1] += c2
        J[..., 2, 2] += c2
        return J

    def entropy_flux(self, u, x):
        g = self.gamma_gas
        rho, _, _, p = self._prim(u)
        s = p * rho ** (-g)
        return -u[..., 1:3] * ((g + 1.0) / (g - 1.0) * s ** (1.0 / (g + 1.0)))[..., None]

    def a0(self, u):
        g = self.gamma_gas
        rho, vel, k, p = self._prim(u)
        uu, vv = vel[..., 0], vel[..., 1]
        E = u[..., 3]
        pg = p / (g * (g - 1.0))
        half = 0.5 * rho * (uu * uu - vv * vv)
        A = np.empty(u.shape[:-1] + (4, 4))
        A[..., 0, 0] = rho
        A[..., 0, 1] = rho * uu
        A[..., 0, 2] = rho * vv
        A[..., 0, 3] = rho * k + pg
        A[..., 1, 0] = rho * uu
        A[..., 1, 1] = E - pg + half
        A[..., 1, 2] = rho * uu * vv
        A[..., 1, 3] = uu * E
        A[..., 2, 0] = rho * vv
        A[..., 2, 1] = rho * uu * vv
        A[..., 2, 2] = E - pg - half
        A[..., 2, 3] = vv * E
        A[..., 3, 0] = rho * k + pg
        A[..., 3, 1] = E * uu
        A[..., 3, 2] = E * vv
        A[..., 3, 3] = E * E / rho
        return (g * rho * (rho * p) ** (-1.0 / (g + 1.0)))[..., None, None] * A

    def admissible_mask(self, u):
        rho = u[..., 0]
        ok = rho > ADMISSIBILITY_FLOOR
        p = np.where(ok, self.pressure(np.where(ok[..., None], u, 1.0)), -1.0)
        return ok & (p > ADMISSIBILITY_FLOOR)

    def check_admissible(self, u):
        if not np.all(u[..., 0] > ADMISSIBILITY_FLOOR):
            raise StateError("rho", f"density fell below {ADMISSIBILITY_FLOOR}")
        if not np.all(self.pressure(u) > ADMISSIBILITY_FLOOR):
            raise StateError("p", f"pressure fell below {ADMISSIBILITY_FLOOR}")

    def wall_ghost(self, u, n):
        mom = u[..., 1:3]
        mn = np.einsum("...d,...d->...", mom, n)
        ghost = np.array(u, copy=True)
        ghost[..., 1:3] = mom - 2.0 * mn[..., None] * n
        return ghost


def make_system(name, **params):
    """Config-string factory: advection / rotation / swe / euler."""
    if name == "advection":
        return AdvectionSystem(a=(params.get("a1", 1.0), params.get("a2", 0.0)))
    if name == "rotation":
        return AdvectionSystem(field="rotation")
    if name == "swe":
        return ShallowWaterSystem(g=params.get("g", 9.81))
    if name == "euler":
        return EulerSystem(gamma_gas=params.get("gamma_gas", 1.4))
    raise ValueError(f"unknown pde system {name!r}")
