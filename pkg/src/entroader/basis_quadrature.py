"""Modal Taylor bases on triangles and the quadrature rules backing them.

The spatial basis on a cell with barycenter ``xb`` and circumradius ``h`` is

    phi_l(x) = ((x - xb)/h)^p / p!  *  ((y - yb)/h)^q / q!,   0 <= p+q <= N,

and the space-time basis multiplies in a ``((t - tn)/h)^r / r!`` factor; note
the time coordinate is scaled by the *cell size* ``h``, not by the step.
Mode exponents are enumerated in graded order (total degree ascending, then
time exponent ascending, then ``p`` descending); this ordering is part of the
on-disk contract and the ``r = 0`` block of the space-time table reproduces
the spatial table.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError, DegenerateCellError

_FACT = np.array([math.factorial(k) for k in range(21)], dtype=float)


def _spatial_exponents(N):
    exps = []
    for deg in range(N + 1):
        for p in range(deg, -1, -1):
            exps.append((p, deg - p))
    return np.array(exps, dtype=np.int64)


def _spacetime_exponents(N):
    exps = []
    for deg in range(N + 1):
        for r in range(deg + 1):
            for p in range(deg - r, -1, -1):
                exps.append((p, deg - r - p, r))
    return np.array(exps, dtype=np.int64)


@dataclass(frozen=True)
class SpatialBasis:
    """Taylor modal basis of degree N on a triangle; (N+1)(N+2)/2 modes."""

    N: int
    exponents: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.N < 1:
            raise CapabilityError("polynomial degree must be >= 1")
        object.__setattr__(self, "exponents", _spatial_exponents(self.N))

    @property
    def count(self):
        return (self.N + 1) * (self.N + 2) // 2


@dataclass(frozen=True)
class SpaceTimeBasis:
    """Space-time Taylor basis of degree N; (N+1)(N+2)(N+3)/6 modes."""

    N: int
    exponents: np.ndarray = field(init=False, repr=False)
    spatial_index: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.N < 1:
            raise CapabilityError("polynomial degree must be >= 1")
        exps = _spacetime_exponents(self.N)
        object.__setattr__(self, "exponents", exps)
        # map each space-time mode to the spatial mode sharing its (p, q)
        sp = _spatial_exponents(self.N)
        lut = {(p, q): i for i, (p, q) in enumerate(map(tuple, sp))}
        idx = np.array([lut[(p, q)] for p, q, _ in exps], dtype=np.int64)
        object.__setattr__(self, "spatial_index", idx)

    @property
    def count(self):
        return (self.N + 1) * (self.N + 2) * (self.N + 3) // 6

    @property
    def r0_block(self):
        """Indices of the r = 0 modes, ordered like the spatial basis."""
        return np.flatnonzero(self.exponents[:, 2] == 0)


def phi_eval(basis, ell, x, xb, h):
    """Value and gradient of spatial mode ``ell`` at point(s) ``x``.

    ``x`` has shape (..., 2); returns (value (...,), gradient (..., 2)).
    """
    p, q = basis.exponents[ell]
    x = np.asarray(x, dtype=float)
    xi = (x[..., 0] - xb[0]) / h
    eta = (x[..., 1] - xb[1]) / h
    val = xi**p / _FACT[p] * eta**q / _FACT[q]
    gx = (xi ** (p - 1) / _FACT[p - 1] * eta**q / _FACT[q] / h) if p > 0 else np.zeros_like(xi)
    gy = (xi**p / _FACT[p] * eta ** (q - 1) / _FACT[q - 1] / h) if q > 0 else np.zeros_like(xi)
    return val, np.stack([gx, gy], axis=-1)


def theta_eval(basis, ell, x, t, xb, h, tn):
    """Value, spatial gradient and time derivative of space-time mode ``ell``."""
    p, q, r = basis.exponents[ell]
    x = np.asarray(x, dtype=float)
    xi = (x[..., 0] - xb[0]) / h
    eta = (x[..., 1] - xb[1]) / h
    tau = (np.asarray(t, dtype=float) - tn) / h
    sval = xi**p / _FACT[p] * eta**q / _FACT[q]
    tval = tau**r / _FACT[r]
    val = sval * tval
    gx = (xi ** (p - 1) / _FACT[p - 1] * eta**q / _FACT[q] / h) if p > 0 else np.zeros_like(xi)
    gy = (xi**p / _FACT[p] * eta ** (q - 1) / _FACT[q - 1] / h) if q > 0 else np.zeros_like(xi)
    dt = (sval * tau ** (r - 1) / _FACT[r - 1] / h) if r > 0 else np.zeros_like(val)
    return val, np.stack([gx * tval, gy * tval], axis=-1), dt


def eval_spatial_table(basis, pts, xb, h):
    """All spatial modes at once.

    ``pts``: (..., 2) points, ``xb``: (..., 2) barycenters broadcastable
    against pts' leading axes, ``h`` broadcastable scalar circumradii.
    Returns values (..., count) and gradients (..., count, 2).
    """
    pts = np.asarray(pts, dtype=float)
    p = basis.exponents[:, 0]
    q = basis.exponents[:, 1]
    xi = (pts[..., 0] - xb[..., 0]) / h
    eta = (pts[..., 1] - xb[..., 1]) / h
    xi_pow = xi[..., None] ** np.arange(basis.N + 1)  # (..., N+1)
    eta_pow = eta[..., None] ** np.arange(basis.N + 1)
    val = xi_pow[..., p] / _FACT[p] * eta_pow[..., q] / _FACT[q]
    hh = np.asarray(h)[..., None]
    gx = np.where(p > 0, xi_pow[..., np.maximum(p - 1, 0)] / _FACT[np.maximum(p - 1, 0)]
                  * eta_pow[..., q] / _FACT[q], 0.0) / hh
    gy = np.where(q > 0, xi_pow[..., p] / _FACT[p]
                  * eta_pow[..., np.maximum(q - 1, 0)] / _FACT[np.maximum(q - 1, 0)], 0.0) / hh
    return val, np.stack([gx, gy], axis=-1)


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights; ``degree`` is the guaranteed polynomial exactness."""

    points: np.ndarray
    weights: np.ndarray
    degree: int


# Symmetric positive-weight rules on the reference triangle {x,y>=0, x+y<=1},
# given as orbits in barycentric coordinates. Orbit constants were refined to
# machine precision against the exact monomial moments a! b! / (a+b+2)!.
# The classical degree-3 and degree-7 rules carry negative weights and are
# deliberately absent (nonnegative weights are load-bearing downstream).
_TRI_ORBITS = {
    1: [("c", 1.0)],
    2: [("s21", 1.0 / 3.0, 1.0 / 6.0)],
    4: [("s21", 0.22338158967801133, 0.4459484909159648),
        ("s21", 0.109951743655322, 0.09157621350977078)],
    5: [("c", 9.0 / 40.0),
        ("s21", (155.0 - math.sqrt(15.0)) / 1200.0, (6.0 - math.sqrt(15.0)) / 21.0),
        ("s21", (155.0 + math.sqrt(15.0)) / 1200.0, (6.0 + math.sqrt(15.0)) / 21.0)],
    6: [("s21", 0.050844906370206625, 0.06308901449150202),
        ("s21", 0.11678627572637916, 0.2492867451709101),
        ("s111", 0.08285107561837377, 0.31035245103378434, 0.0531450498448172)],
    8: [("c", 0.1443156076777192),
        ("s21", 0.10321737053472879, 0.1705693077517035),
        ("s21", 0.03245849762320433, 0.0505472283170323),
        ("s21", 0.09509163426733055, 0.4592925882926748),
        ("s111", 0.02723031417441497, 0.2631128296348051, 0.00839477740988421)],
}

_MAX_TRIANGLE_DEGREE = 20


def _orbit_points(orbits):
    pts, wts = [], []
    for orbit in orbits:
        kind = orbit[0]
        if kind == "c":
            pts.append((1 / 3, 1 / 3))
            wts.append(orbit[1])
        elif kind == "s21":
            w, a = orbit[1], orbit[2]
            c = 1.0 - 2.0 * a
            for lam in ((c, a, a), (a, c, a), (a, a, c)):
                pts.append((lam[1], lam[2]))
                wts.append(w)
        else:  # s111
            w, a, b = orbit[1], orbit[2], orbit[3]
            c = 1.0 - a - b
            for lam in ((c, a, b), (c, b, a), (a, c, b), (b, c, a), (a, b, c), (b, a, c)):
                pts.append((lam[1], lam[2]))
                wts.append(w)
    return np.array(pts), np.array(wts) * 0.5


def _collapsed_rule(degree):
    """Duffy-map tensor Gauss rule; positive weights, any degree."""
    nu = (degree + 2) // 2
    nv = (degree + 3) // 2
    xu, wu = np.polynomial.legendre.leggauss(nu)
    xv, wv = np.polynomial.legendre.leggauss(nv)
    u = 0.5 * (xu + 1.0)
    v = 0.5 * (xv + 1.0)
    wu = 0.5 * wu
    wv = 0.5 * wv
    U, V = np.meshgrid(u, v, indexing="ij")
    WU, WV = np.meshgrid(wu, wv, indexing="ij")
    x = (U * (1.0 - V)).ravel()
    y = V.ravel()
    w = (WU * WV * (1.0 - V)).ravel()
    return np.stack([x, y], axis=-1), w


def triangle_rule(degree):
    """Rule on the reference triangle, exact for polynomials <= ``degree``.

    Weights are positive and sum to the reference area 1/2. Symmetric orbit
    tables serve degrees up to 8; a collapsed product rule covers the rest.
    """
    if degree < 0 or degree > _MAX_TRIANGLE_DEGREE:
        raise CapabilityError(f"triangle rule degree {degree} unsupported")
    for d in sorted(_TRI_ORBITS):
        if d >= degree:
            pts, wts = _orbit_points(_TRI_ORBITS[d])
            return QuadratureRule(pts, wts, d)
    pts, wts = _collapsed_rule(degree)
    return QuadratureRule(pts, wts, degree)


def face_rule(degree):
    """Gauss-Legendre rule on [0, 1] with ceil((degree+1)/2) points."""
    if degree < 0:
        raise CapabilityError("face rule degree must be >= 0")
    n = max(1, (degree + 2) // 2)
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w, 2 * n - 1)


def time_rule(stages):
    """S+1 Gauss-Legendre nodes on [0, 1]; exact to degree 2S+1."""
    if stages < 0:
        raise CapabilityError("time rule needs stages >= 0")
    x, w = np.polynomial.legendre.leggauss(stages + 1)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w, 2 * stages + 1)


def map_to_cell(rule, verts):
    """Map a reference-triangle rule to a physical triangle.

    ``verts``: (..., 3, 2). Returns points (..., n, 2) and weights (..., n)
    scaled so they sum to the cell area.
    """
    verts = np.asarray(verts, dtype=float)
    v0 = verts[..., 0, :]
    e1 = verts[..., 1, :] - v0
    e2 = verts[..., 2, :] - v0
    ref = rule.points  # (n, 2)
    pts = (v0[..., None, :]
           + ref[..., 0, None] * e1[..., None, :]
           + ref[..., 1, None] * e2[..., None, :])
    detj = e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0]
    wts = rule.weights * detj[..., None]
    return pts, wts


def mass_matrix(basis, verts, quad_degree=None):
    """SPD Gram matrix of the spatial basis on one triangle.

    Integration uses a triangle rule of exactness >= 2N (default 2N+2, the
    solver-wide volume rule). Raises DegenerateCellError when the result is
    not numerically SPD.
    """
    verts = np.asarray(verts, dtype=float)
    if quad_degree is None:
        quad_degree = 2 * basis.N + 2
    rule = triangle_rule(quad_degree)
    pts, wts = map_to_cell(rule, verts)
    xb = verts.mean(axis=-2)
    a = verts[0] - verts[1]
    b = verts[1] - verts[2]
    c = verts[2] - verts[0]
    e1, e2 = verts[1] - verts[0], verts[2] - verts[0]
    area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
    h = (np.linalg.norm(a) * np.linalg.norm(b) * np.linalg.norm(c)) / (4.0 * area)
    val, _ = eval_spatial_table(basis, pts, xb, h)
    M = np.einsum("q,qk,ql->kl", wts, val, val)
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCellError("cell mass matrix is not SPD") from exc
    return M
