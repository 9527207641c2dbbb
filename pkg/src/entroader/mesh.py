"""Conforming triangular meshes of rectangles with boundary treatment.

Faces are stored once: interior faces carry (left, right) cell ids and the
unit normal points from left into right. Periodic boundary pairs are merged
into single interior-like faces with a coordinate offset, so a shared face
value is computed exactly once per step (discrete conservation is bitwise).
Remaining boundary faces carry ``right = -1`` and a condition tag.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import TopologyError

PERIODIC = "periodic"
WALL = "wall"
DIRICHLET = "dirichlet"
TRANSMISSIVE = "transmissive"

_CONDITIONS = (PERIODIC, WALL, DIRICHLET, TRANSMISSIVE)
SIDES = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class BoundarySpec:
    """Per-side condition; periodic sides must come in opposing pairs."""

    left: str = PERIODIC
    right: str = PERIODIC
    bottom: str = PERIODIC
    top: str = PERIODIC

    def __post_init__(self):
        for side in SIDES:
            cond = getattr(self, side)
            if cond not in _CONDITIONS:
                raise ValueError(f"unknown boundary condition {cond!r} on {side}")
        if (self.left == PERIODIC) != (self.right == PERIODIC):
            raise ValueError("periodic boundaries need both left and right periodic")
        if (self.bottom == PERIODIC) != (self.top == PERIODIC):
            raise ValueError("periodic boundaries need both bottom and top periodic")

    def of(self, side):
        return getattr(self, side)


@dataclass
class Mesh:
    """Triangle mesh with precomputed geometry and face connectivity.

    Immutable after construction; all arrays are plain ndarrays:

    - ``vertices`` (nv, 2), ``cells`` (nc, 3) counter-clockwise vertex ids
    - ``barycenter`` (nc, 2), ``area`` (nc,), ``circumradius`` (nc,),
      ``incircle`` (nc,)
    - faces: ``face_vertices`` (nf, 2), ``face_left``/``face_right`` (nf,)
      with right = -1 on non-periodic boundary, ``face_normal`` (nf, 2)
      outward from the left cell, ``face_length`` (nf,), ``face_tag`` (nf,)
      one of "", wall/dirichlet/transmissive, ``face_offset`` (nf, 2)
      translation into the right cell's frame (nonzero only for merged
      periodic pairs).
    """

    vertices: np.ndarray
    cells: np.ndarray
    barycenter: np.ndarray
    area: np.ndarray
    circumradius: np.ndarray
    incircle: np.ndarray
    face_vertices: np.ndarray
    face_left: np.ndarray
    face_right: np.ndarray
    face_normal: np.ndarray
    face_length: np.ndarray
    face_tag: np.ndarray
    face_offset: np.ndarray
    h_bar: float = field(init=False)

    def __post_init__(self):
        self.h_bar = float(self.circumradius.mean())

    @property
    def num_cells(self):
        return self.cells.shape[0]

    @property
    def num_faces(self):
        return self.face_vertices.shape[0]

    @property
    def interior_mask(self):
        return self.face_right >= 0

    @property
    def boundary_mask(self):
        return self.face_right < 0

    def cell_vertices(self, i=None):
        idx = self.cells if i is None else self.cells[i]
        return self.vertices[idx]


def _cell_geometry(vertices, cells):
    v = vertices[cells]  # (nc, 3, 2)
    e1 = v[:, 1] - v[:, 0]
    e2 = v[:, 2] - v[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(det <= 0):
        bad = int(np.flatnonzero(det <= 0)[0])
        raise TopologyError(f"cell {bad} is not counter-clockwise or degenerate")
    area = 0.5 * det
    bary = v.mean(axis=1)
    la = np.linalg.norm(v[:, 1] - v[:, 0], axis=1)
    lb = np.linalg.norm(v[:, 2] - v[:, 1], axis=1)
    lc = np.linalg.norm(v[:, 0] - v[:, 2], axis=1)
    circum = la * lb * lc / (4.0 * area)
    s = 0.5 * (la + lb + lc)
    incircle = area / s
    return bary, area, circum, incircle


def _build_faces(vertices, cells):
    """One entry per geometric edge; left cell is the first referencer."""
    edge_map = {}
    fv, fl, fr = [], [], []
    for ci, cell in enumerate(cells):
        for k in range(3):
            a, b = int(cell[k]), int(cell[(k + 1) % 3])
            key = (min(a, b), max(a, b))
            if key in edge_map:
                fi = edge_map[key]
                if fr[fi] != -1:
                    raise TopologyError(f"edge {key} shared by more than two cells")
                fr[fi] = ci
            else:
                edge_map[key] = len(fv)
                fv.append((a, b))  # as oriented in the left cell (CCW)
                fl.append(ci)
                fr.append(-1)
    return (np.array(fv, dtype=np.int64), np.array(fl, dtype=np.int64),
            np.array(fr, dtype=np.int64))


def _face_geometry(vertices, fv):
    a = vertices[fv[:, 0]]
    b = vertices[fv[:, 1]]
    d = b - a
    length = np.linalg.norm(d, axis=1)
    # CCW edge (a -> b) of the left cell: outward normal is d rotated by -90
    normal = np.stack([d[:, 1], -d[:, 0]], axis=1) / length[:, None]
    return normal, length


def _classify_sides(vertices, fv, fl, fr, domain):
    (x0, x1), (y0, y1) = domain
    mids = 0.5 * (vertices[fv[:, 0]] + vertices[fv[:, 1]])
    tol = 1e-10 * max(x1 - x0, y1 - y0)
    side = np.full(fv.shape[0], "", dtype=object)
    boundary = fr < 0
    side[boundary & (np.abs(mids[:, 0] - x0) < tol)] = "left"
    side[boundary & (np.abs(mids[:, 0] - x1) < tol)] = "right"
    side[boundary & (np.abs(mids[:, 1] - y0) < tol)] = "bottom"
    side[boundary & (np.abs(mids[:, 1] - y1) < tol)] = "top"
    if np.any(boundary & (side == "")):
        raise TopologyError("boundary face not on any rectangle side")
    return side, mids


def _pair_periodic(side, mids, fv, fl, fr, normal, length, tag, offset, bc, domain):
    (x0, x1), (y0, y1) = domain
    pairs = []
    if bc.left == PERIODIC:
        pairs.append(("left", "right", np.array([x1 - x0, 0.0])))
    if bc.bottom == PERIODIC:
        pairs.append(("bottom", "top", np.array([0.0, y1 - y0])))
    keep = np.ones(fv.shape[0], dtype=bool)
    for s_lo, s_hi, shift in pairs:
        lo = np.flatnonzero(side == s_lo)
        hi = np.flatnonzero(side == s_hi)
        if lo.size != hi.size:
            raise TopologyError(f"periodic sides {s_lo}/{s_hi} have different face counts")
        # match by translated midpoint
        key_lo = mids[lo] + shift
        order_hi = hi[np.lexsort((mids[hi][:, 0], mids[hi][:, 1]))]
        order_lo = lo[np.lexsort((key_lo[:, 0], key_lo[:, 1]))]
        for a, b in zip(order_lo, order_hi):
            if not np.allclose(mids[a] + shift, mids[b], atol=1e-9 * max(x1 - x0, y1 - y0)):
                raise TopologyError(f"periodic faces {a}/{b} do not line up")
            if abs(length[a] - length[b]) > 1e-12 * length[a]:
                raise TopologyError("periodic partner faces differ in length")
            # keep the hi-side face: left cell on the hi side, right = lo cell,
            # and quadrature points translate by -shift into the partner frame
            fr[b] = fl[a]
            offset[b] = -shift
            tag[b] = ""
            keep[a] = False
    return keep


def build_structured_tri_mesh(nx, ny, domain=((0.0, 1.0), (0.0, 1.0)), bc=None):
    """Criss-split structured triangulation: 2*nx*ny congruent triangles.

    Each grid quad is cut along its lower-left to upper-right diagonal.
    ``domain`` is ((x0, x1), (y0, y1)); ``bc`` defaults to all-periodic.
    """
    if nx < 1 or ny < 1:
        raise ValueError("cell counts must be >= 1")
    (x0, x1), (y0, y1) = domain
    if not (x1 > x0 and y1 > y0):
        raise ValueError("degenerate domain rectangle")
    if bc is None:
        bc = BoundarySpec()

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return i * (ny + 1) + j

    cells = []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
            cells.append((v00, v10, v11))
            cells.append((v00, v11, v01))
    cells = np.array(cells, dtype=np.int64)
    return mesh_from_arrays(vertices, cells, domain=domain, bc=bc)


def mesh_from_arrays(vertices, cells, domain=None, bc=None):
    """Assemble a Mesh from raw vertex/cell arrays (e.g. a file)."""
    vertices = np.asarray(vertices, dtype=float)
    cells = np.asarray(cells, dtype=np.int64)
    if cells.min() < 0 or cells.max() >= vertices.shape[0]:
        raise TopologyError("cell references a vertex id out of range")
    bary, area, circum, incircle = _cell_geometry(vertices, cells)
    fv, fl, fr = _build_faces(vertices, cells)
    normal, length = _face_geometry(vertices, fv)
    tag = np.full(fv.shape[0], "", dtype=object)
    offset = np.zeros((fv.shape[0], 2))

    if domain is None:
        mn = vertices.min(axis=0)
        mx = vertices.max(axis=0)
        domain = ((mn[0], mx[0]), (mn[1], mx[1]))
    if bc is None:
        bc = BoundarySpec(TRANSMISSIVE, TRANSMISSIVE, TRANSMISSIVE, TRANSMISSIVE)

    side, mids = _classify_sides(vertices, fv, fl, fr, domain)
    for s in SIDES:
        on = side == s
        tag[on] = bc.of(s)
    keep = _pair_periodic(side, mids, fv, fl, fr, normal, length, tag, offset, bc, domain)

    return Mesh(vertices, cells,
                bary, area, circum, incircle,
                fv[keep], fl[keep], fr[keep],
                normal[keep], length[keep], tag[keep], offset[keep])


def read_mesh_file(path, domain=None, bc=None):
    """Plain-text format: line 1 "NV NC"; NV lines "x y"; NC lines "v0 v1 v2"."""
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise TopologyError(f"{path}: missing NV NC header")
    nv, nc = int(tokens[0]), int(tokens[1])
    need = 2 + 2 * nv + 3 * nc
    if len(tokens) != need:
        raise TopologyError(f"{path}: expected {need} tokens, found {len(tokens)}")
    vals = np.array(tokens[2:2 + 2 * nv], dtype=float).reshape(nv, 2)
    conn = np.array(tokens[2 + 2 * nv:], dtype=np.int64).reshape(nc, 3)
    return mesh_from_arrays(vals, conn, domain=domain, bc=bc)


def write_mesh_file(path, mesh):
    with open(path, "w") as fh:
        fh.write(f"{mesh.vertices.shape[0]} {mesh.cells.shape[0]}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g}\n")
        for a, b, c in mesh.cells:
            fh.write(f"{a} {b} {c}\n")


def cell_faces(mesh, cell):
    """Face ids bounding ``cell`` with orientation sign (+1 if left)."""
    own_left = np.flatnonzero(mesh.face_left == cell)
    own_right = np.flatnonzero(mesh.face_right == cell)
    return (np.concatenate([own_left, own_right]),
            np.concatenate([np.ones(own_left.size), -np.ones(own_right.size)]))


def neighbor_across(mesh, cell, face):
    """Ghost policy for ``cell`` across ``face``.

    Returns ("interior", j) or ("periodic", j) for coupled cells, or
    ("ghost", tag) where tag names the boundary rule.
    """
    if face < 0 or face >= mesh.num_faces:
        raise TopologyError(f"face {face} out of range")
    fl, fr = mesh.face_left[face], mesh.face_right[face]
    if cell not in (fl, fr):
        raise TopologyError(f"face {face} does not bound cell {cell}")
    if fr >= 0:
        other = int(fr if cell == fl else fl)
        kind = "periodic" if np.any(mesh.face_offset[face] != 0.0) else "interior"
        return kind, other
    return "ghost", str(mesh.face_tag[face])
