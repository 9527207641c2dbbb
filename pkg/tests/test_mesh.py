import numpy as np
import pytest

from entroader.errors import TopologyError
from entroader.mesh import (TRANSMISSIVE, BoundarySpec, build_structured_tri_mesh,
                            cell_faces, neighbor_across, read_mesh_file,
                            write_mesh_file)
from entroader.pde_systems import ShallowWaterSystem

ALL_TRANSMISSIVE = BoundarySpec(*(TRANSMISSIVE,) * 4)
UNIT = ((0.0, 1.0), (0.0, 1.0))


def test_single_quad_split():
    mesh = build_structured_tri_mesh(1, 1, UNIT, ALL_TRANSMISSIVE)
    assert mesh.num_cells == 2
    assert mesh.area.sum() == pytest.approx(1.0, abs=1e-15)


def test_2x2_face_enumeration_brute_force():
    mesh = build_structured_tri_mesh(2, 2, UNIT, ALL_TRANSMISSIVE)
    assert mesh.num_cells == 8
    assert mesh.num_faces == 16
    # brute-force edge census straight from the cell list
    counts = {}
    for cell in mesh.cells:
        for k in range(3):
            key = tuple(sorted((int(cell[k]), int(cell[(k + 1) % 3]))))
            counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 16
    assert all(c in (1, 2) for c in counts.values())
    interior = {k for k, c in counts.items() if c == 2}
    listed = {tuple(sorted(fv)) for fv, fr in zip(mesh.face_vertices, mesh.face_right)
              if fr >= 0}
    assert listed == interior


def test_polygon_closure():
    mesh = build_structured_tri_mesh(3, 2, ((0, 2.0), (0, 1.0)), ALL_TRANSMISSIVE)
    for c in range(mesh.num_cells):
        faces, signs = cell_faces(mesh, c)
        total = np.zeros(2)
        for f, s in zip(faces, signs):
            total += s * mesh.face_normal[f] * mesh.face_length[f]
        assert np.abs(total).max() < 1e-13


def test_area_sum_and_refinement():
    domain = ((-1.5, 1.5), (-1.5, 1.5))
    m1 = build_structured_tri_mesh(8, 8, domain)
    assert m1.area.sum() == pytest.approx(9.0, rel=1e-12)
    m2 = build_structured_tri_mesh(16, 16, domain)
    assert m2.h_bar == pytest.approx(0.5 * m1.h_bar, rel=0.05)


def test_face_orientation_left_before_right():
    mesh = build_structured_tri_mesh(4, 3, UNIT, ALL_TRANSMISSIVE)
    interior = mesh.face_right >= 0
    assert np.all(mesh.face_left[interior] < mesh.face_right[interior])


def test_normals_point_from_left_to_right():
    mesh = build_structured_tri_mesh(4, 4, UNIT, ALL_TRANSMISSIVE)
    interior = np.flatnonzero(mesh.face_right >= 0)
    mids = 0.5 * (mesh.vertices[mesh.face_vertices[:, 0]]
                  + mesh.vertices[mesh.face_vertices[:, 1]])
    for f in interior:
        d = mesh.barycenter[mesh.face_right[f]] - mesh.barycenter[mesh.face_left[f]]
        assert np.dot(d, mesh.face_normal[f]) > 0
    # boundary normals point out of the domain
    for f in np.flatnonzero(mesh.face_right < 0):
        out = mids[f] - mesh.barycenter[mesh.face_left[f]]
        assert np.dot(out, mesh.face_normal[f]) > 0


def test_neighbor_across_interior():
    mesh = build_structured_tri_mesh(2, 2, UNIT, ALL_TRANSMISSIVE)
    f = int(np.flatnonzero(mesh.face_right >= 0)[0])
    kind, other = neighbor_across(mesh, int(mesh.face_left[f]), f)
    assert kind == "interior"
    assert other == mesh.face_right[f]


def test_neighbor_across_wall_reflection_state():
    # wall ghost for SW state (1, 1, 0) against n = (1, 0) is (1, -1, 0)
    sw = ShallowWaterSystem()
    ghost = sw.wall_ghost(np.array([1.0, 1.0, 0.0]), np.array([1.0, 0.0]))
    assert np.allclose(ghost, [1.0, -1.0, 0.0], atol=1e-15)


def test_neighbor_across_errors():
    mesh = build_structured_tri_mesh(2, 2, UNIT, ALL_TRANSMISSIVE)
    with pytest.raises(TopologyError):
        neighbor_across(mesh, 0, mesh.num_faces + 3)
    f = int(np.flatnonzero(mesh.face_left != 0)[0])
    if mesh.face_right[f] == 0:
        f = int(np.flatnonzero((mesh.face_left != 0) & (mesh.face_right != 0))[0])
    with pytest.raises(TopologyError):
        neighbor_across(mesh, 0, f)


def test_periodic_pairing_by_translation():
    mesh = build_structured_tri_mesh(4, 4, UNIT)  # fully periodic
    periodic = np.flatnonzero(np.any(mesh.face_offset != 0.0, axis=1))
    assert periodic.size == 8  # 4 per direction
    for f in periodic:
        kind, other = neighbor_across(mesh, int(mesh.face_left[f]), f)
        assert kind == "periodic"
        # translated face midpoint must land on an edge of the partner cell
        mid = 0.5 * (mesh.vertices[mesh.face_vertices[f, 0]]
                     + mesh.vertices[mesh.face_vertices[f, 1]])
        shifted = mid + mesh.face_offset[f]
        verts = mesh.vertices[mesh.cells[other]]
        dists = []
        for k in range(3):
            a, b = verts[k], verts[(k + 1) % 3]
            t = np.clip(np.dot(shifted - a, b - a) / np.dot(b - a, b - a), 0, 1)
            dists.append(np.linalg.norm(a + t * (b - a) - shifted))
        assert min(dists) < 1e-12


def test_periodic_total_face_count():
    # 3 nx*ny + nx + ny edges total; periodic merging removes nx + ny of them
    mesh = build_structured_tri_mesh(3, 5, UNIT)
    assert mesh.num_faces == 3 * 3 * 5 + 3 + 5 - (3 + 5)
    assert np.all(mesh.face_right >= 0)


def test_bad_arguments():
    with pytest.raises(ValueError):
        build_structured_tri_mesh(0, 3)
    with pytest.raises(ValueError):
        build_structured_tri_mesh(2, 2, ((0.0, 0.0), (0.0, 1.0)))
    with pytest.raises(ValueError):
        BoundarySpec("periodic", "wall", "wall", "wall")


def test_mesh_file_round_trip(tmp_path):
    mesh = build_structured_tri_mesh(3, 2, UNIT, ALL_TRANSMISSIVE)
    path = tmp_path / "grid.txt"
    write_mesh_file(path, mesh)
    again = read_mesh_file(path, domain=UNIT, bc=ALL_TRANSMISSIVE)
    assert np.array_equal(again.vertices, mesh.vertices)
    assert np.array_equal(again.cells, mesh.cells)
    assert again.num_faces == mesh.num_faces


def test_mesh_file_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 1\n0 0\n1 0\n")
    with pytest.raises(TopologyError):
        read_mesh_file(bad)
