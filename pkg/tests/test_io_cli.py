import os

import numpy as np
import pytest

import entroader.io_cli as io_cli
from entroader.driver import DIAG_COLUMNS, RunConfig, Simulation
from entroader.errors import ConfigError
from entroader.operators import DGState

rng = np.random.default_rng(77)

CONFIG_TEXT = """
[pde]
system = swe
g = 9.81

[mesh]
nx = 12
ny = 12

[scheme]
case = sw_vortex
degree = 2
cfl = 0.3
t_final = 0.01
correction = true

[relaxation]
mode = conservative
gamma_solver = newton

[output]
every = 0
reproducible = false
"""


class TestConfig:
    def test_read(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text(CONFIG_TEXT)
        cfg = io_cli.read_config(path)
        assert cfg.pde == "swe"
        assert cfg.case == "sw_vortex"
        assert cfg.nx == 12 and cfg.degree == 2
        assert cfg.cfl == pytest.approx(0.3)
        assert cfg.relaxation == "conservative"

    def test_round_trip_identity(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text(CONFIG_TEXT)
        cfg = io_cli.read_config(path)
        out = tmp_path / "copy.ini"
        io_cli.write_config(out, cfg)
        again = io_cli.read_config(out)
        assert again == cfg

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[pde]\nsystem = swe\nviscosity = 3\n[scheme]\ncase = sw_vortex\n")
        with pytest.raises(ConfigError):
            io_cli.read_config(path)

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[pde]\nsystem = swe\n[limiter]\nkind = minmod\n")
        with pytest.raises(ConfigError):
            io_cli.read_config(path)

    def test_unparseable_value_names_field(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[scheme]\ncase = sw_vortex\ndegree = two\n")
        with pytest.raises(ConfigError) as err:
            io_cli.read_config(path)
        assert "degree" in str(err.value)

    def test_pde_or_case_required(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[mesh]\nnx = 8\n")
        with pytest.raises(ConfigError):
            io_cli.read_config(path)


class TestDiagCsv:
    def test_values_round_trip_bitwise(self, tmp_path):
        d = Simulation(RunConfig(case="traveling_bump", degree=1, nx=6,
                                 t_final=0.05)).run()
        path = tmp_path / "diag.csv"
        io_cli.write_diag_csv(path, d.rows)
        text = path.read_text().splitlines()
        assert text[0] == ",".join(DIAG_COLUMNS)
        for row, line in zip(d.rows, text[1:]):
            parts = line.split(",")
            for val, tok in zip(row, parts):
                if isinstance(val, (int, np.integer)):
                    assert int(tok) == int(val)
                else:
                    assert float(tok) == float(val)


class TestVtk:
    def test_header_and_counts(self, tmp_path):
        sim = Simulation(RunConfig(case="sw_vortex", degree=2, nx=4,
                                   t_final=0.0))
        st = DGState.constant(sim.ops, [1.0, 0.5, 0.0])
        path = tmp_path / "out.vtk"
        io_cli.write_vtk(path, sim.ops, sim.pde, st)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# vtk DataFile Version")
        assert "ASCII" in lines[2]
        cells_line = next(ln for ln in lines if ln.startswith("CELLS"))
        ncell = int(cells_line.split()[1])
        assert ncell == sim.ops.mesh.num_cells * sim.ops.N ** 2

    def test_constant_state_constant_scalars(self, tmp_path):
        sim = Simulation(RunConfig(case="traveling_bump", degree=2, nx=3,
                                   t_final=0.0))
        st = DGState.constant(sim.ops, [0.7])
        path = tmp_path / "c.vtk"
        io_cli.write_vtk(path, sim.ops, sim.pde, st)
        lines = path.read_text().splitlines()
        i = lines.index("SCALARS u double")
        npts  = int(next(ln for ln in lines if ln.startswith("POINT_DATA")).split()[1])
        vals = [float(v) for v in lines[i + 2: i + 2 + npts]]
        assert all(v == 0.7 for v in vals)


class TestCli:
    def test_run_subcommand_writes_monotone_diag(self, tmp_path):
        out = tmp_path / "results"
        code = io_cli.main(["run", "--case", "traveling_bump", "--degree", "1",
                            "--nx", "6", "--tf", "0.03", "--out", str(out),
                            "--relaxation", "conservative"])
        assert code == 0
        diag = (out / "diag.csv").read_text().splitlines()
        t_idx = DIAG_COLUMNS.index("t")
        ts = [float(ln.split(",")[t_idx]) for ln in diag[1:]]
        assert all(b > a for a, b in zip(ts, ts[1:]))

    def test_relaxation_off_gamma_column(self, tmp_path):
        outs = {}
        for mode in ("off", "conservative"):
            out = tmp_path / mode
            io_cli.main(["run", "--case", "traveling_bump", "--degree", "1",
                         "--nx", "6", "--tf", "0.03", "--out", str(out),
                         "--relaxation", mode])
            g_idx = DIAG_COLUMNS.index("gamma")
            lines = (out / "diag.csv").read_text().splitlines()[2:]
            outs[mode] = [float(ln.split(",")[g_idx]) for ln in lines]
        assert all(g == 1.0 for g in outs["off"])
        assert any(g != 1.0 for g in outs["conservative"])

    def test_malformed_config_exit_2(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[mesh]\nnx = 8\n")
        code = io_cli.main(["run", "--config", str(bad),
                            "--out", str(tmp_path / "o")])
        assert code == 2

    def test_list_cases(self, capsys):
        assert io_cli.main(["list-cases"]) == 0
        out = capsys.readouterr().out
        assert "traveling_bump" in out and "problem_123" in out

    def test_convergence_single_mesh_empty_order(self, tmp_path, capsys):
        out = tmp_path / "conv"
        code = io_cli.main(["convergence", "--case", "traveling_bump",
                            "--degree", "1", "--meshes", "6", "--tf", "0.02",
                            "--out", str(out)])
        assert code == 0
        csv = (out / "convergence_traveling_bump_P1.csv").read_text().splitlines()
        assert csv[0] == "h,error,order"
        assert csv[1].endswith(",")  # no order on the first mesh

    def test_convergence_table_orders(self, tmp_path):
        out = tmp_path / "conv"
        code = io_cli.main(["convergence", "--case", "traveling_bump",
                            "--degree", "1", "--meshes", "6,12",
                            "--tf", "0.02", "--out", str(out)])
        assert code == 0
        lines = (out / "convergence_traveling_bump_P1.csv").read_text().splitlines()
        assert len(lines) == 3
        order = float(lines[2].split(",")[2])
        assert 1.0 < order < 4.0

    def test_vtk_emission(self, tmp_path):
        out = tmp_path / "o"
        io_cli.main(["run", "--case", "traveling_bump", "--degree", "1",
                     "--nx", "4", "--tf", "0.02", "--out", str(out),
                     "--vtk-every", "2"])
        assert (out / "solution_final.vtk").exists()
