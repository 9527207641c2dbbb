"""Config files, CSV/VTK emission and the command line interface.

Config format is INI (sections [pde], [mesh], [scheme], [relaxation],
[output]); unknown keys or sections are rejected with the offending name.
Diagnostics CSV carries full double precision (17 significant digits) so
values round-trip bitwise.
"""

import argparse
import configparser
import os
import sys

import numpy as np

from . import cases as cases_mod
from .driver import DIAG_COLUMNS, RunConfig, Simulation
from .errors import ConfigError, RunAbortError

_SCHEMA = {
    "pde": {"system": str, "a1": float, "a2": float, "g": float, "gamma_gas": float},
    "mesh": {"nx": int, "ny": int, "file": str},
    "scheme": {"case": str, "degree": int, "cfl": float, "t_final": float,
               "correction": bool, "use_diffusive_flux": bool,
               "picard_max_iter": int, "picard_tol": float,
               "picard_strict": bool, "volume_degree": int,
               "face_degree": int, "stages": int, "max_retries": int},
    "relaxation": {"mode": str, "gamma_solver": str, "gamma_tol": float},
    "output": {"dir": str, "every": int, "reproducible": bool},
}

_BOOLS = {"true": True, "false": False, "1": True, "0": False,
          "yes": True, "no": False, "on": True, "off": False}


def _convert(section, key, raw):
    kind = _SCHEMA[section][key]
    try:
        if kind is bool:
            return _BOOLS[raw.strip().lower()]
        return kind(raw)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def read_config(path):
    """Parse an INI run configuration into a RunConfig."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            values[(section, key)] = _convert(section, key, raw)

    if ("pde", "system") not in values and ("scheme", "case") not in values:
        raise ConfigError(f"{path}: needs [pde] system or [scheme] case")

    kwargs = {}
    pde_params = {}
    for (section, key), val in values.items():
        if section == "pde":
            if key == "system":
                kwargs["pde"] = val
            else:
                pde_params[key] = val
        elif section == "mesh":
            kwargs[{"file": "mesh_file"}.get(key, key)] = val
        elif section == "scheme":
            kwargs[key] = val
        elif section == "relaxation":
            kwargs[{"mode": "relaxation"}.get(key, key)] = val
        elif section == "output":
            kwargs[{"dir": "output_dir", "every": "output_every"}.get(key, key)] = val
    if pde_params:
        kwargs["pde_params"] = pde_params
    try:
        return RunConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def write_config(path, config):
    """Inverse of read_config for the fields the schema covers."""
    parser = configparser.ConfigParser()
    parser["pde"] = {}
    if config.pde:
        parser["pde"]["system"] = config.pde
    for key, val in config.pde_params.items():
        parser["pde"][key] = repr(val)
    parser["mesh"] = {"nx": str(config.nx)}
    if config.ny is not None:
        parser["mesh"]["ny"] = str(config.ny)
    if config.mesh_file:
        parser["mesh"]["file"] = config.mesh_file
    parser["scheme"] = {
        "case": config.case or "",
        "degree": str(config.degree),
        "cfl": repr(config.cfl),
        "correction": str(config.correction).lower(),
        "use_diffusive_flux": str(config.use_diffusive_flux).lower(),
        "picard_tol": repr(config.picard_tol),
        "picard_strict": str(config.picard_strict).lower(),
    }
    if config.t_final is not None:
        parser["scheme"]["t_final"] = repr(config.t_final)
    if config.picard_max_iter is not None:
        parser["scheme"]["picard_max_iter"] = str(config.picard_max_iter)
    parser["scheme"]["max_retries"] = str(config.max_retries)
    for key in ("volume_degree", "face_degree", "stages"):
        val = getattr(config, key)
        if val is not None:
            parser["scheme"][key] = str(val)
    parser["relaxation"] = {"gamma_solver": config.gamma_solver}
    if config.relaxation:
        parser["relaxation"]["mode"] = config.relaxation
    if config.gamma_tol is not None:
        parser["relaxation"]["gamma_tol"] = repr(config.gamma_tol)
    parser["output"] = {"every": str(config.output_every),
                        "reproducible": str(config.reproducible).lower()}
    if config.output_dir:
        parser["output"]["dir"] = config.output_dir
    with open(path, "w") as fh:
        parser.write(fh)


def write_diag_csv(path, rows):
    with open(path, "w") as fh:
        fh.write(",".join(DIAG_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_convergence_csv(path, table):
    with open(path, "w") as fh:
        fh.write("h,error,order\n")
        for h, err, order in table:
            o = "" if order is None else f"{order:.17g}"
            fh.write(f"{h:.17g},{err:.17g},{o}\n")


def format_convergence_table(label, table):
    lines = [f"{label}", f"{'h':>12} {'L2 error':>14} {'order':>7}"]
    for h, err, order in table:
        o = "   -  " if order is None else f"{order:6.2f}"
        lines.append(f"{h:12.4e} {err:14.6e} {o:>7}")
    return "\n".join(lines)


def write_vtk(path, ops, pde, state, subdivisions=None):
    """Legacy-ASCII unstructured grid with per-cell subsampled point data.

    Each triangle is split into ``subdivisions^2`` subtriangles whose vertex
    values come from the cell's own polynomial (DG fields are discontinuous,
    so points are duplicated per cell). Writes the conserved variables and
    the pointwise entropy.
    """
    mesh = ops.mesh
    n = subdivisions if subdivisions is not None else max(ops.N, 1)
    # barycentric lattice of the subdivision
    lattice = [(i, j) for i in range(n + 1) for j in range(n + 1 - i)]
    lid = {ij: k for k, ij in enumerate(lattice)}
    tris = []
    for i, j in lattice:
        if i + j < n:
            tris.append((lid[(i, j)], lid[(i + 1, j)], lid[(i, j + 1)]))
        if i + j < n - 1:
            tris.append((lid[(i + 1, j)], lid[(i + 1, j + 1)], lid[(i, j + 1)]))
    ref = np.array([(i / n, j / n) for i, j in lattice])
    tris = np.array(tris, dtype=np.int64)

    verts = mesh.cell_vertices()
    v0 = verts[:, 0]
    e1 = verts[:, 1] - verts[:, 0]
    e2 = verts[:, 2] - verts[:, 0]
    pts = (v0[:, None, :] + ref[None, :, 0, None] * e1[:, None, :]
           + ref[None, :, 1, None] * e2[:, None, :])          # (C, L, 2)
    from .basis_quadrature import eval_spatial_table
    phi, _ = eval_spatial_table(ops.basis, pts, mesh.barycenter[:, None, :],
                                mesh.circumradius[:, None])
    vals = np.einsum("cpk,ckm->cpm", phi, state.coeffs)        # (C, L, m)
    eta = pde.entropy(vals)

    C = mesh.num_cells
    L = ref.shape[0]
    npts = C * L
    ncell = C * tris.shape[0]
    try:
        fh = open(path, "w")
    except OSError as exc:
        raise OSError(f"cannot write VTK file {path}: {exc}") from exc
    with fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"entroader snapshot t={state.time!r}\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {npts} double\n")
        flat = pts.reshape(-1, 2)
        for x, y in flat:
            fh.write(f"{x:.17g} {y:.17g} 0\n")
        fh.write(f"\nCELLS {ncell} {4 * ncell}\n")
        for c in range(C):
            base = c * L
            for a, b, d in tris:
                fh.write(f"3 {base + a} {base + b} {base + d}\n")
        fh.write(f"\nCELL_TYPES {ncell}\n")
        fh.write("\n".join(["5"] * ncell) + "\n")
        fh.write(f"\nPOINT_DATA {npts}\n")
        names = {1: ["u"], 3: ["h", "hu", "hv"],
                 4: ["rho", "rho_u", "rho_v", "E"]}[pde.m]
        for k, name in enumerate(names):
            fh.write(f"SCALARS {name} double\nLOOKUP_TABLE default\n")
            fh.write("\n".join(f"{v:.17g}" for v in vals[..., k].ravel()) + "\n")
        fh.write("SCALARS entropy double\nLOOKUP_TABLE default\n")
        fh.write("\n".join(f"{v:.17g}" for v in eta.ravel()) + "\n")


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def _limit_threads(config):
    count = os.environ.get("ENTRO_ADER_THREADS")
    if config.reproducible:
        count = "1"
    if count:
        try:
            import threadpoolctl
            threadpoolctl.threadpool_limits(int(count))
        except ImportError:
            for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                        "MKL_NUM_THREADS"):
                os.environ[var] = str(count)


def _add_override_args(p):
    p.add_argument("--config", help="INI config file (sections pde/mesh/"
                                    "scheme/relaxation/output)")
    p.add_argument("--case", help="test case name (default traveling_bump)")
    p.add_argument("--degree", type=int,
                   help="polynomial degree N in {1,2,3} (default 2)")
    p.add_argument("--nx", type=int, help="cells per x direction (default 16)")
    p.add_argument("--ny", type=int,
                   help="cells per y direction (default: nx scaled by the "
                        "case aspect)")
    p.add_argument("--tf", type=float,
                   help="final time (default: the case's own)")
    p.add_argument("--cfl", type=float, help="CFL number in (0,1] (default 0.4)")
    p.add_argument("--relaxation", choices=["off", "conservative", "dissipative"],
                   help="relaxation mode (default: the case's, usually "
                        "conservative)")
    p.add_argument("--no-correction", action="store_true",
                   help="disable the entropy correction term (default on)")
    p.add_argument("--gamma-solver", choices=["newton", "quadratic"],
                   help="gamma root solver (default newton)")
    p.add_argument("--out", default=".", help="output directory (default .)")
    p.add_argument("--vtk-every", type=int,
                   help="VTK snapshot cadence in steps (default 0 = never)")
    p.add_argument("--reproducible", action="store_true",
                   help="force single-threaded deterministic reductions")


def _config_from_args(args):
    if args.config:
        config = read_config(args.config)
    else:
        config = RunConfig()
    updates = {}
    if args.case:
        updates["case"] = args.case
    if args.degree is not None:
        updates["degree"] = args.degree
    if args.nx is not None:
        updates["nx"] = args.nx
    if args.ny is not None:
        updates["ny"] = args.ny
    if args.tf is not None:
        updates["t_final"] = args.tf
    if args.cfl is not None:
        updates["cfl"] = args.cfl
    if args.relaxation is not None:
        updates["relaxation"] = args.relaxation
    if args.no_correction:
        updates["correction"] = False
    if args.gamma_solver:
        updates["gamma_solver"] = args.gamma_solver
    if args.vtk_every is not None:
        updates["output_every"] = args.vtk_every
    if args.reproducible:
        updates["reproducible"] = True
    updates["output_dir"] = args.out
    fields = {**config.__dict__, **updates}
    return RunConfig(**fields)


def cmd_run(args):
    config = _config_from_args(args)
    _limit_threads(config)
    os.makedirs(config.output_dir, exist_ok=True)
    sim = Simulation(config)
    try:
        diags = sim.run()
    except RunAbortError as exc:
        if exc.diagnostics is not None:
            write_diag_csv(os.path.join(config.output_dir, "diag.csv"),
                           exc.diagnostics.rows)
        print(f"run aborted: {exc}", file=sys.stderr)
        if "relaxation root" in str(exc):
            print("hint: under-resolved fields often have no conservative "
                  "relaxation root; try --relaxation dissipative or a finer "
                  "mesh", file=sys.stderr)
        return 1
    write_diag_csv(os.path.join(config.output_dir, "diag.csv"), diags.rows)
    for idx, snap in getattr(diags, "snapshots", []):
        write_vtk(os.path.join(config.output_dir, f"solution_{idx:06d}.vtk"),
                  sim.ops, sim.pde, snap)
    if config.output_every:
        write_vtk(os.path.join(config.output_dir, "solution_final.vtk"),
                  sim.ops, sim.pde, diags.state)
    print(f"finished at t={diags.final_time:.12g} after {len(diags.rows) - 1} steps")
    if diags.l2_errors is not None:
        errs = ", ".join(f"{e:.6e}" for e in diags.l2_errors)
        print(f"L2 errors: {errs}")
        with open(os.path.join(config.output_dir, "errors.csv"), "w") as fh:
            fh.write("variable,L2_error\n")
            for k, e in enumerate(diags.l2_errors):
                fh.write(f"{k},{e:.17g}\n")
    return 0


def cmd_convergence(args):
    config = _config_from_args(args)
    _limit_threads(config)
    os.makedirs(config.output_dir, exist_ok=True)
    meshes = [int(tok) for tok in args.meshes.split(",")]
    table = []
    errors, sizes = [], []
    for nx in meshes:
        cfg = RunConfig(**{**config.__dict__, "nx": nx, "ny": None})
        diags = Simulation(cfg).run()
        if diags.l2_errors is None:
            print("case has no exact solution; cannot run a convergence study",
                  file=sys.stderr)
            return 1
        errors.append(float(diags.l2_errors[0]))
        sizes.append(diags.h_bar)
    orders = cases_mod.observed_order(errors, sizes)
    for k, (h, e) in enumerate(zip(sizes, errors)):
        table.append((h, e, None if k == 0 else float(orders[k - 1])))
    label = f"{config.case} P{config.degree}"
    print(format_convergence_table(label, table))
    write_convergence_csv(
        os.path.join(config.output_dir,
                     f"convergence_{config.case}_P{config.degree}.csv"), table)
    return 0


def cmd_list_cases(_args):
    for name in sorted(cases_mod.CASES):
        case = cases_mod.get_case(name)
        print(f"{name:24s} {case.pde_name:10s} tf={case.t_final:<6g} "
              f"{case.description}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="entroader",
        description="Entropy conservative/dissipative ADER-DG solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one configuration")
    _add_override_args(p_run)
    p_run.set_defaults(func=cmd_run)

    p_conv = sub.add_parser("convergence", help="mesh-refinement study")
    _add_override_args(p_conv)
    p_conv.add_argument("--meshes", default="16,24,32",
                        help="comma-separated nx list")
    p_conv.set_defaults(func=cmd_convergence)

    p_list = sub.add_parser("list-cases", help="available test cases")
    p_list.set_defaults(func=cmd_list_cases)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
