"""Command-line front end: ``llab <subcommand> [--config FILE] [--set key=value ...]``.

Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 I/O error.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np

from . import _kernels
from .config import EXPERIMENTS, config_hash, load_config, physical_config
from .counting import CountingCurve, write_curve_csv, write_curves_csv
from .errors import FieldIOError, LlabError, NumericalError, ValidationError
from .experiments import (curves_table, figure1_data, grid_from_config, mu_grid_from_config,
                          potential_from_config)
from .fieldio import save_field, save_landscape
from .grid import partition
from .landscape import local_minima, solve_landscape
from .lawcheck import check_doubling, moser_harnack_probe, run_lawcheck
from .operator import DiscreteOperator, dump_matrix, eigen_dense
from .potential import distribution_from_dict
from .stochastic import EnsembleConfig, expectation_curves

log = logging.getLogger("llab")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def apply_thread_cap():
    cap = os.environ.get("LLAB_THREADS")
    if not cap:
        return
    try:
        n = int(cap)
    except ValueError:
        raise ValidationError(f"LLAB_THREADS must be an integer, got {cap!r}") from None
    _kernels.set_threads(n)
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(n)
    except ImportError:
        pass


class Run:
    """One experiment writing into its own output directory."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.hash = config_hash(cfg)
        self.out = cfg["output_dir"]
        os.makedirs(self.out, exist_ok=True)
        self.grid = grid_from_config(cfg)
        self.written = []

    def path(self, name):
        p = os.path.join(self.out, name)
        self.written.append(p)
        return p

    def write_json(self, name, obj):
        obj = dict(obj, config_sha256=self.hash)
        with open(self.path(name), "w") as fh:
            fh.write(json.dumps(obj, sort_keys=True, indent=1) + "\n")

    def write_echo(self):
        with open(self.path("config_echo.json"), "w") as fh:
            fh.write(json.dumps({"config": physical_config(self.cfg), "config_sha256": self.hash},
                                sort_keys=True, indent=1) + "\n")

    def potential(self):
        V = potential_from_config(self.cfg, self.grid)
        prov = dict(V.provenance, config_sha256=self.hash)
        save_field(self.path("potential.fld"), type(V)(V.grid, V.values, V.omegas, prov))
        return V

    def landscape(self, V):
        s = self.cfg["solver"]
        op = DiscreteOperator(self.grid, V)
        land = solve_landscape(op, tolerance=s["tolerance"], max_iterations=s["max_iterations"],
                               preconditioner=s["preconditioner"])
        land.provenance["config_sha256"] = self.hash
        save_landscape(self.path("landscape.fld"), land, potential_checksum=V.checksum())
        return op, land

    def spectrum(self, op):
        return eigen_dense(op, self.cfg["spectrum"]["dense_dof_limit"])


def cmd_gen_potential(run):
    V = run.potential()
    run.write_json("potential.json", {"sha256": V.checksum(), "min": float(V.values.min()),
                                      "max": float(V.values.max()), "provenance": V.provenance})


def cmd_landscape(run):
    V = run.potential()
    _, land = run.landscape(V)
    run.write_json("landscape.json", {
        "min_u": float(land.u.min()), "max_u": float(land.u.max()),
        "residual_norm": land.residual_norm, "iterations": land.iterations,
        "minima_count": int(local_minima(land.W).size), "potential_sha256": V.checksum()})


def cmd_spectrum(run, dump=False):
    V = run.potential()
    op = DiscreteOperator(run.grid, V)
    spec = run.spectrum(op)
    write_curves_csv(run.path("eigenvalues.csv"), np.arange(spec.dof),
                     {"lambda": spec.eigenvalues}, run.hash)
    run.write_json("spectrum.json", {"dof": spec.dof, "method": spec.method,
                                     "lambda_min": float(spec.eigenvalues[0]),
                                     "lambda_max": float(spec.eigenvalues[-1]),
                                     "trace": float(spec.eigenvalues.sum())})
    if dump:
        dump_matrix(op, run.path("matrix.coo"))


def cmd_curves(run):
    V = run.potential()
    op, land = run.landscape(V)
    spec = run.spectrum(op)
    mu = mu_grid_from_config(run.cfg, run.grid)
    write_curves_csv(run.path("curves.csv"), mu, curves_table(run.grid, V, land, spec, mu), run.hash)


def cmd_lawcheck(run):
    V = run.potential()
    op, land = run.landscape(V)
    spec = run.spectrum(op)
    mu = mu_grid_from_config(run.cfg, run.grid)
    table = curves_table(run.grid, V, land, spec, mu)
    write_curves_csv(run.path("curves.csv"), mu, table, run.hash)
    ids = CountingCurve(mu, table["N"], "IDOS")
    c = run.cfg["constants"]
    report = run_lawcheck(ids, land, spec, alpha=c["alpha"], C1=c["C1"], C2=c["C2"], C3=c["C3"],
                          C4=c["C4"], s_values=tuple(run.cfg["doubling"]["s_values"]),
                          minima_count=min(10, spec.dof, local_minima(land.W).size),
                          provenance={"potential_sha256": V.checksum(),
                                      "solver_tolerance": run.cfg["solver"]["tolerance"],
                                      "config_sha256": run.hash})
    run.write_json("lawreport.json", report.to_dict())
    with open(run.path("lawreport.txt"), "w") as fh:
        fh.write(f"# config_sha256={run.hash}\n")
        fh.write(report.summary())


def cmd_doubling(run):
    V = run.potential()
    _, land = run.landscape(V)
    dbl = check_doubling(land, run.cfg["doubling"]["s_values"])
    part = partition(run.grid, 1.0)
    mh = moser_harnack_probe(land, part)
    run.write_json("doubling.json", {"C_D_hat": dbl.C_D_hat,
                                     "by_s": {str(k): v for k, v in sorted(dbl.per_s.items())},
                                     "C_H_hat": mh.C_H_hat, "harnack_mu": 1.0})


def cmd_ensemble(run):
    cfg = run.cfg
    spec = distribution_from_dict(cfg["potential"]["distribution"])
    mu = mu_grid_from_config(cfg, run.grid)
    ec = EnsembleConfig(spec, run.grid.dim, run.grid.side_length_R0, run.grid.points_per_unit_n,
                        int(cfg["ensemble"]["realizations"]), int(cfg["ensemble"]["base_seed"]),
                        mu, cfg["solver"]["tolerance"], cfg["spectrum"]["backend"])
    res = expectation_curves(ec)
    run.write_json("ensemble.json", res.report(ec))
    write_curve_csv(run.path("ensemble_N.csv"), res.ids.as_counting_curve(), run.hash)
    write_curve_csv(run.path("ensemble_Nu.csv"), res.landscape.as_counting_curve(), run.hash)


def cmd_figure1(run):
    V = run.potential()
    op, land = run.landscape(V)
    spec = run.spectrum(op)
    f = run.cfg["figure1"]
    fig = figure1_data(run.grid, V, land, spec, int(f["points"]), float(f["state_fraction"]))
    write_curves_csv(run.path("figure1.csv"), fig.mu, {"N": fig.N, "N_V": fig.N_V, "N_W": fig.N_W},
                     run.hash)
    run.write_json("figure1.json", {"sup_V": fig.sup_V, "sup_W": fig.sup_W,
                                    "landscape_closer": fig.landscape_closer,
                                    "low_windows": fig.low_windows})


COMMANDS = {
    "gen-potential": cmd_gen_potential,
    "landscape": cmd_landscape,
    "spectrum": cmd_spectrum,
    "curves": cmd_curves,
    "lawcheck": cmd_lawcheck,
    "doubling": cmd_doubling,
    "ensemble": cmd_ensemble,
    "figure1": cmd_figure1,
}


def run(cfg, dump_matrix=False):
    """Execute a validated config; returns the exit status."""
    r = Run(cfg)
    r.write_echo()
    cmd = COMMANDS[cfg["experiment"]]
    status = cmd(r, dump_matrix) if cmd is cmd_spectrum else cmd(r)
    return status or EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="llab", description="Localization landscape laboratory")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field, e.g. grid.R0=128 (repeatable)")
        sp.add_argument("--out", help="output directory (same as --set output_dir=...)")
        sp.add_argument("--seed", type=int, help="potential seed")
        if name == "spectrum":
            sp.add_argument("--dump-matrix", action="store_true",
                            help="also write the assembled matrix as row col value lines")
    return p


def _error(kind, exc, code):
    sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__,
                                 "message": str(exc)}) + "\n")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = list(args.set)
    if args.out:
        overrides.append(f"output_dir={json.dumps(args.out)}")
    if args.seed is not None:
        overrides.append(f"potential.seed={args.seed}")
    try:
        apply_thread_cap()
        cfg = load_config(args.config, args.command, overrides)
    except (ValidationError, KeyError, TypeError) as exc:
        return _error("validation", exc, EXIT_VALIDATION)
    except OSError as exc:
        return _error("io", exc, EXIT_IO)
    try:
        return run(cfg, getattr(args, "dump_matrix", False))
    except ValidationError as exc:
        return _error("validation", exc, EXIT_VALIDATION)
    except NumericalError as exc:
        return _error("numerical", exc, EXIT_NUMERICAL)
    except (FieldIOError, OSError) as exc:
        return _error("io", exc, EXIT_IO)
    except LlabError as exc:
        return _error("error", exc, EXIT_VALIDATION)


if __name__ == "__main__":
    sys.exit(main())
