"""Composite experiments shared by the command line and the acceptance suite."""
from dataclasses import dataclass

import numpy as np

from .counting import LandscapeCounter, geometric_mu_grid, ids_curve, weyl_predictor
from .fieldio import load_field
from .grid import build_grid
from .landscape import solve_landscape
from .operator import DiscreteOperator, eigen_dense
from .potential import (anderson_realization, constant_potential, distribution_from_dict,
                        smooth_periodic_potential)


def grid_from_config(cfg):
    g = cfg["grid"]
    return build_grid(g["dim"], g["R0"], g["n"])


def potential_from_config(cfg, grid=None):
    grid = grid or grid_from_config(cfg)
    pot = cfg["potential"]
    src = pot["source"]
    if src == "file":
        field = load_field(pot["path"])
        if field.grid != grid:
            from .errors import GridMismatch
            raise GridMismatch(f"{pot['path']}: grid {field.grid.describe()} != config {grid.describe()}")
        return field
    if src == "preset":
        if pot["preset"] == "constant":
            return constant_potential(grid, float(pot.get("c", 1.0)))
        return smooth_periodic_potential(grid, float(pot.get("amplitude", 1.0)))
    spec = distribution_from_dict(pot["distribution"])
    return anderson_realization(grid, spec, int(pot.get("seed", 0)), int(pot.get("realization", 0)))


def mu_grid_from_config(cfg, grid):
    m = cfg["mu_grid"]
    if m.get("values"):
        return np.asarray(sorted(float(x) for x in m["values"]))
    lo = m.get("min")
    lo = 1.0 / grid.side_length_R0 ** 2 if lo is None else float(lo)
    return geometric_mu_grid(lo, float(m["max"]), int(m.get("per_decade", 64)))


def curves_table(grid, potential, landscape, spectrum, mu):
    """N, N_u, N_V, N_W per unit volume on ``mu``."""
    counter = LandscapeCounter(landscape)
    return {
        "N": ids_curve(spectrum, mu, grid.side_length_R0, grid.dim).values,
        "N_u": np.array([counter(m) for m in mu]),
        "N_V": weyl_predictor(potential, mu, grid),
        "N_W": weyl_predictor(landscape.W, mu, grid),
    }


@dataclass
class Figure1:
    mu: np.ndarray
    N: np.ndarray
    N_V: np.ndarray
    N_W: np.ndarray
    sup_V: float
    sup_W: float
    low_windows: dict

    @property
    def landscape_closer(self):
        return self.sup_W < self.sup_V


def figure1_data(grid, potential, landscape, spectrum, points=2000, state_fraction=0.5):
    """Unnormalized N, N_V, N_W on [0, mu_top], mu_top the eigenvalue at ``state_fraction``."""
    lam = spectrum.eigenvalues
    top = float(lam[int(np.ceil(state_fraction * lam.size)) - 1])
    mu = np.linspace(0.0, top, points)
    vol = grid.volume
    N = np.searchsorted(lam, mu + spectrum.atol, side="right").astype(np.float64)
    NV = weyl_predictor(potential, mu, grid) * vol
    NW = weyl_predictor(landscape.W, mu, grid) * vol
    low = {}
    for frac in (0.02, 0.05, 0.1):
        k = mu <= float(lam[int(np.ceil(frac * lam.size)) - 1])
        low[str(frac)] = {"sup_V": float(np.abs(NV[k] - N[k]).max()),
                          "sup_W": float(np.abs(NW[k] - N[k]).max())}
    return Figure1(mu, N, NV, NW, float(np.abs(NV - N).max()), float(np.abs(NW - N).max()), low)


def solve_all(grid, potential, tolerance=1e-10, dense_dof_limit=4096):
    op = DiscreteOperator(grid, potential)
    land = solve_landscape(op, tolerance=tolerance)
    spec = eigen_dense(op, dense_dof_limit)
    return op, land, spec
