from llab.grid import build_grid
from llab.landscape import solve_landscape
from llab.operator import DiscreteOperator
from llab.potential import Uniform01, anderson_realization


def anderson_fixture(dim=1, R0=64, n=8, seed=7, realization=0, spec=None):
    grid = build_grid(dim, R0, n)
    V = anderson_realization(grid, spec or Uniform01(), seed, realization)
    op = DiscreteOperator(grid, V)
    return grid, V, op, solve_landscape(op)
