"""Periodic grid geometry and the cube partitions used for landscape counting."""
from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np

from . import _kernels
from .errors import (CubeUnresolvable, GridMismatch, InvalidDimension,
                     InvalidResolution, ScaleExceedsDomain)

# R0*sqrt(mu) closer than this (relative) to an integer is treated as that integer
_SNAP_RTOL = 1e-9


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on the torus [0, R0)^dim with ``n`` points per unit length."""

    dim: int
    side_length_R0: int
    points_per_unit_n: int

    @property
    def R0(self):
        return self.side_length_R0

    @property
    def n(self):
        return self.points_per_unit_n

    @property
    def spacing_h(self):
        return 1.0 / self.points_per_unit_n

    h = spacing_h

    @property
    def points_per_axis(self):
        return self.side_length_R0 * self.points_per_unit_n

    @property
    def shape(self):
        return (self.points_per_axis,) * self.dim

    @property
    def total_points(self):
        return self.points_per_axis ** self.dim

    @property
    def cell_volume(self):
        return self.spacing_h ** self.dim

    @property
    def volume(self):
        return float(self.side_length_R0 ** self.dim)

    def ravel(self, coords):
        """Lattice coordinates (wrapped periodically) to linear row-major index."""
        coords = np.mod(np.asarray(coords, dtype=np.int64), self.points_per_axis)
        return np.ravel_multi_index(tuple(np.moveaxis(coords, -1, 0)), self.shape)

    def unravel(self, index):
        return np.stack(np.unravel_index(index, self.shape), axis=-1)

    def neighbors(self, index):
        """Linear indices of the 2*dim periodic neighbours of ``index``."""
        c = self.unravel(index)
        out = []
        for axis in range(self.dim):
            for step in (1, -1):
                cc = np.array(c, copy=True)
                cc[axis] += step
                out.append(int(self.ravel(cc)))
        return out

    def coordinates(self):
        """Per-axis physical coordinates ``i*h``, as an open mesh."""
        axis = np.arange(self.points_per_axis) * self.spacing_h
        return np.meshgrid(*([axis] * self.dim), indexing="ij", sparse=True)

    def describe(self):
        return {"dim": self.dim, "R0": self.side_length_R0, "n": self.points_per_unit_n}

    def check_field(self, values):
        values = np.asarray(values)
        if values.shape != self.shape:
            if values.ndim == 1 and values.size == self.total_points:
                return values.reshape(self.shape)
            raise GridMismatch(f"field shape {values.shape} does not match grid {self.shape}")
        return values


def build_grid(dim, side_length_R0, points_per_unit_n):
    if dim not in (1, 2, 3) or isinstance(dim, bool):
        raise InvalidDimension(f"dim must be 1, 2 or 3, got {dim!r}")
    if int(side_length_R0) != side_length_R0 or side_length_R0 < 1:
        raise InvalidResolution(f"R0 must be a positive integer, got {side_length_R0!r}")
    if int(points_per_unit_n) != points_per_unit_n or points_per_unit_n < 2:
        raise InvalidResolution(f"n must be an integer >= 2, got {points_per_unit_n!r}")
    return TorusGrid(int(dim), int(side_length_R0), int(points_per_unit_n))


def _block_starts(npts, m):
    # larger blocks first
    base, rem = divmod(npts, m)
    sizes = np.full(m, base, dtype=np.int64)
    sizes[:rem] += 1
    return np.concatenate(([0], np.cumsum(sizes)))


def cubes_per_side(R0, mu):
    """Return ``(m, kappa)`` for the counting scale at energy ``mu``."""
    if not mu > 0:
        raise ScaleExceedsDomain(f"mu must be positive, got {mu!r}")
    x = R0 * math.sqrt(mu)
    r = round(x)
    if r >= 1 and abs(x - r) <= _SNAP_RTOL * x:
        return int(r), 1.0
    m = math.floor(x)
    if m < 1:
        raise ScaleExceedsDomain(f"R0*sqrt(mu) = {x:.6g} < 1: cube larger than the domain")
    return int(m), x / m


def is_admissible(grid, mu):
    """True when ``partition(grid, mu)`` succeeds."""
    try:
        m, _ = cubes_per_side(grid.side_length_R0, mu)
    except ScaleExceedsDomain:
        return False
    return m <= grid.points_per_axis


@dataclass(frozen=True)
class CubePartition:
    grid: TorusGrid
    mu: float
    cubes_per_side_m: int
    kappa: float
    offset: tuple

    @property
    def m(self):
        return self.cubes_per_side_m

    @property
    def nominal_side(self):
        return self.kappa / math.sqrt(self.mu)

    @property
    def cube_count(self):
        return self.cubes_per_side_m ** self.grid.dim

    @cached_property
    def block_starts(self):
        return _block_starts(self.grid.points_per_axis, self.cubes_per_side_m)

    @cached_property
    def axis_labels(self):
        """Per-axis block index of every grid coordinate (offset applied)."""
        base = np.repeat(np.arange(self.m, dtype=np.int64), np.diff(self.block_starts))
        return tuple(np.roll(base, o) for o in self.offset)

    @cached_property
    def labels(self):
        """Cube id of every grid point, shape ``grid.shape``."""
        lab = np.zeros(self.grid.shape, dtype=np.int64)
        for axis, al in enumerate(self.axis_labels):
            view = [None] * self.grid.dim
            view[axis] = slice(None)
            lab = lab * self.m + al[tuple(view)]
        return lab

    def cells(self, cube):
        return np.flatnonzero(self.labels.ravel() == cube)

    @property
    def cube_cells(self):
        flat = self.labels.ravel()
        order = np.argsort(flat, kind="stable")
        bounds = np.searchsorted(flat[order], np.arange(self.cube_count + 1))
        return [order[bounds[k]:bounds[k + 1]] for k in range(self.cube_count)]


def partition(grid, mu):
    m, kappa = cubes_per_side(grid.side_length_R0, mu)
    if m > grid.points_per_axis:
        raise CubeUnresolvable(
            f"{m} cubes per side but only {grid.points_per_axis} grid points per axis")
    return CubePartition(grid, float(mu), m, kappa, (0,) * grid.dim)


def translate_partition(part, lattice_offset):
    """Shift every cube by ``lattice_offset`` grid points, wrapping periodically."""
    off = np.broadcast_to(np.asarray(lattice_offset, dtype=np.int64), (part.grid.dim,))
    npts = part.grid.points_per_axis
    new = tuple(int((a + b) % npts) for a, b in zip(part.offset, off))
    return CubePartition(part.grid, part.mu, part.cubes_per_side_m, part.kappa, new)


def reduce_cubes(field_values, part, reduction):
    """Reduce ``field_values`` over every cube at once; sums carry the h^d weight."""
    values = part.grid.check_field(field_values)
    out = _kernels.segment_reduce(values, part.labels, part.cube_count, reduction)
    if reduction == "sum":
        out *= part.grid.cell_volume
    return out


def cube_reduce(field_values, part, cube, reduction):
    values = part.grid.check_field(field_values)
    if reduction not in ("min", "max", "sum"):
        raise ValueError(f"unknown reduction {reduction!r}")
    sel = values.ravel()[part.cells(cube)]
    if reduction == "min":
        return float(sel.min())
    if reduction == "max":
        return float(sel.max())
    return float(sel.sum() * part.grid.cell_volume)
