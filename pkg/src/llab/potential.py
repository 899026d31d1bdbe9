"""Anderson-type random potentials, amplitude laws, and simple fixtures."""
from dataclasses import dataclass, field
import hashlib
import math
import warnings

import numpy as np
from scipy.integrate import quad

from .errors import InvalidParameters, NegativeConstant, OutOfRange, SiteCountMismatch

BUMP_RADIUS = 0.1


@dataclass(frozen=True)
class BumpProfile:
    """Smooth radial bump, 1 at the origin and 0 outside ``radius``."""

    radius: float = BUMP_RADIUS

    def __call__(self, r):
        r = np.asarray(r, dtype=np.float64)
        t = (r / self.radius) ** 2
        out = np.zeros_like(t)
        inside = t < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside]))
        return out

    def stencil(self, grid):
        """Grid offsets strictly inside the support and the bump value at each."""
        reach = int(math.ceil(self.radius / grid.spacing_h))
        rng = np.arange(-reach, reach + 1)
        mesh = np.stack(np.meshgrid(*([rng] * grid.dim), indexing="ij"), axis=-1).reshape(-1, grid.dim)
        vals = self(np.linalg.norm(mesh * grid.spacing_h, axis=1))
        keep = vals > 0
        return mesh[keep], vals[keep]


# ---------------------------------------------------------------------------
# amplitude laws on [0, 1]
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bernoulli:
    """omega = 1 with probability p, else 0."""

    p: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidParameters(f"Bernoulli p must lie in [0, 1], got {self.p}")

    def cdf(self, delta):
        return np.where(delta >= 1.0, 1.0, 1.0 - self.p)

    def from_uniform(self, U):
        return (U >= 1.0 - self.p).astype(np.float64)

    def mean(self):
        return self.p

    def to_dict(self):
        return {"kind": "bernoulli", "p": self.p}


@dataclass(frozen=True)
class Uniform01:
    def cdf(self, delta):
        return np.asarray(delta, dtype=np.float64)

    def from_uniform(self, U):
        return U

    def mean(self):
        return 0.5

    def to_dict(self):
        return {"kind": "uniform"}


@dataclass(frozen=True)
class Power:
    """F(delta) = delta**beta."""

    beta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise InvalidParameters(f"Power beta must be positive, got {self.beta}")

    def cdf(self, delta):
        return np.asarray(delta, dtype=np.float64) ** self.beta

    def from_uniform(self, U):
        return U ** (1.0 / self.beta)

    def mean(self):
        return self.beta / (self.beta + 1.0)

    def to_dict(self):
        return {"kind": "power", "beta": self.beta}


@dataclass(frozen=True)
class ExpTail:
    """F(delta) = exp(-C delta**-a) below 1, with the leftover mass as an atom at 1."""

    C: float = 1.0
    a: float = 1.0

    def __post_init__(self):
        if not (self.C > 0 and self.a > 0):
            raise InvalidParameters(f"ExpTail needs C > 0 and a > 0, got C={self.C}, a={self.a}")

    def cdf(self, delta):
        delta = np.asarray(delta, dtype=np.float64)
        with np.errstate(divide="ignore"):
            tail = np.exp(-self.C * np.power(delta, -self.a, where=delta > 0,
                                              out=np.full_like(delta, np.inf)))
        return np.where(delta >= 1.0, 1.0, tail)

    def from_uniform(self, U):
        U = np.asarray(U, dtype=np.float64)
        out = np.ones_like(U)
        low = U < math.exp(-self.C)
        with np.errstate(divide="ignore"):
            out[low] = (self.C / -np.log(U[low])) ** (1.0 / self.a)
        return out

    def mean(self):
        # E[omega] = int_0^1 (1 - F)
        below, _ = quad(lambda d: math.exp(-self.C * d ** -self.a) if d > 0 else 0.0, 0.0, 1.0)
        return 1.0 - below

    def to_dict(self):
        return {"kind": "exptail", "C": self.C, "a": self.a}


_LAWS = {"bernoulli": Bernoulli, "uniform": Uniform01, "uniform01": Uniform01,
         "power": Power, "exptail": ExpTail}


def distribution_from_dict(spec):
    """Build a law from ``{"kind": ..., **params}`` or a ``"kind:p1,p2"`` string."""
    if isinstance(spec, str):
        kind, _, rest = spec.partition(":")
        args = [float(x) for x in rest.split(",") if x.strip()]
        kind = kind.strip().lower()
        if kind not in _LAWS:
            raise InvalidParameters(f"unknown distribution {kind!r}")
        return _LAWS[kind](*args)
    spec = dict(spec)
    kind = str(spec.pop("kind", "")).lower()
    if kind not in _LAWS:
        raise InvalidParameters(f"unknown distribution {kind!r}")
    try:
        return _LAWS[kind](**spec)
    except TypeError as exc:
        raise InvalidParameters(str(exc)) from None


def eval_F(spec, delta):
    """Closed-form F(delta) = P{omega <= delta} for ``0 <= delta <= 1``."""
    d = np.asarray(delta, dtype=np.float64)
    if np.any((d < 0) | (d > 1)) or np.any(np.isnan(d)):
        raise OutOfRange(f"delta must lie in [0, 1], got {delta!r}")
    out = spec.cdf(d)
    return float(out) if np.ndim(out) == 0 else out


def omega_stream(stream_seed, realization=0):
    """Counter-based generator for one realization; draw j belongs to site j."""
    ss = np.random.SeedSequence(entropy=int(stream_seed), spawn_key=(int(realization),))
    return np.random.Generator(np.random.Philox(ss))


def sample_omegas(spec, site_count, stream_seed, realization=0):
    """i.i.d. amplitudes; site j consumes exactly the j-th uniform of its stream."""
    if site_count < 0:
        raise InvalidParameters("site_count must be non-negative")
    U = omega_stream(stream_seed, realization).random(int(site_count))
    return np.asarray(spec.from_uniform(U), dtype=np.float64)


# ---------------------------------------------------------------------------
# potential fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PotentialField:
    grid: object
    values: np.ndarray
    omegas: np.ndarray = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.array(self.grid.check_field(self.values), dtype=np.float64)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.omegas is not None:
            om = np.array(self.omegas, dtype=np.float64)
            om.setflags(write=False)
            object.__setattr__(self, "omegas", om)

    def checksum(self):
        return hashlib.sha256(self.values.astype("<f8").tobytes()).hexdigest()


def constant_potential(grid, c):
    if c < 0:
        raise NegativeConstant(f"constant potential must be >= 0, got {c}")
    return PotentialField(grid, np.full(grid.shape, float(c)),
                          provenance={"preset": "constant", "c": float(c)})


def _site_lattice(grid, omegas):
    """Amplitude array on the grid: omega_j at integer sites, 0 elsewhere."""
    sites = np.zeros(grid.shape)
    om = np.asarray(omegas, dtype=np.float64).reshape((grid.side_length_R0,) * grid.dim)
    sites[(slice(None, None, grid.points_per_unit_n),) * grid.dim] = om
    return sites


def assemble_anderson(grid, omegas, bump=None, provenance=None):
    """V(x) = sum_j omega_j * bump(x - j) sampled on the grid, periodic wrap."""
    bump = bump or BumpProfile()
    omegas = np.asarray(omegas, dtype=np.float64).ravel()
    want = grid.side_length_R0 ** grid.dim
    if omegas.size != want:
        raise SiteCountMismatch(f"expected {want} amplitudes, got {omegas.size}")
    if grid.points_per_unit_n < 10:
        warnings.warn(f"n = {grid.points_per_unit_n} < 10 under-resolves the bump profile",
                      RuntimeWarning, stacklevel=2)
    sites = _site_lattice(grid, omegas)
    V = np.zeros(grid.shape)
    for off, val in zip(*bump.stencil(grid)):
        V += val * np.roll(sites, tuple(off), axis=tuple(range(grid.dim)))
    prov = {"preset": "anderson", "bump_radius": bump.radius}
    prov.update(provenance or {})
    return PotentialField(grid, V, omegas=omegas, provenance=prov)


def anderson_realization(grid, spec, seed, realization=0):
    """Sample amplitudes for one realization and assemble the field."""
    om = sample_omegas(spec, grid.side_length_R0 ** grid.dim, seed, realization)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return assemble_anderson(grid, om, provenance={
            "distribution": spec.to_dict(), "seed": int(seed), "realization": int(realization)})


def mean_potential_level(grid, spec, bump=None):
    """Spatial mean of E[V]: E[omega] times the grid integral of one bump."""
    _, vals = (bump or BumpProfile()).stencil(grid)
    return spec.mean() * grid.cell_volume * float(vals.sum())


def smooth_periodic_potential(grid, amplitude=1.0):
    """V(x) = amplitude * prod_i (1 + cos(2 pi x_i)) / 2**d, a smooth periodic fixture."""
    V = np.ones(grid.shape)
    for x in grid.coordinates():
        V = V * 0.5 * (1.0 + np.cos(2.0 * np.pi * x))
    return PotentialField(grid, amplitude * V,
                          provenance={"preset": "cosine", "amplitude": float(amplitude)})
