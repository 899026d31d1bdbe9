"""Counting curves: IDOS, landscape cube count, and phase-space (Weyl) predictors."""
from dataclasses import dataclass
import math

import numpy as np

from .errors import (CubeUnresolvable, EmptySpectrum, NoFiniteConstant,
                     ScaleExceedsDomain, ValidationError)
from .grid import partition, reduce_cubes

# unit-ball volumes omega_d
BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}
KINDS = ("IDOS", "landscape_count", "weyl_V", "weyl_W", "ensemble_mean")

FIT_RTOL = 1e-3
C_MAX = 1e3
_COUNT_EPS = 1e-12


@dataclass(frozen=True)
class CountingCurve:
    mu_grid: np.ndarray
    values: np.ndarray
    kind: str
    stderr: np.ndarray = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown curve kind {self.kind!r}")
        mu = np.asarray(self.mu_grid, dtype=np.float64)
        vals = np.asarray(self.values, dtype=np.float64)
        if mu.shape != vals.shape:
            raise ValidationError("mu_grid and values differ in length")
        object.__setattr__(self, "mu_grid", mu)
        object.__setattr__(self, "values", vals)
        if self.stderr is not None:
            object.__setattr__(self, "stderr", np.asarray(self.stderr, dtype=np.float64))

    def __call__(self, mu):
        """Right-continuous step lookup at arbitrary mu (values on the grid only)."""
        i = np.searchsorted(self.mu_grid, mu, side="right") - 1
        return np.where(i >= 0, self.values[np.clip(i, 0, None)], 0.0)


def geometric_mu_grid(mu_min, mu_max, per_decade=64):
    count = max(2, int(math.ceil(per_decade * math.log10(mu_max / mu_min))) + 1)
    return np.geomspace(mu_min, mu_max, count)


def smallest_admissible_mu(grid):
    return 1.0 / grid.side_length_R0 ** 2


def largest_resolvable_mu(grid):
    return float(grid.points_per_unit_n ** 2)


def ids_curve(spectrum, mu_grid, R0, dim=1, atol=None):
    """#{lambda <= mu} / R0^d on ``mu_grid``."""
    lam = np.asarray(spectrum.eigenvalues)
    if lam.size == 0:
        raise EmptySpectrum("spectrum has no eigenvalues")
    atol = getattr(spectrum, "atol", 0.0) if atol is None else atol
    mu = np.asarray(mu_grid, dtype=np.float64)
    counts = np.searchsorted(lam, mu + atol, side="right")
    return CountingCurve(mu, counts / float(R0) ** dim, "IDOS")


class LandscapeCounter:
    """N_u(mu): fraction per unit volume of kappa*mu^-1/2 cubes with min W <= mu."""

    def __init__(self, landscape):
        self.grid = landscape.grid
        self.W = landscape.W
        self.dim = self.grid.dim

    def count(self, mu):
        """Number of qualifying cubes (an integer)."""
        part = partition(self.grid, mu)
        wmin = reduce_cubes(self.W, part, "min")
        return int(np.count_nonzero(wmin <= mu))

    def __call__(self, mu):
        return self.count(mu) / self.grid.volume

    def admissible(self, mu):
        try:
            partition(self.grid, mu)
        except (ScaleExceedsDomain, CubeUnresolvable):
            return False
        return True

    def curve(self, mu_grid):
        mu = np.asarray(mu_grid, dtype=np.float64)
        return CountingCurve(mu, np.array([self(m) for m in mu]), "landscape_count")


def _counter(landscape):
    return landscape if callable(landscape) else LandscapeCounter(landscape)


def nonmonotone_steps(curve):
    """Rows where a curve drops as mu grows, as ``(mu_before, mu_after, drop)``.

    N_u is re-gridded at every mu, so small drops are possible; they are
    measured and reported rather than smoothed away.
    """
    mu, v = curve.mu_grid, curve.values
    idx = np.flatnonzero(np.diff(v) < 0)
    return [(float(mu[i]), float(mu[i + 1]), float(v[i] - v[i + 1])) for i in idx]


def landscape_count(landscape, mu):
    return LandscapeCounter(landscape)(mu)


def _field_values(field):
    for attr in ("W", "values"):
        if hasattr(field, attr):
            return np.asarray(getattr(field, attr))
    return np.asarray(field)


def weyl_predictor(field_W, mu, grid):
    """(2 pi)^-d omega_d (h^d / R0^d) sum_i (mu - W_i)_+^(d/2); vectorized over mu."""
    W = np.asarray(grid.check_field(_field_values(field_W)), dtype=np.float64).ravel()
    if np.any(W < 0):
        raise ValidationError("Weyl predictor needs a nonnegative field")
    d = grid.dim
    levels, counts = np.unique(W, return_counts=True)
    pref = BALL_VOLUME[d] / (2.0 * math.pi) ** d
    scale = grid.cell_volume / grid.volume
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    out = np.empty(mu_arr.shape)
    for k, m in enumerate(mu_arr):
        gap = m - levels
        pos = gap > 0
        out[k] = pref * float(np.sum(counts[pos] * gap[pos] ** (d / 2.0))) * scale
    return float(out[0]) if np.ndim(mu) == 0 else out


def weyl_curve(field_W, mu_grid, grid, kind="weyl_W"):
    mu = np.asarray(mu_grid, dtype=np.float64)
    return CountingCurve(mu, weyl_predictor(field_W, mu, grid), kind)


# ---------------------------------------------------------------------------
# constants relating N and N_u
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UpperFit:
    C: float
    excluded_mu: tuple
    checked_rows: int


def _upper_ok(N_vals, mus, counter, C):
    """(holds, excluded) for N(mu) <= N_u(C mu) over admissible rows."""
    excluded = []
    for mu, n in zip(mus, N_vals):
        try:
            nu = counter(C * mu)
        except (ScaleExceedsDomain, CubeUnresolvable):
            excluded.append(float(mu))
            continue
        if n > nu + _COUNT_EPS:
            return False, excluded
    return True, excluded


def _restrict(curve, mu_range):
    mus, vals = curve.mu_grid, curve.values
    if mu_range is not None:
        lo, hi = mu_range
        keep = (mus >= lo) & (mus <= hi)
        mus, vals = mus[keep], vals[keep]
    return mus, vals


def fit_constant_upper(curve_N, landscape, mu_range=None, C_max=C_MAX, rtol=FIT_RTOL, scan=200):
    """Smallest C in [1, C_max] with N(mu) <= N_u(C mu) on every admissible row.

    Rows where C*mu falls outside the resolvable scales are skipped and listed.
    The predicate need not be monotone in C, so a geometric scan brackets the
    first passing C before bisecting.
    """
    counter = _counter(landscape)
    mus, vals = _restrict(curve_N, mu_range)
    ok, excl = _upper_ok(vals, mus, counter, 1.0)
    if ok:
        return UpperFit(1.0, tuple(excl), len(mus) - len(excl))
    grid_C = np.geomspace(1.0, C_max, scan)
    lo = 1.0
    for C in grid_C[1:]:
        ok, excl = _upper_ok(vals, mus, counter, C)
        if ok:
            hi = C
            break
        lo = C
    else:
        raise NoFiniteConstant(f"N(mu) <= N_u(C mu) fails even at C = {C_max:g}")
    while hi / lo > 1.0 + rtol:
        mid = math.sqrt(lo * hi)
        ok_mid, excl_mid = _upper_ok(vals, mus, counter, mid)
        if ok_mid:
            hi, excl = mid, excl_mid
        else:
            lo = mid
    return UpperFit(float(hi), tuple(excl), len(mus) - len(excl))


def _clean_lower_ok(N_vals, mus, counter, C):
    excluded = []
    for mu, n in zip(mus, N_vals):
        try:
            nu = counter(C * mu)
        except (ScaleExceedsDomain, CubeUnresolvable):
            excluded.append(float(mu))
            continue
        if nu > n + _COUNT_EPS:
            return False, excluded
    return True, excluded


def fit_constant_lower_clean(curve_N, landscape, mu_range=None, C_min=1.0 / C_MAX,
                             rtol=FIT_RTOL, scan=200):
    """Largest C' in [C_min, 1] with N_u(C' mu) <= N(mu) on every admissible row."""
    counter = _counter(landscape)
    mus, vals = _restrict(curve_N, mu_range)
    ok, excl = _clean_lower_ok(vals, mus, counter, 1.0)
    if ok:
        return UpperFit(1.0, tuple(excl), len(mus) - len(excl))
    hi = 1.0
    for C in np.geomspace(1.0, C_min, scan)[1:]:
        ok, excl = _clean_lower_ok(vals, mus, counter, C)
        if ok:
            lo = C
            break
        hi = C
    else:
        raise NoFiniteConstant(f"N_u(C mu) <= N(mu) fails even at C = {C_min:g}")
    while hi / lo > 1.0 + rtol:
        mid = math.sqrt(lo * hi)
        ok_mid, excl_mid = _clean_lower_ok(vals, mus, counter, mid)
        if ok_mid:
            lo, excl = mid, excl_mid
        else:
            hi = mid
    return UpperFit(float(lo), tuple(excl), len(mus) - len(excl))


def lower_bound_value(landscape, mu, alpha, C1, C2, C3, dim=None):
    """C1 a^d N_u(C2 a^(d+2) mu) - C3 N_u(C2 a^(d+4) mu)."""
    if not 0 < alpha < 2.0 ** -4:
        raise ValidationError(f"alpha must lie in (0, 1/16), got {alpha}")
    counter = _counter(landscape)
    d = dim if dim is not None else counter.dim
    first = counter(C2 * alpha ** (d + 2) * mu)
    second = counter(C2 * alpha ** (d + 4) * mu)
    return C1 * alpha ** d * first - C3 * second


def fit_lower_constant(curve_N, landscape, alpha, C2, C3, mu_range=None, dim=None):
    """Largest C1 keeping the lower bound below N(mu) on every admissible row.

    Returns ``(C1, admissible_mu)``; C1 is ``inf`` when the first term never
    fires on the admissible rows.
    """
    counter = _counter(landscape)
    d = dim if dim is not None else counter.dim
    mus, vals = _restrict(curve_N, mu_range)
    best = math.inf
    rows = []
    for mu, n in zip(mus, vals):
        try:
            first = counter(C2 * alpha ** (d + 2) * mu)
            second = counter(C2 * alpha ** (d + 4) * mu)
        except (ScaleExceedsDomain, CubeUnresolvable):
            continue
        rows.append(float(mu))
        if first > 0:
            best = min(best, (n + C3 * second) / (alpha ** d * first))
    return best, rows


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _fmt(x):
    return f"{x:.17g}"


def write_curves_csv(path, mu_grid, columns, config_hash=None):
    """Write ``mu`` plus named columns, 17 significant digits."""
    names = list(columns)
    with open(path, "w") as fh:
        if config_hash:
            fh.write(f"# config_sha256={config_hash}\n")
        fh.write(",".join(["mu"] + names) + "\n")
        for i, mu in enumerate(mu_grid):
            fh.write(",".join([_fmt(mu)] + [_fmt(columns[k][i]) for k in names]) + "\n")


def write_curve_csv(path, curve, config_hash=None):
    cols = {"value": curve.values}
    if curve.stderr is not None:
        cols["stderr"] = curve.stderr
    write_curves_csv(path, curve.mu_grid, cols, config_hash)


def read_curves_csv(path, expect_hash=None):
    """Return ``(columns dict, config_hash)``; validates the hash when given."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    found = None
    if lines and lines[0].startswith("#"):
        key, _, val = lines.pop(0).lstrip("# ").partition("=")
        if key == "config_sha256":
            found = val
    if expect_hash is not None and found != expect_hash:
        raise ValidationError(f"{path}: config hash {found!r} != expected {expect_hash!r}")
    header = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}, found
