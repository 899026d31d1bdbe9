"""Verdicts for the landscape counting inequalities plus report-only diagnostics."""
from dataclasses import dataclass, field
import json
import math

import numpy as np

from .counting import (LandscapeCounter, fit_constant_lower_clean, fit_constant_upper,
                       fit_lower_constant, nonmonotone_steps)
from .errors import (CubeUnresolvable, InsufficientMinima, NoFiniteConstant,
                     ScaleExceedsDomain, ValidationError)
from .landscape import local_minima

_EPS = 1e-12


def _rows_of(curve, mu_range):
    mus, vals = curve.mu_grid, curve.values
    if mu_range is not None:
        keep = (mus >= mu_range[0]) & (mus <= mu_range[1])
        mus, vals = mus[keep], vals[keep]
    return mus, vals


def _counter(landscape):
    return landscape if callable(landscape) else LandscapeCounter(landscape)


@dataclass
class BoundCheck:
    rows: list
    excluded_mu: list

    @property
    def passed(self):
        return all(r["pass"] for r in self.rows)

    @property
    def failures(self):
        return [r for r in self.rows if not r["pass"]]


def check_upper(ids_curve, landscape, C4, mu_range=None):
    """N(mu) <= N_u(C4 mu) row by row; inadmissible scales are listed, not judged."""
    if not C4 > 0:
        raise ValidationError(f"C4 must be positive, got {C4}")
    counter = _counter(landscape)
    rows, excluded = [], []
    for mu, n in zip(*_rows_of(ids_curve, mu_range)):
        try:
            nu = counter(C4 * mu)
        except (ScaleExceedsDomain, CubeUnresolvable):
            excluded.append(float(mu))
            continue
        rows.append({"mu": float(mu), "N": float(n), "Nu": float(nu),
                     "slack": float(nu - n), "pass": bool(n <= nu + _EPS)})
    return BoundCheck(rows, excluded)


def check_lower_general(ids_curve, landscape, alpha, C1, C2, C3, mu_range=None):
    """C1 a^d N_u(C2 a^(d+2) mu) - C3 N_u(C2 a^(d+4) mu) <= N(mu) row by row."""
    if not 0 < alpha < 2.0 ** -4:
        raise ValidationError(f"alpha must lie in (0, 1/16), got {alpha}")
    counter = _counter(landscape)
    d = counter.dim
    rows, excluded = [], []
    for mu, n in zip(*_rows_of(ids_curve, mu_range)):
        try:
            first = counter(C2 * alpha ** (d + 2) * mu)
            second = counter(C2 * alpha ** (d + 4) * mu)
        except (ScaleExceedsDomain, CubeUnresolvable):
            excluded.append(float(mu))
            continue
        bound = C1 * alpha ** d * first - C3 * second
        rows.append({"mu": float(mu), "N": float(n), "Nu_first": float(first),
                     "Nu_second": float(second), "bound": float(bound),
                     "slack": float(n - bound), "pass": bool(bound <= n + _EPS)})
    return BoundCheck(rows, excluded)


# ---------------------------------------------------------------------------
# doubling and Harnack probes
# ---------------------------------------------------------------------------


def _periodic_box_sums(a, length):
    """Sum of ``a`` over every periodic box ``[c, c+length)^d``, indexed by corner c."""
    out = a
    for axis in range(a.ndim):
        n = a.shape[axis]
        ext = np.concatenate([out, np.take(out, np.arange(length), axis=axis)], axis=axis)
        cs = np.cumsum(ext, axis=axis)
        cs = np.concatenate([np.zeros_like(np.take(cs, [0], axis=axis)), cs], axis=axis)
        out = np.take(cs, np.arange(length, length + n), axis=axis) - np.take(cs, np.arange(n), axis=axis)
    return out


@dataclass
class DoublingResult:
    C_D_hat: float
    table: list
    per_s: dict = field(default_factory=dict)


def _points_for(length, grid):
    pts = length * grid.points_per_unit_n
    k = int(round(pts))
    if k < 1 or abs(pts - k) > 1e-9 * max(1.0, pts):
        raise CubeUnresolvable(f"side {length} is not a positive multiple of h = {grid.spacing_h}")
    return k


def check_doubling(landscape, s_values, sample_centers=None):
    """max over centers and s of int_{Q_2s} u^2 / (int_{Q_s} u^2 + s^(d+4)).

    Centers default to every grid point on a subgrid of stride s.
    """
    grid = landscape.grid
    u = np.asarray(landscape.u if hasattr(landscape, "u") else landscape, dtype=np.float64)
    u = grid.check_field(u)
    u2 = u * u
    hd = grid.cell_volume
    d = grid.dim
    npts = grid.points_per_axis
    table, per_s, best = [], {}, -math.inf
    for s in s_values:
        k = _points_for(s, grid)
        if 2 * k > npts:
            raise CubeUnresolvable(f"cube of side 2*{s} does not fit on the torus")
        small = _periodic_box_sums(u2, k)
        big = _periodic_box_sums(u2, 2 * k)
        if sample_centers is None:
            axis = np.arange(0, npts, k)
            centers = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
        else:
            centers = np.atleast_2d(np.asarray(sample_centers, dtype=np.int64))
        lo_small = tuple(np.mod(centers - k // 2, npts).T)
        lo_big = tuple(np.mod(centers - k, npts).T)
        ratio = hd * big[lo_big] / (hd * small[lo_small] + float(s) ** (d + 4))
        i = int(np.argmax(ratio))
        per_s[float(s)] = float(ratio[i])
        best = max(best, float(ratio[i]))
        table.extend({"s": float(s), "center": [int(x) for x in c], "ratio": float(r)}
                     for c, r in zip(centers, ratio))
    return DoublingResult(best, table, per_s)


@dataclass
class HarnackResult:
    C_H_hat: float
    ratios: np.ndarray


def moser_harnack_probe(landscape, part):
    """max over cubes of sup_Q u / ((|Q|^-1 int_{2Q} u^2)^(1/2) + l(Q)^2); report-only."""
    grid = part.grid
    u = grid.check_field(np.asarray(landscape.u if hasattr(landscape, "u") else landscape,
                                    dtype=np.float64))
    npts = grid.points_per_axis
    h = grid.spacing_h
    starts = part.block_starts[:-1]
    sizes = np.diff(part.block_starts)
    if 2 * sizes.max() > npts:
        raise CubeUnresolvable("doubled cube does not fit on the torus")
    u2 = u * u
    ratios = np.empty(part.cube_count)
    for cube in range(part.cube_count):
        block = np.unravel_index(cube, (part.m,) * grid.dim)
        small_idx, big_idx, side_pts = [], [], []
        for axis, b in enumerate(block):
            st = starts[b] + part.offset[axis]
            sz = int(sizes[b])
            small_idx.append(np.mod(np.arange(st, st + sz), npts))
            big_idx.append(np.mod(np.arange(st - sz // 2, st - sz // 2 + 2 * sz), npts))
            side_pts.append(sz)
        sup = u[np.ix_(*small_idx)].max()
        vol = float(np.prod(side_pts)) * h ** grid.dim
        int_big = u2[np.ix_(*big_idx)].sum() * h ** grid.dim
        side = max(side_pts) * h
        ratios[cube] = sup / (math.sqrt(int_big / vol) + side ** 2)
    return HarnackResult(float(ratios.max()), ratios)


def minima_ratio_diagnostic(spectrum, landscape, count):
    """lambda_j / ((1 + d/4) w_j) for the ``count`` lowest eigenvalues and minima of 1/u."""
    W = landscape.W if hasattr(landscape, "W") else np.asarray(landscape)
    d = W.ndim
    w = local_minima(W)
    lam = np.asarray(spectrum.eigenvalues)
    if count > min(w.size, lam.size):
        raise InsufficientMinima(f"asked for {count} ratios, only {w.size} minima and "
                                 f"{lam.size} eigenvalues available")
    factor = 1.0 + d / 4.0
    return [{"j": j, "lambda": float(lam[j]), "w": float(w[j]),
             "ratio": float(lam[j] / (factor * w[j]))} for j in range(count)]


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass
class LawReport:
    upper: BoundCheck
    lower: BoundCheck
    constants: dict
    diagnostics: dict
    provenance: dict

    @property
    def verdicts(self):
        return {"upper": self.upper.passed, "lower_general": self.lower.passed}

    def to_dict(self):
        return {
            "constants": self.constants,
            "verdicts": self.verdicts,
            "upper_rows": self.upper.rows,
            "upper_excluded_mu": self.upper.excluded_mu,
            "lower_rows": self.lower.rows,
            "lower_excluded_mu": self.lower.excluded_mu,
            "diagnostics": self.diagnostics,
            "provenance": self.provenance,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def summary(self):
        c = self.constants
        lines = ["landscape law check", "-------------------"]
        for key in sorted(c):
            lines.append(f"{key:<16} {c[key]!s:>24}")
        lines.append(f"{'upper':<16} {'PASS' if self.upper.passed else 'FAIL':>24}"
                     f"  ({len(self.upper.rows)} rows, {len(self.upper.excluded_mu)} excluded)")
        lines.append(f"{'lower_general':<16} {'PASS' if self.lower.passed else 'FAIL':>24}"
                     f"  ({len(self.lower.rows)} rows, {len(self.lower.excluded_mu)} excluded)")
        for key in sorted(self.diagnostics):
            val = self.diagnostics[key]
            if isinstance(val, (int, float, str)):
                lines.append(f"{key:<16} {val!s:>24}")
        return "\n".join(lines) + "\n"


def run_lawcheck(ids, landscape, spectrum=None, alpha=1.0 / 32, C1=None, C2=None, C3=1.0,
                 C4=None, mu_range=None, s_values=(), minima_count=0, provenance=None):
    """Fit what is not supplied, check both sides, and gather diagnostics."""
    d = landscape.grid.dim
    if C2 is None:
        C2 = alpha ** -(d + 2)
    constants = {"alpha": alpha, "C2": C2, "C3": C3}
    if C4 is None:
        fit = fit_constant_upper(ids, landscape, mu_range)
        C4 = fit.C
        constants["C4_hat"] = C4
    constants["C4"] = C4
    if C1 is None:
        C1, _ = fit_lower_constant(ids, landscape, alpha, C2, C3, mu_range)
        if not math.isfinite(C1):
            C1 = 0.0
        constants["C1_hat"] = C1
    constants["C1"] = C1
    try:
        constants["C2prime_hat"] = fit_constant_lower_clean(ids, landscape, mu_range).C
    except NoFiniteConstant:
        constants["C2prime_hat"] = None
    upper = check_upper(ids, landscape, C4, mu_range)
    lower = check_lower_general(ids, landscape, alpha, C1, C2, C3, mu_range)
    counter = _counter(landscape)
    mus = [m for m in _rows_of(ids, mu_range)[0] if counter.admissible(m)]
    drops = nonmonotone_steps(counter.curve(mus)) if mus else []
    diagnostics = {"Nu_nonmonotone_steps": len(drops),
                   "Nu_max_drop": max((d[2] for d in drops), default=0.0),
                   "Nu_drops": [list(d) for d in drops]}
    if s_values:
        dbl = check_doubling(landscape, s_values)
        diagnostics["C_D_hat"] = dbl.C_D_hat
        diagnostics["doubling_by_s"] = {str(k): v for k, v in sorted(dbl.per_s.items())}
    if minima_count and spectrum is not None:
        diagnostics["minima_ratios"] = minima_ratio_diagnostic(spectrum, landscape, minima_count)
    return LawReport(upper, lower, constants, diagnostics, provenance or {})
