"""Anderson ensembles, binomial tail bounds, and Lifschitz-tail shape fits."""
from dataclasses import dataclass, field
import logging
import math

import numpy as np
from scipy.optimize import least_squares
from scipy.special import gammaln, logsumexp

from .counting import CountingCurve, LandscapeCounter
from .errors import (ConditionViolated, InvalidParameters, NonPositiveCurve,
                     SingularOperator, ValidationError)
from .grid import build_grid, is_admissible
from .landscape import DEFAULT_TOLERANCE, solve_landscape
from .operator import DiscreteOperator, count_by_inertia, eigen_dense
from .potential import anderson_realization

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnsembleConfig:
    distribution: object
    dim: int
    R0: int
    n: int
    realization_count: int
    base_seed: int
    mu_grid: np.ndarray
    tolerance: float = DEFAULT_TOLERANCE
    spectrum_backend: str = "dense"

    def __post_init__(self):
        if self.realization_count < 1:
            raise ValidationError("realization_count must be >= 1")
        mu = np.asarray(self.mu_grid, dtype=np.float64)
        if mu.ndim != 1 or mu.size == 0 or np.any(np.diff(mu) <= 0):
            raise ValidationError("mu_grid must be a nonempty ascending sequence")
        object.__setattr__(self, "mu_grid", mu)
        grid = self.grid
        bad = [m for m in mu if not is_admissible(grid, m)]
        if bad:
            raise ValidationError(f"mu values outside the countable range: {bad[:3]}")

    @property
    def grid(self):
        return build_grid(self.dim, self.R0, self.n)

    def echo(self):
        return {"distribution": self.distribution.to_dict(), "dim": self.dim, "R0": self.R0,
                "n": self.n, "realization_count": self.realization_count,
                "base_seed": self.base_seed, "mu_grid": [float(m) for m in self.mu_grid],
                "tolerance": self.tolerance, "spectrum_backend": self.spectrum_backend}


@dataclass(frozen=True)
class EnsembleCurve:
    mu_grid: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    realization_count: int

    def as_counting_curve(self):
        return CountingCurve(self.mu_grid, self.mean, "ensemble_mean", self.stderr)


@dataclass
class EnsembleResult:
    ids: EnsembleCurve
    landscape: EnsembleCurve
    checksums: list
    skipped: list = field(default_factory=list)
    samples_ids: np.ndarray = None
    samples_landscape: np.ndarray = None

    def report(self, config):
        return {
            "config": config.echo(),
            "mu": [float(m) for m in self.ids.mu_grid],
            "N_mean": [float(x) for x in self.ids.mean],
            "N_stderr": [float(x) for x in self.ids.stderr],
            "Nu_mean": [float(x) for x in self.landscape.mean],
            "Nu_stderr": [float(x) for x in self.landscape.stderr],
            "realizations_used": self.ids.realization_count,
            "skipped_realizations": self.skipped,
            "realization_checksums": self.checksums,
        }


def run_realization(config, r):
    """Both counting curves for realization ``r``; ``None`` when V vanishes."""
    grid = config.grid
    V = anderson_realization(grid, config.distribution, config.base_seed, r)
    op = DiscreteOperator(grid, V)
    try:
        land = solve_landscape(op, tolerance=config.tolerance)
    except SingularOperator:
        log.warning("realization %d has V == 0; skipped", r)
        return None
    vol = grid.volume
    if config.spectrum_backend == "inertia":
        N = np.array([count_by_inertia(op, m) for m in config.mu_grid]) / vol
    else:
        spec = eigen_dense(op)
        N = np.searchsorted(spec.eigenvalues, config.mu_grid + spec.atol, side="right") / vol
    counter = LandscapeCounter(land)
    Nu = np.array([counter(m) for m in config.mu_grid])
    return N, Nu, V.checksum()


def _aggregate(samples, mu):
    R = samples.shape[0]
    mean = samples.mean(axis=0)
    std = samples.std(axis=0, ddof=1) if R > 1 else np.zeros_like(mean)
    return EnsembleCurve(mu, mean, std / math.sqrt(R), R)


def expectation_curves(config, order=None):
    """Ensemble means of N and N_u; aggregation is in realization-index order.

    ``order`` permutes the execution order only (for checking order independence).
    """
    R = config.realization_count
    order = range(R) if order is None else order
    results = {}
    for r in order:
        results[r] = run_realization(config, r)
    used = [r for r in range(R) if results[r] is not None]
    skipped = [r for r in range(R) if results[r] is None]
    if not used:
        raise SingularOperator("every realization produced V == 0")
    N = np.array([results[r][0] for r in used])
    Nu = np.array([results[r][1] for r in used])
    sums = [results[r][2] for r in used]
    return EnsembleResult(_aggregate(N, config.mu_grid), _aggregate(Nu, config.mu_grid),
                          sums, skipped, N, Nu)


# ---------------------------------------------------------------------------
# binomial tails
# ---------------------------------------------------------------------------


def entropy_factor(mu):
    """H(mu) = (mu^mu (1-mu)^(1-mu))^-1."""
    return math.exp(-(mu * math.log(mu) + (1.0 - mu) * math.log1p(-mu)))


def chernoff_bound(mu_frac, F_value, N_sites):
    """(H(mu) F^mu)^N bound on P{#sites with omega <= delta >= mu N}."""
    if not 0.0 < mu_frac < 1.0:
        raise ValidationError(f"mu_frac must lie in (0, 1), got {mu_frac}")
    if not F_value > 0.0:
        raise ValidationError(f"F_value must be positive, got {F_value}")
    if F_value >= mu_frac:
        raise ConditionViolated(f"need F < mu, got F = {F_value}, mu = {mu_frac}")
    log_base = math.log(entropy_factor(mu_frac)) + mu_frac * math.log(F_value)
    return math.exp(N_sites * log_base)


def binomial_tail_exact(N, p, k):
    """P{Bin(N, p) >= k}, accumulated in log space."""
    if not 0 <= k <= N:
        raise InvalidParameters(f"need 0 <= k <= N, got k={k}, N={N}")
    if not 0.0 <= p <= 1.0:
        raise InvalidParameters(f"p must lie in [0, 1], got {p}")
    if k == 0:
        return 1.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    j = np.arange(k, N + 1)
    logc = gammaln(N + 1) - gammaln(j + 1) - gammaln(N - j + 1)
    terms = logc + j * math.log(p) + (N - j) * math.log1p(-p)
    return float(min(1.0, math.exp(logsumexp(terms))))


# ---------------------------------------------------------------------------
# tail envelopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailEnvelopeParams:
    gamma_pre: float
    gamma_exp: float
    c_scale: float
    dim: int

    def __post_init__(self):
        if not (self.gamma_pre > 0 and self.gamma_exp > 0 and self.c_scale > 0):
            raise InvalidParameters("envelope parameters must be positive")


def _F_of(F_evaluator):
    return F_evaluator.cdf if hasattr(F_evaluator, "cdf") else F_evaluator


def log_tail_envelope(params, F_evaluator, mu):
    F = _F_of(F_evaluator)
    mu = np.asarray(mu, dtype=np.float64)
    d = params.dim
    Fv = np.asarray(F(np.clip(params.c_scale * mu, 0.0, 1.0)), dtype=np.float64)
    with np.errstate(divide="ignore"):
        logF = np.log(Fv)
    return math.log(params.gamma_pre) + 0.5 * d * np.log(mu) + params.gamma_exp * mu ** (-0.5 * d) * logF


def tail_envelope(params, F_evaluator, mu):
    """gamma_pre mu^(d/2) F(c mu)^(gamma_exp mu^(-d/2)), evaluated through logs."""
    if np.any(np.asarray(mu) <= 0):
        raise ValidationError("mu must be positive")
    out = np.exp(log_tail_envelope(params, F_evaluator, mu))
    return float(out) if np.ndim(out) == 0 else out


def fit_tail_envelope(mu, values, F_evaluator, dim, x0=(1.0, 1.0, 1.0)):
    """Least-squares fit of the envelope to a positive curve, in log space."""
    mu = np.asarray(mu, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    keep = values > 0
    if keep.sum() < 3:
        raise NonPositiveCurve("need at least three positive points to fit an envelope")
    mu, target = mu[keep], np.log(values[keep])

    def resid(theta):
        p = TailEnvelopeParams(*np.exp(theta), dim)
        r = log_tail_envelope(p, F_evaluator, mu) - target
        return np.where(np.isfinite(r), r, 1e6)

    sol = least_squares(resid, np.log(np.asarray(x0, dtype=np.float64)), method="trf")
    params = TailEnvelopeParams(*np.exp(sol.x), dim)
    ss_res = float(np.sum(sol.fun ** 2))
    ss_tot = float(np.sum((target - target.mean()) ** 2))
    return params, 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def envelope_bracket(mu, values, params, F_evaluator):
    """Factors (lo, hi) with lo*env <= values <= hi*env on the positive points."""
    mu = np.asarray(mu, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    keep = values > 0
    ratio = values[keep] / tail_envelope(params, F_evaluator, mu[keep])
    return float(ratio.min()), float(ratio.max())


# ---------------------------------------------------------------------------
# exponent and shape fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LifschitzFit:
    slope: float
    r_squared: float
    tail_regime: bool
    rss_tail: float
    rss_power: float


def _linfit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return coef[0], coef[1], r2, ss_res


def lifschitz_fit(curve, mu_window=None):
    """Slope of log|log N| against -log mu, with a power-law comparison.

    ``tail_regime`` is False when a pure power law explains log N better
    than an exponential tail does.
    """
    if isinstance(curve, CountingCurve):
        mu, vals = curve.mu_grid, curve.values
    else:
        mu, vals = (np.asarray(a, dtype=np.float64) for a in curve)
    if mu_window is not None:
        keep = (mu >= mu_window[0]) & (mu <= mu_window[1])
        mu, vals = mu[keep], vals[keep]
    if mu.size < 3:
        raise ValidationError("need at least three points in the window")
    if np.any(vals <= 0):
        raise NonPositiveCurve("curve must be strictly positive on the window")
    logv = np.log(vals)
    if np.any(logv == 0):
        raise NonPositiveCurve("|log N| vanishes inside the window")
    x = -np.log(mu)
    slope, icpt, r2, _ = _linfit(x, np.log(np.abs(logv)))
    # compare both models on the same scale: log N
    pred_tail = np.sign(logv) * np.exp(slope * x + icpt)
    rss_tail_logv = float(np.sum((logv - pred_tail) ** 2))
    _, _, _, rss_power = _linfit(np.log(mu), logv)
    return LifschitzFit(float(slope), float(r2), bool(rss_tail_logv < rss_power),
                        rss_tail_logv, rss_power)


@dataclass(frozen=True)
class TailShapeFit:
    slope: float
    intercept: float
    r_squared: float
    window: tuple
    points: int


def tail_window(mu, mean, stderr, max_rel_stderr=0.3):
    """Index slice of the longest contiguous run with mean > 0 and small relative stderr."""
    mean = np.asarray(mean)
    stderr = np.asarray(stderr)
    with np.errstate(divide="ignore", invalid="ignore"):
        good = (mean > 0) & (stderr / mean < max_rel_stderr)
    best, start = (0, 0), None
    for i, g in enumerate(np.append(good, False)):
        if g and start is None:
            start = i
        elif not g and start is not None:
            if i - start > best[1] - best[0]:
                best = (start, i)
            start = None
    return slice(*best)


def tail_shape_regression(curve, dim, max_rel_stderr=0.3):
    """Regress log mean against mu^(-d/2) on the longest well-resolved window."""
    mu, mean, se = curve.mu_grid, curve.mean, curve.stderr
    sl = tail_window(mu, mean, se, max_rel_stderr)
    if sl.stop - sl.start < 3:
        raise NonPositiveCurve("fewer than three resolved points in the tail window")
    x = mu[sl] ** (-0.5 * dim)
    slope, icpt, r2, _ = _linfit(x, np.log(mean[sl]))
    return TailShapeFit(float(slope), float(icpt), float(r2),
                        (float(mu[sl][0]), float(mu[sl][-1])), sl.stop - sl.start)
