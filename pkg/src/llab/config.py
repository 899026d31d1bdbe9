"""Run configuration: JSON schema, flag overrides, validation, and the config echo."""
import copy
import hashlib
import json
import math

from .errors import ValidationError
from .grid import build_grid
from .potential import distribution_from_dict

SCHEMA_VERSION = 1
EXPERIMENTS = ("gen-potential", "landscape", "spectrum", "curves", "lawcheck",
               "doubling", "ensemble", "figure1")

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "experiment": "curves",
    "grid": {"dim": 1, "R0": 64, "n": 8},
    "potential": {"source": "distribution", "distribution": {"kind": "uniform"},
                  "seed": 0, "realization": 0},
    "mu_grid": {"min": None, "max": 50.0, "per_decade": 64, "values": None},
    "solver": {"tolerance": 1e-10, "max_iterations": None, "preconditioner": "jacobi"},
    "spectrum": {"backend": "dense", "dense_dof_limit": 4096},
    "constants": {"alpha": 1.0 / 32, "C1": None, "C2": None, "C3": 1.0, "C4": None},
    "ensemble": {"realizations": 32, "base_seed": 0},
    "doubling": {"s_values": [0.5, 1.0, 2.0]},
    "figure1": {"points": 2000, "state_fraction": 0.5},
    "output_dir": "llab_out",
}

FIGURE1_DEFAULTS = {"grid": {"dim": 1, "R0": 512, "n": 8},
                    "potential": {"source": "distribution", "distribution": {"kind": "uniform"},
                                  "seed": 0, "realization": 0}}


def _merge(base, extra):
    out = copy.deepcopy(base)
    for k, v in (extra or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _parse_scalar(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg, assignments):
    """Apply ``dotted.key=value`` assignments; values are parsed as JSON when possible."""
    cfg = copy.deepcopy(cfg)
    for item in assignments or ():
        key, sep, raw = item.partition("=")
        if not sep:
            raise ValidationError(f"override {item!r} is not of the form key=value")
        node = cfg
        parts = key.strip().split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ValidationError(f"override {key!r} descends into a scalar")
        node[parts[-1]] = _parse_scalar(raw.strip())
    return cfg


def load_config(path=None, experiment=None, overrides=()):
    base = DEFAULTS
    if experiment == "figure1":
        base = _merge(base, FIGURE1_DEFAULTS)
    user = {}
    if path:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    cfg = _merge(base, user)
    if experiment:
        cfg["experiment"] = experiment
    cfg = apply_overrides(cfg, overrides)
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema_version {cfg.get('schema_version')!r}")
    if cfg["experiment"] not in EXPERIMENTS:
        raise ValidationError(f"unknown experiment {cfg['experiment']!r}")
    g = cfg["grid"]
    grid = build_grid(g["dim"], g["R0"], g["n"])
    pot = cfg["potential"]
    src = pot.get("source")
    if src == "distribution":
        distribution_from_dict(pot["distribution"])
    elif src == "preset":
        if pot.get("preset") not in ("constant", "cosine"):
            raise ValidationError(f"unknown preset {pot.get('preset')!r}")
        if pot.get("preset") == "constant" and float(pot.get("c", 1.0)) < 0:
            raise ValidationError("constant preset needs c >= 0")
    elif src == "file":
        if not pot.get("path"):
            raise ValidationError("potential source 'file' needs a path")
    else:
        raise ValidationError(f"unknown potential source {src!r}")
    tol = cfg["solver"]["tolerance"]
    if not (isinstance(tol, (int, float)) and 0 < tol < 1):
        raise ValidationError(f"solver tolerance must lie in (0, 1), got {tol!r}")
    if cfg["experiment"] in ("curves", "lawcheck", "ensemble"):
        lo, hi = mu_bounds(cfg, grid)
        if grid.side_length_R0 * math.sqrt(lo) < 1 - 1e-12:
            raise ValidationError(f"mu_min = {lo:g} gives R0*sqrt(mu) < 1 (cube larger than domain)")
        if hi > grid.points_per_unit_n ** 2 * (1 + 1e-12):
            raise ValidationError(f"mu_max = {hi:g} exceeds the resolvable scale n^2 = "
                                  f"{grid.points_per_unit_n ** 2}")
        if lo > hi:
            raise ValidationError("mu_min exceeds mu_max")
    a = cfg["constants"]["alpha"]
    if not 0 < a < 2.0 ** -4:
        raise ValidationError(f"alpha must lie in (0, 1/16), got {a!r}")
    if int(cfg["ensemble"]["realizations"]) < 1:
        raise ValidationError("ensemble.realizations must be >= 1")
    return grid


def mu_bounds(cfg, grid):
    m = cfg["mu_grid"]
    if m.get("values"):
        vals = [float(x) for x in m["values"]]
        return min(vals), max(vals)
    lo = m.get("min")
    lo = 1.0 / grid.side_length_R0 ** 2 if lo is None else float(lo)
    return lo, float(m["max"])


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def physical_config(cfg):
    """The config minus where it is written; two runs of it must agree byte for byte."""
    return {k: v for k, v in cfg.items() if k != "output_dir"}


def config_hash(cfg):
    return hashlib.sha256(canonical_json(physical_config(cfg)).encode()).hexdigest()
