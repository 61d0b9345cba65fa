"""Experiment configs, seeded sweeps, and JSON/CSV reports.

Config files are flat ``key = value`` text; ``#`` starts a comment.  Every field
is echoed into the report so a report file doubles as a re-runnable config.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from lipvol import __version__
from lipvol.exact import (
    ehrhart_c,
    galvin_tetali_check,
    hypercube_c_upper,
    hypercube_upper_holds,
    kdd_volume_exact,
    lifting_check,
)
from lipvol.graphs import gen_gnp, giant_component, make_hypercube
from lipvol.montecarlo import sir_log_volume, sis_volume
from lipvol.profile import ProfileParams, profile_gain
from lipvol.qseries import q_pochhammer_inf, zeta_integral
from lipvol.rng import substream_seeds

SCHEMA_VERSION = 1
KINDS = ("random-graph-sweep", "hypercube-suite", "qseries-report", "profile-report")
CSV_COLUMNS = ("d", "estimate", "stderr", "target", "old_lower", "old_upper")
ESTIMATORS = ("smc", "sis")
MAX_N = 2000


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "random-graph-sweep"
    n: int = 400
    d_list: tuple[float, ...] = (8.0, 16.0, 32.0)
    T_rule: str = "logd"
    samples: int = 20000
    replicas: int = 16
    seed: int = 0
    output_path: str = ""
    estimator: str = "smc"
    exact_max_n: int = 8
    L: int = 5
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if len(self.d_list) == 0:
            raise ConfigError("d_list must be nonempty")
        if self.samples < 1000:
            raise ConfigError(f"samples must be >= 1000, got {self.samples}")
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator must be one of {ESTIMATORS}")
        if self.L < 5:
            raise ConfigError("L must be >= 5")
        if self.kind == "random-graph-sweep":
            if self.n > MAX_N:
                raise ConfigError(f"n is capped at {MAX_N}")
            if any(not 0 < d < self.n for d in self.d_list):
                raise ConfigError("every d must satisfy 0 < d < n")
        self.T_for(2.0)  # validates T_rule

    def T_for(self, d: float) -> float:
        if self.T_rule == "logd":
            return math.log(d)
        if self.T_rule.startswith("fixed:"):
            try:
                T = float(self.T_rule[len("fixed:"):])
            except ValueError:
                raise ConfigError(f"bad T_rule {self.T_rule!r}") from None
            if T <= 0:
                raise ConfigError("fixed T must be positive")
            return T
        raise ConfigError(f"T_rule must be 'logd' or 'fixed:<x>', got {self.T_rule!r}")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["d_list"] = list(self.d_list)
        return out

    @classmethod
    def from_mapping(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        kw = {}
        for key, value in raw.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kw[key] = _coerce(key, value)
        return cls(**kw)


_INT_KEYS = {"n", "samples", "replicas", "seed", "exact_max_n", "L", "workers"}


def _coerce(key: str, value):
    if key == "d_list":
        if isinstance(value, str):
            parts = [v for v in value.replace(",", " ").split() if v]
            return tuple(float(v) for v in parts)
        return tuple(float(v) for v in value)
    if key in _INT_KEYS:
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be an integer, got {value!r}") from None
    return str(value)


def parse_config_text(text: str, overrides: dict | None = None) -> ExperimentConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        k, v = line.split("=", 1)
        raw[k.strip()] = v.strip()
    raw.update(overrides or {})
    return ExperimentConfig.from_mapping(raw)


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, overrides)


@dataclass
class ExperimentRecord:
    config: dict
    rows: list[dict]
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION
    library_version: str = __version__

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentRecord":
        return cls(**raw)


def reference_bounds(d: float) -> dict:
    """pi^2/(6d) next to the earlier sandwich 1/(2d) and 4 log^2 d / d."""
    return {
        "target": math.pi**2 / (6 * d),
        "old_lower": 1.0 / (2 * d),
        "old_upper": 4 * math.log(d) ** 2 / d,
    }


def _replica(args) -> dict:
    n, d, seed, samples, estimator, exact_max_n = args
    g = gen_gnp(n, d, seed)
    giant, _ = giant_component(g)
    out = {"giant_n": giant.n, "edges": giant.m, "exact": False}
    if giant.n < 2:
        out.update(log_c=math.nan, zero_weight_fraction=1.0)
        return out
    if giant.n <= exact_max_n:
        res = ehrhart_c(giant)
        out.update(log_c=math.log(res.c), zero_weight_fraction=0.0, exact=True)
        return out
    # the sampler gets its own stream, distinct from the one that drew the graph
    sampler_seed = substream_seeds(seed, 1)[0]
    if estimator == "smc":
        run = sir_log_volume(giant, samples, sampler_seed)
        log_vol, zf = run["log_volume"], run["zero_weight_fraction"]
    else:
        est = sis_volume(giant, samples, sampler_seed)
        log_vol, zf = est.log_mean, est.zero_weight_fraction
    out.update(log_c=log_vol / (giant.n - 1), zero_weight_fraction=zf)
    return out


def _map(fn, jobs, workers):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _aggregate(values: list[float]) -> tuple[float, float]:
    # fsum over replica order keeps the result independent of scheduling
    k = len(values)
    mean = math.fsum(values) / k
    if k < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (k - 1)
    return mean, math.sqrt(var / k)


def run_random_graph_sweep(cfg: ExperimentConfig) -> ExperimentRecord:
    """Per d: ``replicas`` draws of G(n, d/n); log c of the largest component by
    volume estimation (exact Ehrhart count when it has at most ``exact_max_n``
    vertices); mean and standard error across replicas."""
    t0 = time.perf_counter()
    rows = []
    for j, d in enumerate(cfg.d_list):
        seeds = substream_seeds([cfg.seed, j], cfg.replicas)
        jobs = [(cfg.n, d, s, cfg.samples, cfg.estimator, cfg.exact_max_n) for s in seeds]
        reps = _map(_replica, jobs, cfg.workers)
        usable = [r for r in reps if math.isfinite(r["log_c"]) and r["zero_weight_fraction"] < 1.0]
        est, se = _aggregate([r["log_c"] for r in usable]) if usable else (None, None)
        row = {"d": d, "estimate": est, "stderr": se, **reference_bounds(d)}
        row.update(
            usable=bool(usable) and len(usable) == len(reps),
            usable_replicas=len(usable),
            exact_replicas=sum(r["exact"] for r in reps),
            mean_giant_n=float(np.mean([r["giant_n"] for r in reps])),
            max_zero_weight_fraction=max(r["zero_weight_fraction"] for r in reps),
            d_times_estimate=None if est is None else d * est,
        )
        rows.append(row)
    return ExperimentRecord(cfg.to_dict(), rows, time.perf_counter() - t0)


def sweep_checks(record: ExperimentRecord) -> dict:
    """Sandwich [0.5/(2d), 8 log^2 d / d] per row and non-increasing |d*est - pi^2/6|."""
    rows = record.rows
    sandwich = [
        r["usable"] and 0.5 * r["old_lower"] <= r["estimate"] <= 2 * r["old_upper"] for r in rows
    ]
    if any(r["estimate"] is None for r in rows):
        return {"sandwich": sandwich, "deviations": None, "trend": False}
    dev = [abs(r["d"] * r["estimate"] - math.pi**2 / 6) for r in rows]
    trend = all(b <= a for a, b in zip(dev, dev[1:]))
    return {"sandwich": sandwich, "deviations": dev, "trend": trend}


def run_hypercube_suite(L: int = 5, d_max: int = 12) -> ExperimentRecord:
    if L < 5:
        raise ValueError("L must be >= 5")
    t0 = time.perf_counter()
    rows = []
    for d in range(2, d_max + 1):
        V = kdd_volume_exact(d)
        upper = hypercube_c_upper(d, L, verify=False)
        row = {
            "d": d,
            "estimate": None,
            "stderr": None,
            **reference_bounds(d),
            "kdd_volume": f"{V.numerator}/{V.denominator}",
            "kdd_ratio": float(V) / (math.sqrt(math.pi) * d**1.5),
            "log_c_upper": math.log(upper),
        }
        if d <= 3:
            q = make_hypercube(d)
            res = ehrhart_c(q, extra=1)
            lift = [lifting_check(q, h, LL)["pass"] for h in (1, 2) for LL in (L, L + 2)]
            gt = [galvin_tetali_check(d, h, L)["pass"] for h in (1, 2)]
            contained = hypercube_upper_holds(res.leading, d, L)
            row.update(
                estimate=math.log(res.c),
                stderr=0.0,
                volume=f"{res.leading.numerator}/{res.leading.denominator}",
                lifting_pass=all(lift),
                galvin_tetali_pass=all(gt),
                upper_contains_exact=contained,
            )
        rows.append(row)
    cfg = {"kind": "hypercube-suite", "L": L, "d_list": list(range(2, d_max + 1))}
    return ExperimentRecord(cfg, rows, time.perf_counter() - t0)


def hypercube_checks(record: ExperimentRecord) -> bool:
    ok = True
    for r in record.rows:
        if "upper_contains_exact" in r:
            ok &= r["upper_contains_exact"] and r["lifting_pass"] and r["galvin_tetali_pass"]
        if r["d"] == 12:
            ok &= 0.9 <= r["kdd_ratio"] <= 1.1
    return bool(ok)


def run_qseries_report(cfg: ExperimentConfig) -> ExperimentRecord:
    """-log (q;q)_inf / n at q = 1 - d/n, to be compared with pi^2/(6d)."""
    t0 = time.perf_counter()
    rows = []
    for d in cfg.d_list:
        qv = q_pochhammer_inf(1.0 - d / cfg.n)
        est = -qv.log_value / cfg.n
        rows.append({"d": d, "estimate": est, "stderr": 0.0, **reference_bounds(d),
                     "ratio": est / (math.pi**2 / (6 * d)), "terms": qv.terms})
    meta = {"zeta_integral": zeta_integral()}
    return ExperimentRecord(cfg.to_dict(), rows, time.perf_counter() - t0, meta)


def run_profile_report(cfg: ExperimentConfig) -> ExperimentRecord:
    t0 = time.perf_counter()
    rows = []
    for d in cfg.d_list:
        s = profile_gain(ProfileParams(d, cfg.T_for(d)), truncated=True)
        u = profile_gain(ProfileParams(d, cfg.T_for(d)), truncated=False)
        rows.append({"d": d, "estimate": s.gain, "stderr": 0.0, **reference_bounds(d),
                     "H": s.H, "Q": s.Q, "untruncated_gain": u.gain, "T": s.T})
    return ExperimentRecord(cfg.to_dict(), rows, time.perf_counter() - t0)


def run_experiment(cfg: ExperimentConfig) -> ExperimentRecord:
    if cfg.kind == "random-graph-sweep":
        return run_random_graph_sweep(cfg)
    if cfg.kind == "hypercube-suite":
        rec = run_hypercube_suite(cfg.L)
        rec.config = cfg.to_dict()
        return rec
    if cfg.kind == "qseries-report":
        return run_qseries_report(cfg)
    return run_profile_report(cfg)


def _json_default(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def record_to_json(record: ExperimentRecord) -> str:
    return json.dumps(
        record.to_dict(), indent=2, sort_keys=True, allow_nan=False, default=_json_default
    ) + "\n"


def record_from_json(text: str) -> ExperimentRecord:
    return ExperimentRecord.from_dict(json.loads(text))


def rows_to_csv(record: ExperimentRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in record.rows:
        w.writerow(["" if r[c] is None else repr(float(r[c])) for c in CSV_COLUMNS])
    return buf.getvalue()


def emit_report(record: ExperimentRecord, path) -> tuple[Path, Path]:
    """Write ``<path>.json`` (full record) and ``<path>.csv`` (fixed columns)."""
    base = Path(path)
    if base.suffix in (".json", ".csv"):
        base = base.with_suffix("")
    json_path = base.with_suffix(".json")
    csv_path = base.with_suffix(".csv")
    try:
        json_path.write_text(record_to_json(record))
        csv_path.write_text(rows_to_csv(record))
    except OSError as exc:
        raise OSError(f"cannot write report to {base}: {exc}") from exc
    return json_path, csv_path


def read_report(path) -> ExperimentRecord:
    path = Path(path)
    try:
        return record_from_json(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read report {path}: {exc}") from exc
