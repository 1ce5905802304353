"""Parameter grids over the collision models: config parsing, sweeps, threshold curves.

Config documents are line based::

    # comments start with '#'
    model = indirect
    kappa = 0.3
    J = 0.5
    axis1 = Omega 0 1.5707963267948966 50
    axis2 = T 0 10 41

An axis given only by name spans the default range for that parameter.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigError, IntegrityError
from .gates import HALF_PI, ThermalSpec
from .measures import EPS_N, blp_measure, find_threshold
from .models import Config, DirectConfig, IndirectConfig, StopPolicy, run_model

AXIS_NAMES = ("J", "Omega", "kappa", "T")
STRENGTHS = ("J", "Omega", "kappa")
OUTPUTS = ("N", "coherences", "thresholds", "trajectory")

DEFAULTS = {"J": 0.3, "Omega": 0.0, "kappa": 0.3, "T": 0.0, "omega_ratio": 5.0}
DEFAULT_AXES = {
    "J": (0.0, HALF_PI, 50),
    "Omega": (0.0, HALF_PI, 50),
    "kappa": (0.0, HALF_PI, 50),
    "T": (0.0, 10.0, 101),
}

# canonical key spelling, looked up case-insensitively
_KEYS = {k.lower(): k for k in (
    "model", "J", "Omega", "kappa", "T", "omega_ratio",
    "n_max", "eps_settle", "settle_window",
    "axis1", "axis2", "outputs", "search", "resolution", "oracle_steps",
)}


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    steps: int

    def values(self) -> list[float]:
        return [float(x) for x in np.linspace(self.lo, self.hi, self.steps)]

    def __str__(self):
        return f"{self.name} {self.lo!r} {self.hi!r} {self.steps}"


@dataclass(frozen=True)
class SweepSpec:
    model: str = "direct"
    fixed: dict = field(default_factory=dict)
    axis1: Optional[Axis] = None
    axis2: Optional[Axis] = None
    outputs: tuple[str, ...] = ("N",)
    stop: StopPolicy = StopPolicy()
    search: Axis = Axis("Omega", 0.0, HALF_PI, 2)
    resolution: float = 1e-3
    oracle_steps: int = 6

    @property
    def axes(self) -> list[Axis]:
        return [a for a in (self.axis1, self.axis2) if a is not None]

    def config_at(self, **params) -> Config:
        """Model config at one grid point; ``params`` supply the axis values."""
        p = dict(self.fixed)
        p.update(params)
        for name, value in DEFAULTS.items():
            p.setdefault(name, value)
        thermal = ThermalSpec(T=p["T"], omega_ratio=p["omega_ratio"])
        if self.model == "indirect":
            return IndirectConfig(kappa=p["kappa"], J=p["J"], Omega=p["Omega"],
                                  thermal=thermal, stop=self.stop)
        return DirectConfig(J=p["J"], Omega=p["Omega"], thermal=thermal, stop=self.stop)

    def echo(self) -> list[tuple[str, str]]:
        """Deterministic key/value listing used in CSV provenance headers."""
        items = [("model", self.model)]
        items += [(k, repr(float(self.fixed[k]))) for k in
                  ("J", "Omega", "kappa", "T", "omega_ratio") if k in self.fixed]
        items += [("n_max", str(self.stop.n_max)), ("eps_settle", repr(self.stop.eps_settle)),
                  ("settle_window", str(self.stop.settle_window))]
        for key, ax in (("axis1", self.axis1), ("axis2", self.axis2)):
            if ax is not None:
                items.append((key, str(ax)))
        items.append(("outputs", ",".join(self.outputs)))
        return items


# ---------------------------------------------------------------------------
# parsing


def _number(key, text, line, kind=float):
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind.__name__}", line, key) from None


def _parse_axis(key, text, line) -> Axis:
    parts = text.split()
    if not parts or parts[0].lower() not in {n.lower() for n in AXIS_NAMES}:
        raise ConfigError(f"{key}: axis name must be one of {', '.join(AXIS_NAMES)}", line, key)
    name = _KEYS[parts[0].lower()]
    if len(parts) == 1:
        lo, hi, steps = DEFAULT_AXES[name]
    elif len(parts) == 4:
        lo = _number(key, parts[1], line)
        hi = _number(key, parts[2], line)
        steps = _number(key, parts[3], line, int)
    else:
        raise ConfigError(f"{key}: expected '<name> <lo> <hi> <steps>'", line, key)
    if not lo < hi:
        raise ConfigError(f"{key}: lo must be < hi (got {lo} >= {hi})", line, key)
    if steps < 2:
        raise ConfigError(f"{key}: steps must be >= 2", line, key)
    _check_range(name, lo, line, key)
    _check_range(name, hi, line, key)
    return Axis(name, lo, hi, steps)


def _check_range(name, value, line, key):
    if name in STRENGTHS and not 0.0 <= value <= HALF_PI:
        raise ConfigError(f"{key}: {name} = {value} outside legal range [0, pi/2]", line, key)
    if name == "T" and not value >= 0.0:
        raise ConfigError(f"{key}: T = {value} outside legal range [0, inf)", line, key)
    if name == "omega_ratio" and not value > 0.0:
        raise ConfigError(f"{key}: omega_ratio = {value} outside legal range (0, inf)", line, key)


def _read_lines(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        key, value = (s.strip() for s in body.split("=", 1))
        canon = _KEYS.get(key.lower())
        if canon is None:
            raise ConfigError(f"unknown key {key!r}", lineno, key)
        if canon in raw:
            raise ConfigError(f"duplicate key {canon!r}", lineno, canon)
        if not value:
            raise ConfigError(f"{canon}: missing value", lineno, canon)
        raw[canon] = (value, lineno)
    return raw


def parse_config(text: str, overrides: Optional[dict] = None) -> SweepSpec:
    """Parse and validate a config document.

    ``overrides`` maps keys to value strings and replaces whatever the
    document says (this is how ``--set key=value`` reaches the parser).
    """
    raw = _read_lines(text)
    for key, value in (overrides or {}).items():
        canon = _KEYS.get(key.strip().lower())
        if canon is None:
            raise ConfigError(f"unknown key {key!r}", key=key)
        raw[canon] = (str(value).strip(), None)

    def get(key, default=None):
        return raw.get(key, (default, None))

    model, line = get("model", "direct")
    model = model.lower()
    if model not in ("direct", "indirect"):
        raise ConfigError(f"model must be 'direct' or 'indirect', got {model!r}", line, "model")

    fixed = {}
    for name in ("J", "Omega", "kappa", "T", "omega_ratio"):
        if name in raw:
            text_value, line = raw[name]
            value = _number(name, text_value, line)
            _check_range(name, value, line, name)
            fixed[name] = value
    if model == "direct" and "kappa" in fixed:
        raise ConfigError("kappa is only defined for model = indirect", raw["kappa"][1], "kappa")

    axes = {}
    for key in ("axis1", "axis2"):
        if key in raw:
            text_value, line = raw[key]
            ax = _parse_axis(key, text_value, line)
            if ax.name in fixed:
                raise ConfigError(f"{key}: {ax.name} is both fixed and swept", line, key)
            if model == "direct" and ax.name == "kappa":
                raise ConfigError(f"{key}: kappa is only defined for model = indirect", line, key)
            axes[key] = ax
    if "axis2" in axes and "axis1" not in axes:
        raise ConfigError("axis2 given without axis1", raw["axis2"][1], "axis2")
    if len(axes) == 2 and axes["axis1"].name == axes["axis2"].name:
        raise ConfigError("axis1 and axis2 sweep the same parameter", raw["axis2"][1], "axis2")

    swept = {ax.name for ax in axes.values()}
    for name, value in DEFAULTS.items():
        if name not in fixed and name not in swept and (name != "kappa" or model == "indirect"):
            fixed[name] = value

    stop_kwargs = {}
    for name, kind in (("n_max", int), ("eps_settle", float), ("settle_window", int)):
        if name in raw:
            stop_kwargs[name] = _number(name, raw[name][0], raw[name][1], kind)
    try:
        stop = StopPolicy(**stop_kwargs)
    except ValueError as exc:
        raise ConfigError(f"stop policy: {exc}", key="n_max") from None

    outputs = ("N",)
    if "outputs" in raw:
        text_value, line = raw["outputs"]
        outputs = tuple(t for t in text_value.replace(",", " ").split())
        bad = [t for t in outputs if t not in OUTPUTS]
        if bad:
            raise ConfigError(f"outputs: unknown {bad}; choose from {', '.join(OUTPUTS)}", line, "outputs")

    search = SweepSpec.search
    if "search" in raw:
        text_value, line = raw["search"]
        parts = text_value.split()
        if len(parts) == 1:
            parts += ["0", repr(HALF_PI)]
        if len(parts) != 3 or _KEYS.get(parts[0].lower()) not in STRENGTHS:
            raise ConfigError("search: expected '<J|Omega|kappa> [<lo> <hi>]'", line, "search")
        search = _parse_axis("search", " ".join(parts + ["2"]), line)
        if search.name in swept:
            raise ConfigError(f"search: {search.name} is swept by an axis", line, "search")
        if model == "direct" and search.name == "kappa":
            raise ConfigError("search: kappa is only defined for model = indirect", line, "search")

    resolution = 1e-3
    if "resolution" in raw:
        resolution = _number("resolution", *raw["resolution"])
        if not resolution > 0:
            raise ConfigError("resolution must be > 0", raw["resolution"][1], "resolution")

    oracle_steps = 6
    if "oracle_steps" in raw:
        oracle_steps = _number("oracle_steps", raw["oracle_steps"][0], raw["oracle_steps"][1], int)
        if not 1 <= oracle_steps <= 8:
            raise ConfigError("oracle_steps must be in [1, 8]", raw["oracle_steps"][1], "oracle_steps")

    return SweepSpec(model=model, fixed=fixed, axis1=axes.get("axis1"), axis2=axes.get("axis2"),
                     outputs=outputs, stop=stop, search=search, resolution=resolution,
                     oracle_steps=oracle_steps)


# ---------------------------------------------------------------------------
# evaluation


def pool_map(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """Ordered map, optionally over a process pool; output order never depends on jobs."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SweepResult:
    """Long-format table plus the provenance lines written above it."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    provenance: tuple[str, ...]

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def provenance_lines(kind: str, spec: Optional[SweepSpec] = None, extra=()) -> tuple[str, ...]:
    from . import __version__

    lines = [f"qcollide {__version__} {kind}",
             "generated: " + datetime.now(timezone.utc).isoformat(timespec="seconds")]
    if spec is not None:
        lines += [f"{k} = {v}" for k, v in spec.echo()]
    lines += list(extra)
    return tuple(lines)


def _grid(spec: SweepSpec) -> list[dict]:
    if spec.axis1 is None:
        raise ConfigError("sweep needs axis1", key="axis1")
    points = [{spec.axis1.name: x} for x in spec.axis1.values()]
    if spec.axis2 is not None:
        points = [{**p, spec.axis2.name: y} for p in points for y in spec.axis2.values()]
    return points


def _evaluate_point(job):
    spec, params = job
    want_coh = "coherences" in spec.outputs
    try:
        traj = run_model(spec.config_at(**params))
    except IntegrityError as exc:
        tail = (None, None) if want_coh else ()
        return (None, False, exc.step or 0, f"integrity: {exc}") + tail
    nm = blp_measure(traj)
    row = (nm.N, traj.converged, nm.n_used, "" if traj.converged else "unconverged")
    if want_coh:
        excess = [r.C_R - r.C_S for r in traj.records[1:]]
        row += (max(excess) if excess else 0.0, traj.records[-1].C_S)
    return row


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    """Evaluate N over the 1-D or 2-D grid; rows are row-major over (axis1, axis2)."""
    points = _grid(spec)
    results = pool_map(_evaluate_point, [(spec, p) for p in points], jobs)
    names = tuple(ax.name for ax in spec.axes)
    columns = names + ("N", "converged", "n_used", "flag")
    if "coherences" in spec.outputs:
        columns += ("max_CR_minus_CS", "C_S_final")
    rows = tuple(tuple(p[n] for n in names) + r for p, r in zip(points, results))
    return SweepResult(columns=columns, rows=rows, provenance=provenance_lines("sweep", spec))


class ThresholdPoint(NamedTuple):
    T: float
    threshold: float
    lo: float
    hi: float
    resolved: bool


def _threshold_at(job):
    spec, T = job
    base = spec.config_at(T=T, **{spec.search.name: spec.search.lo})
    res = find_threshold(base, spec.search.name, spec.search.lo, spec.search.hi,
                         spec.resolution, EPS_N)
    return ThresholdPoint(T, res.threshold, res.bracket[0], res.bracket[1], res.resolved)


def trace_threshold_curve(spec: SweepSpec, jobs: int = 1) -> list[ThresholdPoint]:
    """Threshold of the search strength (Omega by default) at every T of axis1."""
    if spec.axis1 is None or spec.axis1.name != "T" or spec.axis2 is not None:
        raise ConfigError("threshold tracing needs axis1 = T and no axis2", key="axis1")
    return pool_map(_threshold_at, [(spec, T) for T in spec.axis1.values()], jobs)


def threshold_table(spec: SweepSpec, points: Sequence[ThresholdPoint]) -> SweepResult:
    name = spec.search.name
    rows = tuple(
        (p.T, p.threshold if p.resolved else None, p.lo, p.hi, p.resolved,
         "" if p.resolved else "unresolved")
        for p in points
    )
    extra = [f"search = {name} {spec.search.lo!r} {spec.search.hi!r}",
             f"resolution = {spec.resolution!r}"]
    return SweepResult(columns=("T", f"{name}_star", "lo", "hi", "resolved", "flag"), rows=rows,
                       provenance=provenance_lines("threshold", spec, extra))
