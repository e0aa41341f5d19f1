"""Tunable parameters, a ``key = value`` config file format and CLI overrides."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .errors import InvalidArgument


@dataclass(frozen=True)
class Config:
    roi_scales: tuple = field(default=(150, 200, 250, 300, 350), metadata={"key": "roi.scales"})
    roi_stride: int = field(default=4, metadata={"key": "roi.stride"})
    roi_expand: float = field(default=0.10, metadata={"key": "roi.expand"})
    smooth_sigma: float = field(default=1.0, metadata={"key": "edges.sigma"})
    edge_threshold: float = field(default=8.0, metadata={"key": "edges.grad_threshold"})
    scan_interval: int = field(default=2, metadata={"key": "edges.scan_interval"})
    min_segment_length: int = field(default=10, metadata={"key": "edges.min_length"})
    near_circular_entropy: float = field(default=2.8, metadata={"key": "entropy.near_circular"})
    arc_entropy: float = field(default=2.0, metadata={"key": "entropy.arc"})
    closed_gap: float = field(default=15.0, metadata={"key": "segment.closed_gap"})
    near_circular_rmse: float = field(default=2.0, metadata={"key": "fit.near_circular_rmse"})
    arc_min_length: int = field(default=25, metadata={"key": "arcs.min_length"})
    arc_rmse: float = field(default=2.0, metadata={"key": "arcs.rmse"})
    css_window: int = field(default=7, metadata={"key": "corners.window"})
    css_sigma: float = field(default=3.0, metadata={"key": "corners.sigma"})
    corner_angle_deg: float = field(default=30.0, metadata={"key": "corners.angle_deg"})
    min_minor_axis: float = field(default=3.0, metadata={"key": "fit.min_minor_axis"})
    candidate_rmse: float = field(default=3.0, metadata={"key": "candidates.rmse"})
    max_arcs: int = field(default=10, metadata={"key": "candidates.max_arcs"})
    cost_threshold: float = field(default=50.0, metadata={"key": "selection.cost_threshold"})
    eps_threshold: float = field(default=0.2, metadata={"key": "eval.eps_threshold"})
    seed: int = field(default=2024, metadata={"key": "synth.seed"})
    timings: bool = field(default=True, metadata={"key": "report.timings"})

    def __post_init__(self):
        scales = tuple(int(s) for s in self.roi_scales)
        object.__setattr__(self, "roi_scales", scales)
        if not scales or min(scales) <= 0:
            raise InvalidArgument("roi.scales must be a non-empty list of positive sizes")
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name in ("roi_scales", "timings", "seed"):
                continue
            if not v > 0:
                raise InvalidArgument(f"{f.metadata['key']} must be positive, got {v}")
        if not self.roi_expand < 10:
            raise InvalidArgument("roi.expand is a fraction of the window side")

    def to_json(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.metadata["key"]] = list(v) if isinstance(v, tuple) else v
        return out

    def replace(self, **kw) -> "Config":
        return dataclasses.replace(self, **kw)

    def with_overrides(self, pairs) -> "Config":
        """Apply ``{dotted.key: value}`` overrides, converting values to the field's type."""
        by_key = {f.metadata["key"]: f for f in dataclasses.fields(self)}
        changes = {}
        for key, value in dict(pairs).items():
            if key not in by_key:
                raise InvalidArgument(f"unknown config key {key!r}")
            f = by_key[key]
            changes[f.name] = _coerce(key, value, type(getattr(self, f.name)))
        return dataclasses.replace(self, **changes)


def _coerce(key, value, kind):
    if isinstance(value, str):
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            pass
    try:
        if kind is tuple:
            if isinstance(value, (int, float)):
                value = [value]
            return tuple(int(v) for v in value)
        if kind is bool:
            if isinstance(value, str):
                low = value.lower()
                if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                    raise ValueError(value)
                return low in ("true", "yes", "1", "on")
            return bool(value)
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        return float(value)
    except (TypeError, ValueError):
        raise InvalidArgument(f"bad value for {key}: {value!r}") from None


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; values are JSON where possible."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgument(f"config line {lineno}: expected 'key = value'")
        k, v = line.split("=", 1)
        pairs[k.strip()] = v.strip()
    return pairs


def load_config(path=None, overrides=None, base: Config | None = None) -> Config:
    cfg = base or Config()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            cfg = cfg.with_overrides(parse_config_text(fh.read()))
    if overrides:
        cfg = cfg.with_overrides(overrides)
    return cfg
