"""Gap-and-hurdle course: a piecewise-constant height profile along x."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class Hurdle:
    height: float = 0.2
    width: float = 0.05


@dataclass(frozen=True)
class CourseSpec:
    """Track geometry. The robot starts at x = 0 and runs toward ``goal_x``."""

    gap_x: float = 2.0
    gap_size: float = 0.9
    gap_depth: float = 1.0
    hurdle: Optional[Hurdle] = None
    track_length: float = 6.0
    track_width: float = 2.0
    goal_x: float = 6.0

    def __post_init__(self):
        if isinstance(self.hurdle, dict):
            object.__setattr__(self, "hurdle", Hurdle(**self.hurdle))
        self.validate()

    def validate(self):
        if not self.gap_x > 0:
            raise ConfigurationError(f"gap_x must be positive, got {self.gap_x}")
        if self.gap_size < 0:
            raise ConfigurationError(f"gap_size must be >= 0, got {self.gap_size}")
        if not self.gap_x + self.gap_size < self.goal_x:
            raise ConfigurationError("gap must end before the goal")
        if self.gap_depth <= 0:
            raise ConfigurationError("gap_depth must be positive")
        if self.hurdle is not None:
            if self.hurdle.height < 0 or self.hurdle.width <= 0:
                raise ConfigurationError(f"invalid hurdle {self.hurdle}")

    @property
    def gap_end(self) -> float:
        return self.gap_x + self.gap_size

    def profile(self) -> tuple[np.ndarray, np.ndarray]:
        """Breakpoints and segment heights.

        Segment ``i`` covers ``[edges[i-1], edges[i])``; ``heights[0]`` applies
        left of the first edge and ``heights[-1]`` right of the last one.
        """
        edges: list[float] = []
        heights: list[float] = [0.0]
        if self.gap_size > 0:
            pieces = [(self.gap_x, self.gap_end, -self.gap_depth)]
            if self.hurdle is not None:
                c = self.gap_x + 0.5 * self.gap_size
                lo = max(self.gap_x, c - 0.5 * self.hurdle.width)
                hi = min(self.gap_end, c + 0.5 * self.hurdle.width)
                pieces = [
                    (self.gap_x, lo, -self.gap_depth),
                    (lo, hi, self.hurdle.height),
                    (hi, self.gap_end, -self.gap_depth),
                ]
            for a, b, h in pieces:
                if b - a <= 0:
                    continue
                if edges and edges[-1] == a:
                    heights[-1] = h
                else:
                    edges.append(a)
                    heights.append(h)
                edges.append(b)
                heights.append(0.0)
        return np.asarray(edges, dtype=np.float64), np.asarray(heights, dtype=np.float64)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CourseSpec":
        d = dict(d)
        if d.get("hurdle") is not None:
            d["hurdle"] = Hurdle(**d["hurdle"])
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CourseSpec":
        return cls.from_dict(json.loads(text))

    def with_gap(self, gap_x: float, gap_size: float) -> "CourseSpec":
        return replace(self, gap_x=gap_x, gap_size=gap_size)


def height_at(x, spec: CourseSpec):
    """Terrain height at ``x`` (scalar or array). Track level is z = 0."""
    edges, heights = spec.profile()
    idx = np.searchsorted(edges, x, side="right")
    h = heights[idx]
    return float(h) if np.ndim(h) == 0 else h


def _check_range(name, rng_range):
    lo, hi = rng_range
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
        raise ConfigurationError(f"invalid {name} range {rng_range!r}")
    return float(lo), float(hi)


def sample_course(
    rng: np.random.Generator,
    gap_size_range: tuple[float, float],
    gap_x_range: tuple[float, float],
    hurdle: Optional[Hurdle] = None,
    base: Optional[CourseSpec] = None,
) -> CourseSpec:
    """Draw gap size and gap start uniformly from their ranges."""
    s_lo, s_hi = _check_range("gap_size", gap_size_range)
    x_lo, x_hi = _check_range("gap_x", gap_x_range)
    # draw order is fixed so a seed maps to one course
    g_s = s_lo if s_lo == s_hi else float(rng.uniform(s_lo, s_hi))
    g_x = x_lo if x_lo == x_hi else float(rng.uniform(x_lo, x_hi))
    base = base or CourseSpec()
    return replace(base, gap_x=g_x, gap_size=g_s, hurdle=hurdle)
