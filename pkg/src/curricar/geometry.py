"""Road geometry: centerlines assembled from line and circular-arc primitives.

A :class:`Track` is an immutable, arc-length-parameterized centerline with a
constant width. It answers every spatial query the simulator needs:

- nearest-point projection of a pose into track coordinates (s, d, beta),
- distance along a ray to the first road-boundary intersection,
- on/off-road tests and curvature lookups.

Sign conventions: d and beta are positive to the left of the direction of
travel; beta is wrapped to (-pi, pi].
"""

from __future__ import annotations

import bisect
import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import FarFromTrack, OffRoadOrigin

TRACK_WIDTH = 10.0  # meters; every built-in layout uses this
FAR_FROM_TRACK_MARGIN = 20.0  # projection refuses points beyond width/2 + this

_TWO_PI = 2.0 * math.pi
_TIE_EPS = 1e-12  # distance tie-break threshold for projection


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return math.pi - (math.pi - a) % _TWO_PI


class TrackKind(enum.Enum):
    STRAIGHT = "straight"
    UTURN = "uturn"
    CIRCUIT = "circuit"


@dataclass(frozen=True)
class TrackFrame:
    """A pose expressed relative to the centerline.

    Attributes
    ----------
    s : float
        Arc-length position along the centerline, meters.
    d : float
        Signed distance to the nearest centerline point, meters. Positive
        when the point lies left of the local direction of travel. Past an
        open end the nearest point clamps to the endpoint, so d grows with
        the overshoot and off-road detection still fires.
    beta : float
        Heading error against the centerline tangent, radians in (-pi, pi].
    """

    s: float
    d: float
    beta: float


def is_off_road(frame: TrackFrame, width: float) -> bool:
    """True iff the pose lies strictly outside the road. |d| == width/2 is on."""
    return abs(frame.d) > 0.5 * width


@dataclass(frozen=True)
class Segment:
    """Straight centerline piece starting at (x0, y0) with a fixed heading."""

    x0: float
    y0: float
    heading: float
    length: float
    s0: float = 0.0

    @property
    def tangent(self) -> tuple[float, float]:
        return math.cos(self.heading), math.sin(self.heading)

    def end_pose(self) -> tuple[float, float, float]:
        tx, ty = self.tangent
        return self.x0 + self.length * tx, self.y0 + self.length * ty, self.heading

    def point_at(self, u: float) -> tuple[float, float, float, float]:
        tx, ty = self.tangent
        return self.x0 + u * tx, self.y0 + u * ty, tx, ty

    def curvature(self) -> float:
        return 0.0

    def project(self, px: float, py: float):
        """Nearest point: (distance, local s, qx, qy, tx, ty)."""
        tx, ty = self.tangent
        u = (px - self.x0) * tx + (py - self.y0) * ty
        u = min(max(u, 0.0), self.length)
        qx = self.x0 + u * tx
        qy = self.y0 + u * ty
        return math.hypot(px - qx, py - qy), u, qx, qy, tx, ty


@dataclass(frozen=True)
class Arc:
    """Circular centerline piece. sweep > 0 turns left (counterclockwise)."""

    cx: float
    cy: float
    radius: float
    ang0: float
    sweep: float
    s0: float = 0.0

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    def _pose_at_angle(self, phi: float) -> tuple[float, float, float, float]:
        x = self.cx + self.radius * math.cos(phi)
        y = self.cy + self.radius * math.sin(phi)
        if self.sweep >= 0.0:
            return x, y, -math.sin(phi), math.cos(phi)
        return x, y, math.sin(phi), -math.cos(phi)

    def end_pose(self) -> tuple[float, float, float]:
        phi = self.ang0 + self.sweep
        x, y, tx, ty = self._pose_at_angle(phi)
        return x, y, math.atan2(ty, tx)

    def point_at(self, u: float) -> tuple[float, float, float, float]:
        phi = self.ang0 + math.copysign(u / self.radius, self.sweep)
        return self._pose_at_angle(phi)

    def curvature(self) -> float:
        return math.copysign(1.0 / self.radius, self.sweep)

    def project(self, px: float, py: float):
        """Nearest point: (distance, local s, qx, qy, tx, ty).

        A point at the arc center is equidistant from the whole arc; it is
        resolved to the arc start (smallest local s) for determinism.
        """
        rx = px - self.cx
        ry = py - self.cy
        if math.hypot(rx, ry) < 1e-12:
            u_ang = 0.0
        else:
            phi = math.atan2(ry, rx)
            sw = abs(self.sweep)
            rel = (phi - self.ang0) % _TWO_PI if self.sweep >= 0.0 else (self.ang0 - phi) % _TWO_PI
            if rel <= sw:
                u_ang = rel
            else:
                # outside the covered span: clamp to the angularly closer end
                u_ang = sw if (rel - sw) < (_TWO_PI - rel) else 0.0
        phi_q = self.ang0 + math.copysign(u_ang, self.sweep)
        qx, qy, tx, ty = self._pose_at_angle(phi_q)
        dist = math.hypot(px - qx, py - qy)
        return dist, u_ang * self.radius, qx, qy, tx, ty


Primitive = Segment | Arc


class Track:
    """Immutable road geometry; safe for concurrent read access."""

    def __init__(self, kind: TrackKind, primitives: tuple[Primitive, ...], width: float, closed: bool):
        if width <= 0.0:
            raise ValueError("width must be positive")
        self.kind = kind
        self.width = float(width)
        self.closed = bool(closed)
        self.primitives = tuple(primitives)
        self._validate()
        self._s0 = [p.s0 for p in self.primitives]
        self.total_length = self.primitives[-1].s0 + self.primitives[-1].length
        self._seg_table, self._arc_table = self._boundary_tables()

    def _validate(self) -> None:
        if not self.primitives:
            raise ValueError("track needs at least one primitive")
        prev_end = None
        prev_s = None
        for p in self.primitives:
            if p.length <= 0.0:
                raise ValueError("primitive with non-positive length")
            if prev_s is not None and p.s0 <= prev_s:
                raise ValueError("cumulative arc lengths must be strictly increasing")
            prev_s = p.s0
            if prev_end is not None:
                ex, ey, eh = prev_end
                sx, sy, *_ = p.point_at(0.0)
                if math.hypot(sx - ex, sy - ey) > 1e-9:
                    raise ValueError("primitives are not position-continuous")
                _, _, tx, ty = p.point_at(0.0)
                if abs(wrap_angle(math.atan2(ty, tx) - eh)) > 1e-9:
                    raise ValueError("primitives are not tangent-continuous")
            prev_end = p.end_pose()
        if self.closed:
            ex, ey, _ = self.primitives[-1].end_pose()
            sx, sy, *_ = self.primitives[0].point_at(0.0)
            if math.hypot(sx - ex, sy - ey) > 1e-6:
                raise ValueError("closed track does not close")

    def _boundary_tables(self) -> tuple[np.ndarray, np.ndarray]:
        """Offset curves at +-width/2 flattened for the raycast kernel."""
        hw = 0.5 * self.width
        segs: list[list[float]] = []
        arcs: list[list[float]] = []
        for p in self.primitives:
            if isinstance(p, Segment):
                tx, ty = p.tangent
                for side in (+hw, -hw):
                    segs.append([p.x0 - side * ty, p.y0 + side * tx, tx, ty, p.length])
            else:
                for r in (p.radius - hw, p.radius + hw):
                    if r <= 0.0:
                        raise ValueError("arc radius too small for the road width")
                    arcs.append([p.cx, p.cy, r, p.ang0, p.sweep])
        seg_table = np.array(segs, dtype=np.float64).reshape(-1, 5)
        arc_table = np.array(arcs, dtype=np.float64).reshape(-1, 5)
        return seg_table, arc_table

    # -- queries ---------------------------------------------------------

    def start_pose(self) -> tuple[float, float, float]:
        x, y, tx, ty = self.primitives[0].point_at(0.0)
        return x, y, math.atan2(ty, tx)

    def _locate(self, s: float) -> tuple[Primitive, float]:
        if self.closed:
            s = s % self.total_length
        else:
            s = min(max(s, 0.0), self.total_length)
        i = bisect.bisect_right(self._s0, s) - 1
        i = max(i, 0)
        p = self.primitives[i]
        return p, min(s - p.s0, p.length)

    def point_at(self, s: float) -> tuple[float, float, float]:
        """Centerline point and tangent heading at arc length s."""
        p, u = self._locate(s)
        x, y, tx, ty = p.point_at(u)
        return x, y, math.atan2(ty, tx)

    def curvature_at(self, s: float) -> float:
        p, _ = self._locate(s)
        return p.curvature()

    def distance_to_centerline(self, px: float, py: float) -> float:
        return min(p.project(px, py)[0] for p in self.primitives)

    def project(self, px: float, py: float, heading: float) -> TrackFrame:
        """Project a pose onto the centerline.

        Raises FarFromTrack when the point is beyond width/2 plus a 20 m
        margin. Between two equally distant candidates the smaller s wins.
        """
        best = None
        for p in self.primitives:
            dist, u, qx, qy, tx, ty = p.project(px, py)
            s = p.s0 + u
            if self.closed and s >= self.total_length - 1e-9:
                s -= self.total_length
            if (
                best is None
                or dist < best[0] - _TIE_EPS
                or (abs(dist - best[0]) <= _TIE_EPS and s < best[1])
            ):
                best = (dist, s, qx, qy, tx, ty)
        dist, s, qx, qy, tx, ty = best
        if dist > 0.5 * self.width + FAR_FROM_TRACK_MARGIN:
            raise FarFromTrack(f"point ({px:.2f}, {py:.2f}) is {dist:.2f} m from the centerline")
        cross = tx * (py - qy) - ty * (px - qx)
        d = dist if cross >= 0.0 else -dist
        beta = wrap_angle(heading - math.atan2(ty, tx))
        return TrackFrame(s=s, d=d, beta=beta)

    def ray_distances(
        self,
        px: float,
        py: float,
        angles: np.ndarray,
        max_range: float,
        validate: bool = True,
    ) -> np.ndarray:
        """Distances to the first boundary hit along each world-frame angle.

        Results are capped at max_range. With validate=True the origin must
        be on the road (OffRoadOrigin otherwise); validate=False keeps the
        pure intersection semantics for terminal-step sensing.
        """
        if validate and self.distance_to_centerline(px, py) > 0.5 * self.width + 1e-9:
            raise OffRoadOrigin(f"ray origin ({px:.2f}, {py:.2f}) is off the road")
        angles = np.ascontiguousarray(angles, dtype=np.float64)
        return _kernels.raycast(px, py, angles, self._seg_table, self._arc_table, float(max_range))

    def ray_distance(self, px: float, py: float, angle: float, max_range: float) -> float:
        return float(self.ray_distances(px, py, np.array([angle]), max_range)[0])

    def sample_centerline(self, spacing: float) -> tuple[np.ndarray, np.ndarray]:
        """Dense (s, xy) samples of the centerline, for rendering and tests."""
        n = max(2, int(math.ceil(self.total_length / spacing)) + 1)
        s = np.linspace(0.0, self.total_length, n)
        if self.closed:
            s = s[:-1]
        pts = np.empty((s.shape[0], 2))
        for i, si in enumerate(s):
            x, y, _ = self.point_at(float(si))
            pts[i, 0] = x
            pts[i, 1] = y
        return s, pts

    # -- export ----------------------------------------------------------

    def to_json_dict(self) -> dict:
        prims = []
        for p in self.primitives:
            if isinstance(p, Segment):
                prims.append(
                    {
                        "type": "segment",
                        "x0": p.x0,
                        "y0": p.y0,
                        "heading": p.heading,
                        "length": p.length,
                        "s0": p.s0,
                    }
                )
            else:
                prims.append(
                    {
                        "type": "arc",
                        "cx": p.cx,
                        "cy": p.cy,
                        "radius": p.radius,
                        "ang0": p.ang0,
                        "sweep": p.sweep,
                        "length": p.length,
                        "s0": p.s0,
                    }
                )
        return {
            "kind": self.kind.value,
            "width": self.width,
            "closed": self.closed,
            "total_length": self.total_length,
            "primitives": prims,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)


# -- construction ----------------------------------------------------------

def _chain(steps) -> tuple[Primitive, ...]:
    """Build G1-continuous primitives from ('s', length) / ('a', radius, sweep) steps."""
    x, y, h = 0.0, 0.0, 0.0
    s0 = 0.0
    prims: list[Primitive] = []
    for step in steps:
        if step[0] == "s":
            seg = Segment(x0=x, y0=y, heading=h, length=float(step[1]), s0=s0)
            prims.append(seg)
            x, y, h = seg.end_pose()
            s0 += seg.length
        else:
            _, radius, sweep = step
            side = 1.0 if sweep >= 0.0 else -1.0
            cx = x - side * radius * math.sin(h)
            cy = y + side * radius * math.cos(h)
            arc = Arc(cx=cx, cy=cy, radius=float(radius), ang0=math.atan2(y - cy, x - cx), sweep=float(sweep), s0=s0)
            prims.append(arc)
            x, y, h = arc.end_pose()
            s0 += arc.length
    return tuple(prims)


_QUARTER = 0.5 * math.pi

# Closed circuit: a rounded non-convex loop mixing both turn directions,
# radii 25-40 m, about 1.84 km around. Chosen so several braking-distance
# scale features (~80 m) fit between corners.
_CIRCUIT_STEPS = (
    ("s", 465.0),
    ("a", 40.0, _QUARTER),
    ("s", 160.0),
    ("a", 40.0, _QUARTER),
    ("s", 150.0),
    ("a", 25.0, -_QUARTER),
    ("s", 120.0),
    ("a", 40.0, _QUARTER),
    ("s", 250.0),
    ("a", 40.0, _QUARTER),
    ("s", 345.0),
    ("a", 40.0, _QUARTER),
)


def build_track(kind: TrackKind, width: float = TRACK_WIDTH) -> Track:
    """Construct one of the three built-in road layouts.

    straight: a single 1000 m segment. uturn: 200 m out, a 180-degree arc of
    radius 30 m, 200 m back. circuit: a closed 12-primitive loop, ~1843 m.
    """
    if kind == TrackKind.STRAIGHT:
        return Track(kind, _chain((("s", 1000.0),)), width, closed=False)
    if kind == TrackKind.UTURN:
        steps = (("s", 200.0), ("a", 30.0, math.pi), ("s", 200.0))
        return Track(kind, _chain(steps), width, closed=False)
    if kind == TrackKind.CIRCUIT:
        return Track(kind, _chain(_CIRCUIT_STEPS), width, closed=True)
    raise ValueError(f"unknown track kind: {kind!r}")
