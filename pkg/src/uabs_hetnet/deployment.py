"""Network geometry: PPP drops, hexagonal UABS placement and MBS destruction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "Region",
    "NetworkLayout",
    "sample_ppp",
    "place_hex_grid",
    "destroy_mbs",
    "layout_to_dict",
    "layout_from_dict",
]

DEFAULT_ALTITUDE = 121.92  # 400 ft


@dataclass(frozen=True)
class Region:
    """Rectangle ``[0, width] x [0, height]`` in meters."""

    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"region dimensions must be positive, got {self.width}x{self.height}")

    @property
    def area_km2(self) -> float:
        return self.width * self.height / 1e6

    @property
    def center(self) -> tuple[float, float]:
        return self.width / 2.0, self.height / 2.0

    def contains(self, xy: np.ndarray) -> np.ndarray:
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        return (
            (xy[:, 0] >= 0) & (xy[:, 0] <= self.width)
            & (xy[:, 1] >= 0) & (xy[:, 1] <= self.height)
        )


def _as_points(a, ncols: int) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.size == 0:
        return np.empty((0, ncols))
    arr = np.atleast_2d(arr)
    if arr.shape[1] != ncols:
        raise ValueError(f"expected points with {ncols} coordinates, got shape {arr.shape}")
    return arr


@dataclass
class NetworkLayout:
    """Positions of the macro tier, the aerial tier and the users.

    ``mbs`` and ``ue`` are ``(n, 2)`` planar coordinates, ``uabs`` is
    ``(n, 3)`` with the altitude in the last column. Macro antennas sit at
    ``mbs_height`` (0 m unless overridden).
    """

    region: Region
    mbs: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    uabs: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    ue: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    mbs_height: float = 0.0

    def __post_init__(self):
        self.mbs = _as_points(self.mbs, 2)
        self.uabs = _as_points(self.uabs, 3)
        self.ue = _as_points(self.ue, 2)

    @property
    def n_mbs(self) -> int:
        return len(self.mbs)

    @property
    def n_uabs(self) -> int:
        return len(self.uabs)

    @property
    def n_ue(self) -> int:
        return len(self.ue)

    def validate(self) -> "NetworkLayout":
        """Check the containment and cardinality invariants, return self."""
        if self.n_ue < 1:
            raise ValueError("layout needs at least one UE")
        if self.n_mbs + self.n_uabs < 1:
            raise ValueError("layout has no serving candidates (no MBS and no UABS)")
        for name, pts in (("mbs", self.mbs), ("uabs", self.uabs), ("ue", self.ue)):
            if len(pts) and not self.region.contains(pts[:, :2]).all():
                raise ValueError(f"{name} point outside the region")
        if self.n_uabs:
            alt = self.uabs[:, 2]
            if not (alt > 0).all():
                raise ValueError("UABS altitude must be positive")
            if not (alt == alt[0]).all():
                raise ValueError("all UABSs must fly at the same altitude")
        if self.mbs_height < 0:
            raise ValueError("mbs_height must be non-negative")
        return self

    def with_uabs(self, uabs) -> "NetworkLayout":
        return replace(self, uabs=_as_points(uabs, 3))


def sample_ppp(intensity: float, region: Region, rng: np.random.Generator) -> np.ndarray:
    """Draw a homogeneous Poisson point process over ``region``.

    Args:
        intensity: points per km².
        region: sampling window.
        rng: numpy random generator.

    Returns:
        ``(n, 2)`` array; ``n`` is Poisson with mean ``intensity * area``.
    """
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    n = rng.poisson(intensity * region.area_km2)
    xy = rng.uniform(size=(n, 2))
    return xy * np.array([region.width, region.height])


def _hex_ring(k: int) -> list[tuple[float, float]]:
    # unit-pitch lattice, ring k walked counter-clockwise from angle 0
    if k == 0:
        return [(0.0, 0.0)]
    corners = [(math.cos(math.pi / 3 * j), math.sin(math.pi / 3 * j)) for j in range(7)]
    ring = []
    for side in range(6):
        (ax, ay), (bx, by) = corners[side], corners[side + 1]
        for step in range(k):
            t = step / k
            ring.append((k * (ax + t * (bx - ax)), k * (ay + t * (by - ay))))
    return ring


def _hex_cluster(n: int) -> np.ndarray:
    pts: list[tuple[float, float]] = []
    k = 0
    while len(pts) < n:
        ring = _hex_ring(k)
        need = n - len(pts)
        if need >= len(ring):
            pts.extend(ring)
        else:
            # spread a partial ring evenly around its circumference
            idx = [(i * len(ring)) // need for i in range(need)]
            pts.extend(ring[i] for i in idx)
        k += 1
    return np.array(pts)


def place_hex_grid(n_uabs: int, region: Region, altitude: float = DEFAULT_ALTITUDE) -> np.ndarray:
    """Deterministic hexagonal-lattice placement of ``n_uabs`` UABSs.

    Rings of the lattice are filled inside-out around the region center.
    The pitch gives every UABS an equal share of the area, shrunk if needed
    so the whole cluster stays inside the region.
    """
    if n_uabs < 1:
        raise ValueError("n_uabs must be at least 1")
    if altitude <= 0:
        raise ValueError("altitude must be positive")
    unit = _hex_cluster(n_uabs)
    pitch = math.sqrt(2.0 * region.width * region.height / (math.sqrt(3.0) * n_uabs))
    ext_x = np.abs(unit[:, 0]).max()
    ext_y = np.abs(unit[:, 1]).max()
    if ext_x > 0:
        pitch = min(pitch, region.width / 2.0 / ext_x)
    if ext_y > 0:
        pitch = min(pitch, region.height / 2.0 / ext_y)
    cx, cy = region.center
    xy = unit * pitch + np.array([cx, cy])
    # rounding at the boundary must not break containment
    xy[:, 0] = np.clip(xy[:, 0], 0.0, region.width)
    xy[:, 1] = np.clip(xy[:, 1], 0.0, region.height)
    return np.column_stack([xy, np.full(n_uabs, float(altitude))])


def destroy_mbs(layout: NetworkLayout, fraction: float, rng: np.random.Generator) -> NetworkLayout:
    """Remove ``round(fraction * n_mbs)`` MBSs uniformly at random.

    Rounding is half-up. Survivors keep their original order; UEs and
    UABSs are untouched.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    n = layout.n_mbs
    n_kill = min(n, int(math.floor(fraction * n + 0.5)))
    if n_kill == 0:
        return replace(layout, mbs=layout.mbs.copy())
    killed = rng.choice(n, size=n_kill, replace=False)
    keep = np.ones(n, dtype=bool)
    keep[killed] = False
    return replace(layout, mbs=layout.mbs[keep])


def layout_to_dict(layout: NetworkLayout) -> dict:
    return {
        "region": {"width": layout.region.width, "height": layout.region.height},
        "mbs_height": layout.mbs_height,
        "mbs": [{"x": float(x), "y": float(y)} for x, y in layout.mbs],
        "uabs": [{"x": float(x), "y": float(y), "altitude": float(z)} for x, y, z in layout.uabs],
        "ue": [{"x": float(x), "y": float(y)} for x, y in layout.ue],
    }


def layout_from_dict(d: dict) -> NetworkLayout:
    return NetworkLayout(
        region=Region(d["region"]["width"], d["region"]["height"]),
        mbs=[(p["x"], p["y"]) for p in d["mbs"]],
        uabs=[(p["x"], p["y"], p["altitude"]) for p in d["uabs"]],
        ue=[(p["x"], p["y"]) for p in d["ue"]],
        mbs_height=d.get("mbs_height", 0.0),
    )
