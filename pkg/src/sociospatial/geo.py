"""Great-circle distances and inverse-distance spatial weights.

Distances are computed with the haversine formula on a sphere of radius
6371.0088 km (IUGG mean). The radius cancels in every normalized weight, so
any fixed value yields identical weights; the scale-invariance tests pin this.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .coredata import Geography
from .errors import CoincidentCentroidError

EARTH_RADIUS_KM = 6371.0088


def haversine(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in kilometers between two (lat, lon) points."""
    lat1, lon1 = np.radians(a)
    lat2, lon2 = np.radians(b)
    s = (
        np.sin(0.5 * (lat2 - lat1)) ** 2
        + np.cos(lat1) * np.cos(lat2) * np.sin(0.5 * (lon2 - lon1)) ** 2
    )
    return float(2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(s))))


def pairwise_distances(
    lats: np.ndarray, lons: np.ndarray, radius_km: float = EARTH_RADIUS_KM
) -> np.ndarray:
    """Dense symmetric matrix of great-circle distances, zero diagonal."""
    phi = np.radians(np.asarray(lats, dtype=float))
    lam = np.radians(np.asarray(lons, dtype=float))
    dphi = 0.5 * (phi[:, None] - phi[None, :])
    dlam = 0.5 * (lam[:, None] - lam[None, :])
    s = np.sin(dphi) ** 2 + np.cos(phi)[:, None] * np.cos(phi)[None, :] * np.sin(dlam) ** 2
    d = 2.0 * radius_km * np.arcsin(np.sqrt(np.minimum(1.0, s)))
    # enforce exact symmetry and a clean diagonal against round-off
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d


@dataclass(eq=False)
class DistanceMatrix:
    """Precomputed pairwise distances over an ordered region index."""

    region_index: tuple[str, ...]
    values: np.ndarray
    radius_km: float = EARTH_RADIUS_KM

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = len(self.region_index)
        if self.values.shape != (n, n):
            raise ValueError(f"distance matrix shape {self.values.shape} != ({n}, {n})")
        self._pos = {code: k for k, code in enumerate(self.region_index)}

    @classmethod
    def from_geography(
        cls,
        geo: Geography,
        regions: Sequence[str] | None = None,
        radius_km: float = EARTH_RADIUS_KM,
    ) -> "DistanceMatrix":
        codes = tuple(sorted(regions if regions is not None else geo.centroids))
        lats = np.array([geo.latlon(c)[0] for c in codes])
        lons = np.array([geo.latlon(c)[1] for c in codes])
        values = pairwise_distances(lats, lons, radius_km)
        off = values[~np.eye(len(codes), dtype=bool)]
        if len(codes) > 1 and (off <= 0.0).any():
            a, b = np.argwhere((values <= 0.0) & ~np.eye(len(codes), dtype=bool))[0]
            raise CoincidentCentroidError(codes[a], codes[b])
        return cls(codes, values, radius_km)

    @property
    def n_regions(self) -> int:
        return len(self.region_index)

    def index_of(self, code: str) -> int:
        try:
            return self._pos[code]
        except KeyError:
            raise KeyError(f"region {code} not in distance matrix") from None

    def distance(self, i: str, j: str) -> float:
        return float(self.values[self.index_of(i), self.index_of(j)])

    def submatrix(self, regions: Sequence[str]) -> np.ndarray:
        idx = np.array([self.index_of(r) for r in regions])
        return self.values[np.ix_(idx, idx)]

    def scaled(self, factor: float) -> "DistanceMatrix":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return DistanceMatrix(self.region_index, self.values * factor, self.radius_km * factor)

    def save(self, path: str) -> None:
        """Binary cache: one JSON header line, then row-major float64 bytes."""
        header = {
            "radius_km": self.radius_km,
            "regions": list(self.region_index),
        }
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
            fh.write(b"\n")
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str) -> "DistanceMatrix":
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode("utf-8"))
            codes = tuple(header["regions"])
            n = len(codes)
            data = np.frombuffer(fh.read(), dtype="<f8").reshape(n, n)
        return cls(codes, data.copy(), float(header["radius_km"]))


def inverse_distance_weights(distances: np.ndarray) -> np.ndarray:
    """Row-normalize 1/d over alters; expects zero diagonal, positive elsewhere."""
    n = distances.shape[0]
    inv = np.zeros_like(distances)
    off = ~np.eye(n, dtype=bool)
    inv[off] = 1.0 / distances[off]
    return inv / inv.sum(axis=1, keepdims=True)


def spatial_weights(
    geo: Geography, focal: str, universe: Sequence[str]
) -> dict[str, float]:
    """Inverse-distance weights of ``focal`` toward each alter in ``universe``.

    Weights are proportional to 1/d and sum to one; ``focal`` itself is
    skipped if present in the universe.
    """
    alters = [code for code in universe if code != focal]
    if not alters:
        raise ValueError(f"region {focal}: universe contains no alters")
    origin = geo.latlon(focal)
    inverse = {}
    for code in alters:
        d = haversine(origin, geo.latlon(code))
        if d <= 0.0:
            raise CoincidentCentroidError(focal, code)
        inverse[code] = 1.0 / d
    total = sum(inverse.values())
    return {code: value / total for code, value in inverse.items()}
