"""Great-circle distance and inverse-distance weight behavior."""

import math

import numpy as np
import pytest

from sociospatial.coredata import Geography
from sociospatial.errors import CoincidentCentroidError
from sociospatial.geo import (
    DistanceMatrix,
    EARTH_RADIUS_KM,
    haversine,
    inverse_distance_weights,
    pairwise_distances,
    spatial_weights,
)

from conftest import equator_geography


class _StubGeo:
    """Centroid source without Geography's duplicate validation."""

    def __init__(self, centroids):
        self.centroids = centroids

    def latlon(self, code):
        return self.centroids[code]

    def __contains__(self, code):
        return code in self.centroids


def law_of_cosines_km(a, b):
    """Independent spherical-law-of-cosines distance, for cross-checking."""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    cosine = math.sin(lat1) * math.sin(lat2) + math.cos(lat1) * math.cos(lat2) * math.cos(
        lon2 - lon1
    )
    return EARTH_RADIUS_KM * math.acos(max(-1.0, min(1.0, cosine)))


class TestHaversine:
    def test_identity(self):
        assert haversine((40.4, -80.0), (40.4, -80.0)) == 0.0

    def test_antipodal_on_equator(self):
        assert haversine((0.0, 0.0), (0.0, 180.0)) == pytest.approx(
            math.pi * EARTH_RADIUS_KM, rel=1e-12
        )

    def test_against_law_of_cosines(self):
        a, b = (40.4406, -79.9959), (37.8715, -122.2730)
        assert abs(haversine(a, b) - law_of_cosines_km(a, b)) < 0.1

    @pytest.mark.parametrize("seed", range(4))
    def test_random_points_match_oracle(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(50):
            a = (rng.uniform(-80, 80), rng.uniform(-179, 179))
            b = (rng.uniform(-80, 80), rng.uniform(-179, 179))
            assert abs(haversine(a, b) - law_of_cosines_km(a, b)) < 0.1
            assert haversine(a, b) == pytest.approx(haversine(b, a), abs=1e-9)

    def test_pairwise_matches_scalar(self, rng):
        lats = rng.uniform(-60, 60, 8)
        lons = rng.uniform(-170, 170, 8)
        matrix = pairwise_distances(lats, lons)
        assert (matrix == matrix.T).all()
        assert (np.diag(matrix) == 0.0).all()
        for i in range(8):
            for j in range(8):
                assert matrix[i, j] == pytest.approx(
                    haversine((lats[i], lons[i]), (lats[j], lons[j])), abs=1e-8
                )


class TestSpatialWeights:
    def test_equidistant_alters(self):
        geo = equator_geography({"01001": 0.0, "02001": 250.0, "03001": -250.0})
        w = spatial_weights(geo, "01001", ["02001", "03001"])
        assert w["02001"] == pytest.approx(0.5, abs=1e-12)
        assert w["03001"] == pytest.approx(0.5, abs=1e-12)

    def test_100km_vs_300km(self):
        geo = equator_geography({"01001": 0.0, "02001": 100.0, "03001": 300.0})
        w = spatial_weights(geo, "01001", ["02001", "03001"])
        assert w["02001"] == pytest.approx(0.75, abs=1e-9)
        assert w["03001"] == pytest.approx(0.25, abs=1e-9)
        assert sum(w.values()) == pytest.approx(1.0, abs=1e-12)

    def test_coincident_centroid(self):
        # Geography rejects duplicates at load; the weight computation still
        # guards against zero distances from unvalidated centroid sources.
        geo = _StubGeo({"01001": (40.0, -80.0), "02001": (40.0, -80.0), "03001": (0.0, 0.0)})
        with pytest.raises(CoincidentCentroidError):
            spatial_weights(geo, "01001", ["02001", "03001"])

    def test_focal_skipped_in_universe(self):
        geo = equator_geography({"01001": 0.0, "02001": 100.0, "03001": 300.0})
        w = spatial_weights(geo, "01001", ["01001", "02001", "03001"])
        assert "01001" not in w

    def test_permutation_invariance(self):
        geo = equator_geography({"01001": 0.0, "02001": 120.0, "03001": 310.0, "04001": -80.0})
        universe = ["02001", "03001", "04001"]
        w1 = spatial_weights(geo, "01001", universe)
        w2 = spatial_weights(geo, "01001", universe[::-1])
        assert w1 == w2

    def test_scale_invariance(self, rng):
        lats = rng.uniform(25, 48, 6)
        lons = rng.uniform(-120, -70, 6)
        codes = tuple(f"0{k+1}001" for k in range(6))
        dm = DistanceMatrix(codes, pairwise_distances(lats, lons))
        w1 = inverse_distance_weights(dm.values)
        w2 = inverse_distance_weights(dm.scaled(7.3).values)
        np.testing.assert_allclose(w1, w2, atol=1e-12)


class TestDistanceMatrix:
    def test_from_geography(self, rng):
        codes = tuple(f"0{k+1}001" for k in range(5))
        geo = Geography(
            {c: (float(rng.uniform(25, 48)), float(rng.uniform(-120, -70))) for c in codes}
        )
        dm = DistanceMatrix.from_geography(geo)
        assert dm.region_index == codes
        assert dm.distance(codes[0], codes[1]) == pytest.approx(
            haversine(geo.latlon(codes[0]), geo.latlon(codes[1])), abs=1e-9
        )
        off = dm.values[~np.eye(5, dtype=bool)]
        assert (off > 0).all()

    def test_from_geography_coincident(self):
        geo = _StubGeo({"01001": (40.0, -80.0), "02001": (40.0, -80.0)})
        with pytest.raises(CoincidentCentroidError):
            DistanceMatrix.from_geography(geo)

    def test_save_load_round_trip(self, tmp_path, rng):
        codes = ("01001", "01002", "02001")
        dm = DistanceMatrix(codes, pairwise_distances(rng.uniform(25, 48, 3), rng.uniform(-120, -70, 3)))
        path = tmp_path / "dm.bin"
        dm.save(str(path))
        loaded = DistanceMatrix.load(str(path))
        assert loaded.region_index == codes
        assert loaded.radius_km == dm.radius_km
        np.testing.assert_array_equal(loaded.values, dm.values)
