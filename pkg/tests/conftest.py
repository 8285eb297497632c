import numpy as np
import pytest

from fairshed import DemandProfile, parse_case

# 3-bus ring with one generator per bus (only bus 1's has capacity), demands
# 1.0 / 0.5 at buses 2 / 3. With all lines on the injections are
# (1.5, -1.0, -0.5) and the DC flows (5/6, 2/3, -1/6): inside every limit,
# so zero shed is feasible.
TRIANGLE_CASE = {
    "base_mva": 100.0,
    "buses": [
        {"id": 1, "name": "gen", "lon": 0.0, "lat": 0.0},
        {"id": 2, "name": "load_a", "lon": 1.0, "lat": 0.0},
        {"id": 3, "name": "load_b", "lon": 0.0, "lat": 1.0},
    ],
    "generators": [
        {"id": 1, "bus": 1, "g_min": 0.0, "g_max": 2.0},
        {"id": 2, "bus": 2, "g_min": 0.0, "g_max": 0.0},
        {"id": 3, "bus": 3, "g_min": 0.0, "g_max": 0.0},
    ],
    "lines": [
        {"id": 1, "from": 1, "to": 2, "x": 0.5, "f_max": 1.0},
        {"id": 2, "from": 1, "to": 3, "x": 0.5, "f_max": 1.0},
        {"id": 3, "from": 2, "to": 3, "x": 0.5, "f_max": 1.0},
    ],
}

TWO_BUS_CASE = {
    "base_mva": 100.0,
    "buses": [
        {"id": 1, "name": "gen", "lon": 0.0, "lat": 0.0},
        {"id": 2, "name": "load", "lon": 1.0, "lat": 0.0},
    ],
    "generators": [{"id": 1, "bus": 1, "g_min": 0.0, "g_max": 2.0}],
    "lines": [{"id": 1, "from": 1, "to": 2, "x": 0.5, "f_max": 1.5}],
}


@pytest.fixture
def triangle_net():
    return parse_case(TRIANGLE_CASE)


@pytest.fixture
def triangle_demand(triangle_net):
    return DemandProfile(triangle_net.bus_ids(), np.array([[0.0], [1.0], [0.5]]))


@pytest.fixture
def two_bus_net():
    return parse_case(TWO_BUS_CASE)
