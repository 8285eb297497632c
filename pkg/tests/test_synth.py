import numpy as np
import pytest

from fairshed import parse_case, validate
from fairshed.synth import (
    evening_profile,
    flat_profile,
    hub_spoke_case,
    main,
    ring_spoke_case,
    season_inputs,
    write_demo,
)


def test_hub_spoke_is_valid_and_short_on_capacity():
    case, risks, nominal = hub_spoke_case(n_leaves=8, leaf_demand=1.0, shortage_leaves=2.0)
    net = parse_case(case)
    assert validate(net) == []
    assert len(net.lines) == 8 and len(net.buses) == 9
    assert net.generators[0].g_max == pytest.approx(6.0)
    assert sorted(risks) == [l.id for l in net.lines]
    # strictly increasing risks keep de-energization rankings unambiguous
    values = [risks[k] for k in sorted(risks)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_ring_spoke_adds_a_ring():
    case, nominal = ring_spoke_case(n_leaves=6)
    net = parse_case(case)
    assert validate(net) == []
    assert len(net.lines) == 12
    ring = [l for l in net.lines if l.id > 6]
    assert all(l.from_bus != 1 and l.to_bus != 1 for l in ring)
    with pytest.raises(ValueError, match="three leaves"):
        ring_spoke_case(n_leaves=2)


def test_profiles():
    assert flat_profile(4) == [1.0] * 4
    prof = evening_profile(24, floor=0.86)
    assert max(prof) == pytest.approx(1.0)
    assert min(prof) >= 0.86 / 1.0 - 1e-9


def test_season_inputs_deterministic():
    case, risks, nominal = hub_spoke_case(n_leaves=4)
    net = parse_case(case)
    a = season_inputs(net, nominal, risks, days=3, horizon=2, seed=5, alpha=0.6)
    b = season_inputs(net, nominal, risks, days=3, horizon=2, seed=5, alpha=0.6)
    for da, db in zip(a, b):
        assert da.risk == db.risk
        assert np.array_equal(da.forecast.values, db.forecast.values)


def test_write_demo_files_parse(tmp_path):
    paths = write_demo(tmp_path, days=2, n_leaves=4, horizon=3)
    net = parse_case(paths["case"])
    assert validate(net) == []
    day_files = sorted(paths["demand"].glob("*.csv"))
    assert len(day_files) == 2
    assert paths["risk"].read_text().startswith("day,line_id,risk")


def test_main_usage(capsys, tmp_path):
    assert main([]) == 2
    assert main([str(tmp_path / "demo")]) == 0
    out = capsys.readouterr().out
    assert "case:" in out
