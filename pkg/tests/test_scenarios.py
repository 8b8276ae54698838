import json

import numpy as np
import pytest

from stokin import (
    PRESETS,
    ScenarioError,
    equilibrium_state,
    load_scenario,
    save_scenario,
)

from conftest import SIX_GROUP_BETA, SIX_GROUP_LAMBDA


def test_preset_names():
    assert set(PRESETS) == {"table1", "table2", "table3", "linear-rho"}


def test_table1_preset_values_and_discrepancy_note():
    scn = load_scenario("table1")
    p = scn.build_parameters()
    assert p.group_fractions == (0.05,)
    assert p.decay_constants == (0.1,)
    assert p.nu == 2.5
    assert p.gen_time == pytest.approx(2.0 / 3.0, rel=0)
    assert p.reactivity(5.0) == pytest.approx(-1.0 / 3.0, rel=0)
    assert p.source(0.0) == 200.0
    assert "0.005" in scn.notes  # documents the source value it corrects
    x0 = scn.build_initial(p)
    assert x0.vector.tolist() == [400.0, 300.0]
    # the preset start is the sourced equilibrium
    assert equilibrium_state(p).vector == pytest.approx(x0.vector, rel=1e-12)


def test_table2_preset_values():
    scn = load_scenario("table2")
    p = scn.build_parameters()
    assert p.decay_constants == SIX_GROUP_LAMBDA
    assert p.group_fractions == SIX_GROUP_BETA
    assert p.beta_total == pytest.approx(0.007, rel=1e-12)
    assert p.gen_time == 2e-5
    assert p.source(0.0) == 0.0
    assert p.reactivity(0.0) == 0.003
    assert scn.horizon == 0.1
    x0 = scn.build_initial(p)
    assert x0.n == 100.0


def test_table3_preset_values():
    scn = load_scenario("table3")
    p = scn.build_parameters()
    assert p.reactivity(0.0) == 0.007
    assert scn.horizon == 0.001
    assert scn.solver["psd_policy"] == "clamp"


def test_linear_rho_preset():
    scn = load_scenario("linear-rho")
    p = scn.build_parameters()
    assert p.reactivity(0.1) == pytest.approx(0.025, rel=1e-15)  # slope 0.25
    assert scn.horizon == 0.1
    assert p.gen_time == 1e-5
    x0 = scn.build_initial(p)
    assert x0.vector == pytest.approx([100.0, 5e5], rel=1e-14)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_round_trip_identity(name, tmp_path):
    scn = load_scenario(name)
    path = tmp_path / f"{name}.json"
    save_scenario(scn, str(path))
    loaded = load_scenario(str(path))
    assert loaded == scn
    # and a second trip produces identical bytes
    path2 = tmp_path / f"{name}_2.json"
    save_scenario(loaded, str(path2))
    assert path.read_bytes() == path2.read_bytes()


def test_validation_names_offending_field(tmp_path):
    scn = load_scenario("table1")
    data = scn.to_dict()
    data["parameters"] = dict(data["parameters"], decay_constants=[-0.1])
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ScenarioError, match="decay_constants"):
        load_scenario(str(path))


def test_parse_error_reports_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"name": "x",\n  "oops\n}')
    with pytest.raises(ScenarioError, match="line"):
        load_scenario(str(path))


def test_missing_field_reported(tmp_path):
    path = tmp_path / "partial.json"
    path.write_text(json.dumps({"name": "x", "description": ""}))
    with pytest.raises(ScenarioError, match="missing fields"):
        load_scenario(str(path))


def test_unknown_preset_or_path():
    with pytest.raises(ScenarioError, match="preset"):
        load_scenario("table9")


def test_record_times_and_grids():
    scn = load_scenario("table2")
    rec = scn.record_times()
    assert rec[0] == 0.0
    assert rec[-1] == pytest.approx(0.1, rel=1e-15)
    assert len(rec) == 21
    g = scn.grid("em")
    assert g.dt == 1e-5
    assert g.t_end == 0.1
    mc = scn.mc_config()
    assert mc.mode == "fixed" and mc.yield_model == "fractional"
    assert np.allclose(mc.record_times, rec)
