import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gasflux.core import (BAR, P_ATM, DomainError, GasProperties, ValidationError, cnga_z,
                          data_path, density_from_pressure, load_network, network_from_dict,
                          network_to_dict, pressure_from_density, pressure_from_potential,
                          pressure_potential, sound_speed)


def _net(nodes, pipes):
    return network_from_dict({"units": {"length": "km", "diameter": "mm", "pressure": "bar"},
                              "nodes": nodes, "pipes": pipes})


def _node(i, kind="demand"):
    return {"id": i, "kind": kind, "p_min": 50, "p_max": 80}


# --- equation of state ------------------------------------------------------

def test_gas_constant_from_gravity(props):
    assert props.gas_constant == pytest.approx(8.31446 / (0.6 * 0.0289647), rel=1e-10)
    assert GasProperties.from_gas_constant(478.0).gas_constant == pytest.approx(478.0, rel=1e-12)


def test_z_is_one_at_zero_gauge():
    for g in (0.55, 0.6, 0.7):
        for t in (270.0, 288.15, 310.0):
            assert cnga_z(P_ATM, GasProperties(gravity=g, temperature=t)) == 1.0


def test_z_at_70_bar_matches_direct_formula(props, oracle):
    assert cnga_z(70 * BAR, props) == pytest.approx(oracle["z_70bar"], rel=1e-12)


def test_z_decreasing_and_bounded():
    for g in (0.55, 0.6, 0.7):
        pr = GasProperties(gravity=g)
        p = np.linspace(P_ATM, 100 * BAR, 500)
        z = cnga_z(p, pr)
        assert np.all(z > 0) and np.all(z <= 1.0)
        assert np.all(np.diff(z) < 0)
    assert cnga_z(80 * BAR, GasProperties()) < cnga_z(60 * BAR, GasProperties())


def test_z_rejects_negative_pressure(props):
    with pytest.raises(DomainError):
        cnga_z(-1.0, props)


def test_ideal_mode_pressure():
    pr = GasProperties.from_gas_constant(478.0, eos="ideal")
    assert pressure_from_density(50.0, pr) == pytest.approx(50.0 * 478.0 * 288.15, rel=1e-12)
    assert density_from_pressure(5e6, pr) == pytest.approx(5e6 / pr.RT, rel=1e-14)


def test_vacuum_limit(props):
    assert pressure_from_density(0.0, props) == 0.0


def test_pressure_from_density_bisection_oracle(props, oracle):
    p = pressure_from_density(60.0, props)
    assert p == pytest.approx(oracle["p_of_rho_60"], rel=1e-10)
    assert abs(p - cnga_z(p, props) * props.RT * 60.0) / p < 1e-10


def test_density_at_70_bar_bisection_oracle(props, oracle):
    assert density_from_pressure(70 * BAR, props) == pytest.approx(oracle["rho_of_70bar"], rel=1e-9)


@pytest.mark.parametrize("rho", [1.0, 10.0, 80.0])
def test_round_trip_examples(props, rho):
    assert density_from_pressure(pressure_from_density(rho, props), props) == pytest.approx(rho, rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 100.0), st.floats(0.55, 0.7), st.floats(260.0, 320.0))
def test_round_trip_property(rho, g, t):
    pr = GasProperties(gravity=g, temperature=t)
    back = density_from_pressure(pressure_from_density(rho, pr), pr)
    assert abs(back - rho) / rho < 1e-9


def test_pressure_strictly_increasing(props):
    rho = np.linspace(0.0, 150.0, 3001)
    assert np.all(np.diff(pressure_from_density(rho, props)) > 0)


def test_density_rejects_negative_pressure(props):
    with pytest.raises(DomainError):
        density_from_pressure(-5.0, props)
    with pytest.raises(DomainError):
        pressure_from_density(-1.0, props)


def test_sound_speed_ideal(oracle):
    pr = GasProperties.from_gas_constant(478.0, eos="ideal")
    a = sound_speed(np.array([1.0, 30.0, 90.0]), pr)
    assert np.allclose(a, oracle["ideal_speed_R478"], rtol=1e-12)


def test_sound_speed_cnga_secant(props, oracle):
    rho = oracle["rho_of_70bar"]
    a = sound_speed(rho, props)
    assert abs(a - oracle["secant_speed_70bar"]) / oracle["secant_speed_70bar"] < 0.05
    # never below the tangent speed, so CFL steps built on it stay safe
    assert a >= oracle["tangent_speed_70bar"]


def test_sound_speed_rejects_non_positive(props):
    with pytest.raises(DomainError):
        sound_speed(0.0, props)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e5, 1e7))
def test_potential_inverse(p):
    pr = GasProperties()
    assert pressure_from_potential(pressure_potential(p, pr), pr) == pytest.approx(p, rel=1e-10)


def test_properties_validation():
    with pytest.raises(ValidationError):
        GasProperties(temperature=0.0)
    with pytest.raises(ValidationError):
        GasProperties(gravity=-1.0)
    with pytest.raises(ValidationError):
        GasProperties(eos="vdw")


# --- network -----------------------------------------------------------------

def test_israel_dataset(network):
    assert len(network.nodes) == 11 and len(network.pipes) == 13
    p1 = network.pipes[0]
    assert (p1.from_node, p1.to_node, p1.length, p1.diameter) == (1, 2, 26e3, 0.6)
    p9 = [p for p in network.pipes if p.id == 9][0]
    assert (p9.from_node, p9.to_node, p9.length, p9.diameter) == (2, 9, 102e3, 0.914)
    assert set(network.nodes_of_kind("supply")) == {1, 8}
    for p in network.pipes:
        assert p.area == math.pi * p.diameter ** 2 / 4.0
        assert p.friction == 0.01


def test_parallel_pipes_allowed(network):
    pairs = [(p.from_node, p.to_node) for p in network.pipes]
    assert pairs.count((1, 2)) == 2 and pairs.count((2, 3)) == 2


def test_empty_pipe_list_is_disconnected():
    with pytest.raises(ValidationError, match="disconnected"):
        _net([_node(1, "supply"), _node(2)], [])


def test_dangling_endpoint_named():
    with pytest.raises(ValidationError, match="pipe 7 references unknown node 99"):
        _net([_node(1, "supply"), _node(2)],
             [{"id": 7, "from": 1, "to": 99, "length": 1, "diameter": 500}])


def test_duplicate_node_and_bad_geometry():
    with pytest.raises(ValidationError, match="duplicate node id 1"):
        _net([_node(1, "supply"), _node(1)], [])
    with pytest.raises(ValidationError, match="non-positive length"):
        _net([_node(1, "supply"), _node(2)],
             [{"id": 1, "from": 1, "to": 2, "length": 0, "diameter": 500}])


def test_no_supply_node():
    with pytest.raises(ValidationError, match="no supply"):
        _net([_node(1), _node(2)], [{"id": 1, "from": 1, "to": 2, "length": 1, "diameter": 500}])


def test_pressure_limits_validated():
    with pytest.raises(ValidationError):
        _net([{"id": 1, "kind": "supply", "p_min": 80, "p_max": 50}], [])


def test_unit_conversion_and_round_trip(network):
    again = network_from_dict(network_to_dict(network))
    assert again == network


def test_load_network_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_network(tmp_path / "none.json")


def test_load_network_bad_json(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text("{nodes: ")
    with pytest.raises(ValidationError):
        load_network(f)


def test_shipped_file_present():
    assert data_path("israel_11node.json").exists()


def test_reversed_pipe(network):
    rev = network.reversed_pipe(5)
    p = [q for q in rev.pipes if q.id == 5][0]
    assert (p.from_node, p.to_node) == (6, 5)
