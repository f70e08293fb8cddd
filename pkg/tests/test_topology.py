"""Connectivity tables, wavelength plan checks, and loss budgets."""

import pytest

from qnetsim.topology import (
    NetworkMode,
    PUMP_WAVELENGTH_NM,
    SATELLITE,
    SIGNAL_CENTERS_NM,
    SwitchPosition,
    USERS,
    ChannelPair,
    connectivity,
    default_channel_pairs,
    idler_wavelength,
    merged_ground_connectivity,
    mode_for,
    path_loss,
    transport_loss_db,
    validate_allocation,
)


def test_mode_for_switch_positions():
    assert mode_for(SwitchPosition.TOP) is NetworkMode.SATELLITE
    assert mode_for(SwitchPosition.MIDDLE) is NetworkMode.GROUND
    assert mode_for(SwitchPosition.BOTTOM) is NetworkMode.GROUND


def test_idler_wavelength_energy_conservation():
    for signal in SIGNAL_CENTERS_NM:
        idler = idler_wavelength(signal)
        assert 1.0 / PUMP_WAVELENGTH_NM == pytest.approx(
            1.0 / signal + 1.0 / idler, rel=1e-14
        )
        assert idler > signal


def test_idler_wavelength_rejects_signal_below_pump():
    with pytest.raises(ValueError):
        idler_wavelength(500.0)


def test_default_channel_pairs_cover_telecom_band():
    pairs = default_channel_pairs()
    assert tuple(p.index for p in pairs) == (0, 1, 2, 3)
    assert tuple(p.signal_nm for p in pairs) == SIGNAL_CENTERS_NM
    idlers = [p.idler_nm for p in pairs]
    # longer signal pairs with shorter idler under a fixed pump
    assert idlers == sorted(idlers, reverse=True)
    assert all(1500.0 < i < 1620.0 for i in idlers)


def test_channel_pair_validation():
    with pytest.raises(ValueError):
        ChannelPair(index=0, signal_nm=779.0, idler_nm=1550.0)
    with pytest.raises(ValueError):
        ChannelPair(index=0, signal_nm=785.0, idler_nm=700.0)
    with pytest.raises(ValueError):
        ChannelPair(index=0, signal_nm=785.0, idler_nm=1550.0, bandwidth_nm=0.0)


def test_satellite_connectivity_serves_every_user():
    graph = connectivity(SwitchPosition.TOP)
    assert len(graph.edges) == 4
    for edge, user in zip(graph.edges, USERS):
        assert {edge.node_a, edge.node_b} == {user, SATELLITE}
        (assignment,) = edge.assignments
        assert assignment.signal_to == SATELLITE
        assert assignment.idler_to == user
    assert set(graph.nodes()) == set(USERS) | {SATELLITE}


def test_ground_connectivity_tables():
    middle = connectivity(SwitchPosition.MIDDLE)
    links = {(e.node_a, e.node_b): [a.pair.index for a in e.assignments] for e in middle.edges}
    assert links == {("alice", "charlie"): [0, 2], ("bob", "charlie"): [1]}

    bottom = connectivity(SwitchPosition.BOTTOM)
    links = {(e.node_a, e.node_b): [a.pair.index for a in e.assignments] for e in bottom.edges}
    assert links == {("alice", "bob"): [0, 1], ("bob", "charlie"): [2]}

    assert "dana" not in middle.nodes() + bottom.nodes()


def test_two_pair_edges_give_each_party_both_arms():
    for position in (SwitchPosition.MIDDLE, SwitchPosition.BOTTOM):
        for edge in connectivity(position).edges:
            if len(edge.assignments) == 2:
                first, second = edge.assignments
                assert first.signal_to == second.idler_to
                assert first.idler_to == second.signal_to


def test_default_allocations_are_clean():
    for position in SwitchPosition:
        assert validate_allocation(connectivity(position)) == []


def test_merged_ground_reuses_channels_across_edges():
    merged = merged_ground_connectivity()
    assert len(merged.edges) == 4
    assert set(merged.nodes()) == {"alice", "bob", "charlie"}
    violations = validate_allocation(merged)
    assert violations and all("reused" in v for v in violations)


def _single_edge_graph(*pairs: ChannelPair):
    from qnetsim.topology import Assignment, ConnectivityGraph, Edge

    return ConnectivityGraph(
        (
            Edge(
                "alice",
                "bob",
                tuple(Assignment(p, "alice", "bob") for p in pairs),
            ),
        )
    )


def test_validate_allocation_flags_narrow_guard():
    close = _single_edge_graph(
        ChannelPair(0, 781.5, idler_wavelength(781.5)),
        ChannelPair(1, 785.0, idler_wavelength(785.0)),
    )
    violations = validate_allocation(close, min_guard_nm=1.0)
    assert any("guard" in v for v in violations)
    assert validate_allocation(close, min_guard_nm=0.0) == []


def test_validate_allocation_flags_mismatched_pump():
    graph = _single_edge_graph(
        ChannelPair(0, 781.5, idler_wavelength(781.5)),
        ChannelPair(1, 789.5, 1500.0),
    )
    violations = validate_allocation(graph)
    assert any("pump" in v for v in violations)


def test_satellite_loss_budgets():
    idler_db = {user: path_loss(user, NetworkMode.SATELLITE).total_db for user in USERS}
    assert idler_db["alice"] == pytest.approx(12.9)
    assert idler_db["bob"] == pytest.approx(15.7)
    assert idler_db["charlie"] == pytest.approx(18.5)
    assert idler_db["dana"] == pytest.approx(16.5)
    signal = path_loss("signal", NetworkMode.SATELLITE)
    assert signal.total_db == pytest.approx(26.0, abs=0.5)


def test_ground_loss_budgets():
    signal = path_loss("alice.signal", NetworkMode.GROUND).total_db
    assert signal == pytest.approx(16.98)
    idler = path_loss("alice.idler", NetworkMode.GROUND).total_db
    assert idler == pytest.approx(12.9 + 0.97)
    # bare user name means the idler arm
    assert path_loss("alice", NetworkMode.GROUND).total_db == pytest.approx(idler)


def test_path_loss_normalizes_name():
    assert path_loss(" Alice ", NetworkMode.SATELLITE).total_db == pytest.approx(12.9)


def test_path_loss_unknown_names():
    with pytest.raises(KeyError):
        path_loss("eve", NetworkMode.SATELLITE)
    with pytest.raises(KeyError):
        path_loss("dana", NetworkMode.GROUND)
    with pytest.raises(KeyError):
        path_loss("alice.pump", NetworkMode.GROUND)


def test_transport_loss_strips_detection_terms():
    full = path_loss("signal", NetworkMode.SATELLITE).total_db
    transport = transport_loss_db("signal", NetworkMode.SATELLITE)
    assert transport == pytest.approx(23.76)
    assert transport < full
    # idler arms carry no detection component
    assert transport_loss_db("bob", NetworkMode.SATELLITE) == pytest.approx(15.7)
