import json

import pytest

from radiality.network import (
    Bus,
    Line,
    Network,
    NetworkError,
    NetworkFormatError,
    TopologyAssignment,
    dumps_network,
    load_assignment,
    load_network,
    network_from_dict,
    network_to_dict,
    save_assignment,
    save_network,
)

from conftest import FIXTURE_NAMES, fixture_path, net


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_round_trip_is_byte_stable(name, tmp_path):
    n = net(name)
    out = tmp_path / "n.json"
    save_network(n, out)
    assert out.read_text() == fixture_path(name).read_text()
    assert load_network(out) == n


def test_fixture_shapes():
    assert (net("fig1").n_buses, net("fig1").n_lines, sorted(net("fig1").roots)) == (6, 6, [1])
    assert (net("fig2").n_buses, net("fig2").n_lines, sorted(net("fig2").roots)) == (4, 4, [1, 4])
    assert (net("random10").n_buses, net("random10").n_lines) == (7, 10)
    c = net("case33")
    assert (c.n_buses, c.n_lines, sorted(c.roots)) == (33, 37, [1])
    f = net("fig1_fault")
    assert f.faulted_lines == {2} and f.roots == {1, 5}


def _doc():
    return network_to_dict(net("fig2"))


def test_unknown_field_reports_location():
    doc = _doc()
    doc["lines"][2]["colour"] = "red"
    with pytest.raises(NetworkFormatError, match=r"lines\[2\]"):
        network_from_dict(doc)


def test_unknown_top_level_key():
    doc = _doc()
    doc["extra"] = 1
    with pytest.raises(NetworkFormatError, match="extra"):
        network_from_dict(doc)


@pytest.mark.parametrize("mutate, message", [
    (lambda d: d["roots"].append(2), "not a source"),
    (lambda d: d["roots"].clear(), "empty"),
    (lambda d: d["lines"][0].update(to_bus=99), "unknown endpoint"),
    (lambda d: d["lines"][1].update(id=1), "duplicate line"),
    (lambda d: d["buses"][1].update(id=1), "duplicate bus"),
    (lambda d: d["faulted_lines"].append(42), "faulted line 42"),
    (lambda d: d["lines"][0].update(r=-1.0), "impedance"),
    (lambda d: d["buses"][1].update(p_gen_max=1.0), "non-source"),
    (lambda d: d["buses"][0].update(id=True), "integer"),
])
def test_invalid_documents(mutate, message):
    doc = _doc()
    mutate(doc)
    with pytest.raises(NetworkError, match=message):
        network_from_dict(doc)


def test_disconnected_graph_rejected_unless_allowed():
    doc = _doc()
    doc["lines"] = [l for l in doc["lines"] if l["id"] in (1, 4)]
    doc["lines"].append({"id": 9, "from_bus": 1, "to_bus": 2})
    doc["buses"].append({"id": 5})
    with pytest.raises(NetworkError, match="not connected"):
        network_from_dict(doc)
    assert network_from_dict(doc, check_connected=False).n_buses == 5


def test_bad_json_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"buses": [,]}')
    with pytest.raises(NetworkFormatError, match=":1:"):
        load_network(p)


def test_sorted_storage_and_lookups():
    buses = (Bus(2), Bus(1, is_source=True, p_gen_max=1.0))
    lines = (Line(7, 2, 1),)
    n = Network(buses, lines, {1})
    assert n.bus_ids == (1, 2)
    assert n.line(7).other(2) == 1
    assert n.non_roots == (2,)
    with pytest.raises(NetworkError):
        n.line(8)


def test_assignment_helpers():
    n = net("fig2")
    assert n.a_vector({1: 1, 2: 0, 3: 1, 4: 0}) == (1, 0, 1, 0)
    assert n.closed_lines((0, 1, 1, 0)) == [2, 3]
    assert n.assignment([4]) == {1: 0, 2: 0, 3: 0, 4: 1}
    with pytest.raises(NetworkError, match="missing"):
        n.a_vector({1: 1})
    with pytest.raises(NetworkError, match="entries"):
        n.a_vector((1, 0))
    with pytest.raises(NetworkError, match="0 or 1"):
        n.a_vector((2, 0, 0, 0))


def test_assignment_files(tmp_path):
    n = net("fig2")
    p = tmp_path / "a.json"
    ta = TopologyAssignment(a=n.assignment([1, 4]), load_pickup={2: 1, 3: 0})
    save_assignment(ta, p)
    back = load_assignment(p)
    assert back.a == ta.a and back.load_pickup == ta.load_pickup
    q = tmp_path / "c.json"
    q.write_text(json.dumps({"closed": [2, 3]}))
    assert load_assignment(q, n).closed() == [2, 3]
    with pytest.raises(NetworkFormatError):
        load_assignment(q)


def test_dumps_is_deterministic():
    assert dumps_network(net("case33")) == dumps_network(load_network(fixture_path("case33")))
