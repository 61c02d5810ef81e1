"""Cayley graphs, Eulerian cycles, and decoupling checks."""
import itertools

import numpy as np
import pytest

from eulerdd import (Disconnected, EmptyGenerators, NotClosed, PulseWord,
                     build_cayley, cumulative_path, eulerian_cycle,
                     generated_group, pauli, pauli_element, pauli_group,
                     phase_equal, verify_average_decoupling, verify_eulerian)

XY = [pauli_element("X"), pauli_element("Y")]


def full_graph():
    return build_cayley(pauli_group(), XY)


def cpmg_graph():
    gens = [pauli_element("Y")]
    return build_cayley(generated_group(gens), gens)


def test_pauli_group_order_and_labels():
    assert [g.label for g in pauli_group()] == ["I", "X", "Y", "Z"]


def test_generated_group_subgroup_and_closure():
    assert [g.label for g in generated_group([pauli_element("Y")])] == ["I", "Y"]
    assert [g.label for g in generated_group(XY)] == ["I", "X", "Y", "Z"]
    with pytest.raises(EmptyGenerators):
        generated_group([])


def test_build_cayley_edge_count_and_targets():
    graph = full_graph()
    assert len(graph.edges) == len(graph.vertices) * len(graph.generators) == 8
    for v, g, t in graph.edges:
        # target class is v @ g up to phase
        assert phase_equal(pauli(v) @ pauli(g), pauli(t))


def test_build_cayley_rejects_non_group():
    with pytest.raises(NotClosed):
        build_cayley([pauli_element("I"), pauli_element("X"), pauli_element("Y")], XY)
    with pytest.raises(EmptyGenerators):
        build_cayley(pauli_group(), [])


def test_hierholzer_word_is_frozen():
    # Deterministic tie-break (lowest generator index first) pins the cycle.
    word = eulerian_cycle(full_graph(), pauli_element("I"))
    assert "".join(word.letters) == "XXYXYYXY"


def test_eulerian_cycle_self_verifies_from_every_start():
    for graph in (full_graph(), cpmg_graph()):
        for v in graph.vertices:
            word = eulerian_cycle(graph, v)
            assert len(word) == len(graph.edges)
            check = verify_eulerian(word, graph, start=v)
            assert check.passed, check.diagnostic


def test_named_sequence_words():
    graph = full_graph()
    assert verify_eulerian(PulseWord(tuple("XYXYYXYX")), graph).passed
    xy4 = verify_eulerian(PulseWord(tuple("XYXY")), graph)
    assert not xy4.passed
    assert "missing edge" in xy4.diagnostic
    assert xy4.missing_edges  # strict check reports what is left untraversed
    assert verify_eulerian(PulseWord(("Y", "Y")), cpmg_graph()).passed


def test_verify_eulerian_diagnostics():
    graph = full_graph()
    twice = verify_eulerian(PulseWord(tuple("XYXYXYXY")), graph)
    assert not twice.passed and "twice" in twice.diagnostic
    open_walk = verify_eulerian(PulseWord(tuple("X")), graph)
    assert not open_walk.passed and "ends at" in open_walk.diagnostic
    with pytest.raises(ValueError, match="not a graph generator"):
        verify_eulerian(PulseWord(("Z",)), graph)


def test_cumulative_path_left_multiplication():
    # XY8 path returns to identity with the propagator ordering p_l ... p_1.
    path = cumulative_path(PulseWord(tuple("XYXYYXYX")), pauli_element("I"))
    acc = np.eye(2, dtype=complex)
    for letter, elem in zip("XYXYYXYX", path):
        acc = pauli(letter) @ acc
        assert np.max(np.abs(acc - elem.unitary)) < 1e-12
    assert phase_equal(path[-1].unitary, np.eye(2))


def test_average_decoupling_examples():
    # XY4 averages all Paulis with ideal pulses despite not being Eulerian.
    assert verify_average_decoupling(PulseWord(tuple("XYXY")), {"X", "Y", "Z"})
    assert verify_average_decoupling(PulseWord(tuple("XYXYYXYX")), {"X", "Y", "Z"})
    # CPMG kills X and Z errors but keeps Y.
    assert verify_average_decoupling(PulseWord(("Y", "Y")), {"X", "Z"})
    assert not verify_average_decoupling(PulseWord(("Y", "Y")), {"Y"})


def test_every_eulerian_word_decouples_xyz():
    # Exhaustive scan: all 2^8 length-8 words over {X, Y}.
    graph = full_graph()
    eulerian_words = 0
    for letters in itertools.product("XY", repeat=8):
        word = PulseWord(letters)
        if verify_eulerian(word, graph).passed:
            eulerian_words += 1
            assert verify_average_decoupling(word, {"X", "Y", "Z"})
    assert eulerian_words > 0


def test_eulerian_cycle_rejects_foreign_start():
    graph = cpmg_graph()
    with pytest.raises(ValueError, match="not a graph vertex"):
        eulerian_cycle(graph, pauli_element("X"))


def test_disconnected_generators():
    # I alone cannot reach the other vertices: every I-edge is a self loop.
    graph = build_cayley(pauli_group(), [pauli_element("I")])
    with pytest.raises(Disconnected):
        eulerian_cycle(graph, pauli_element("I"))
