"""QUBO instances, brute-force solving, and the shipped data files."""

import itertools

import numpy as np
import pytest

from toniq.errors import CapacityError, ValidationError
from toniq.qubo import (
    BUILTIN_SIZES,
    QuboInstance,
    all_bit_vectors,
    all_costs,
    bitstring_to_dec,
    brute_force_solve,
    builtin_instances,
    dec_to_bitstring,
    evaluate_cost,
    generate_instance,
    load_instance,
    save_instance,
)


def test_bitstring_round_trip():
    for n in (1, 3, 5):
        for k in range(1 << n):
            s = dec_to_bitstring(k, n)
            assert len(s) == n
            assert bitstring_to_dec(s) == k


def test_bitstring_is_little_endian():
    # qubit 0 is the least significant bit: "100" sets only qubit 0
    assert bitstring_to_dec("100") == 1
    assert bitstring_to_dec("001") == 4
    assert dec_to_bitstring(1, 3) == "100"


def test_all_bit_vectors_columns_are_qubits():
    vecs = all_bit_vectors(3)
    assert vecs.shape == (8, 3)
    for k in range(8):
        for q in range(3):
            assert vecs[k, q] == (k >> q) & 1


def test_all_costs_matches_term_by_term_evaluation():
    for trial in range(20):
        rng = np.random.default_rng(100 + trial)
        n = int(rng.integers(2, 6))
        m = rng.uniform(-2.0, 2.0, size=(n, n))
        q = np.triu(m) + np.triu(m, 1).T
        costs = all_costs(q)
        for k in range(1 << n):
            x = dec_to_bitstring(k, n)
            assert costs[k] == pytest.approx(evaluate_cost(q, x), abs=1e-12)


def test_brute_force_matches_exhaustive_enumeration():
    # independent oracle: itertools over assignments, double-loop energy
    for trial in range(30):
        rng = np.random.default_rng(300 + trial)
        n = int(rng.integers(2, 5))
        m = rng.uniform(-1.0, 1.0, size=(n, n))
        q = np.triu(m) + np.triu(m, 1).T
        best = None
        winners = []
        for bits in itertools.product((0, 1), repeat=n):
            e = sum(q[i][j] * bits[i] * bits[j] for i in range(n) for j in range(n))
            if best is None or e < best - 1e-15:
                best, winners = e, [bits]
            elif abs(e - best) <= 1e-15:
                winners.append(bits)
        energy, states, decs = brute_force_solve(q)
        assert energy == pytest.approx(best, abs=1e-12)
        expect = sorted(sum(b << i for i, b in enumerate(w)) for w in winners)
        assert list(decs) == expect
        assert states == [dec_to_bitstring(d, n) for d in decs]


def test_brute_force_reports_degenerate_minima():
    # zero matrix: every assignment costs 0, so all 2^n states tie
    energy, states, decs = brute_force_solve(np.zeros((3, 3)))
    assert energy == 0.0
    assert len(states) == 8
    assert decs == list(range(8))


def test_brute_force_rejects_oversized_problems():
    with pytest.raises(CapacityError):
        brute_force_solve(np.zeros((21, 21)))


def test_instance_validation():
    q = np.array([[1.0, 0.5], [0.4, 1.0]])  # asymmetric
    with pytest.raises(ValidationError):
        QuboInstance(id="bad", n=2, q=q, ground_energy=0.0,
                     ground_states=("00",), dec_states=(0,))
    with pytest.raises(ValidationError):
        QuboInstance(id="bad", n=3, q=np.zeros((2, 2)), ground_energy=0.0,
                     ground_states=("00",), dec_states=(0,))


def test_instance_dict_round_trip(inst3):
    again = QuboInstance.from_dict(inst3.to_dict())
    assert again.id == inst3.id
    assert np.array_equal(again.q, inst3.q)
    assert again.ground_states == inst3.ground_states
    assert again.dec_states == inst3.dec_states


def test_save_load_round_trip(tmp_path, inst3):
    path = tmp_path / "inst.json"
    save_instance(inst3, path)
    again = load_instance(path)
    assert again.to_dict() == inst3.to_dict()


def test_generate_instance_is_deterministic_and_probed():
    a = generate_instance(3, 1)
    b = generate_instance(3, 1)
    assert a.to_dict() == b.to_dict()
    assert len(a.ground_states) == 1
    # stored ground truth self-consistent under re-solve
    energy, states, decs = brute_force_solve(a.q)
    assert energy == a.ground_energy
    assert tuple(decs) == a.dec_states


def test_generate_instance_rejects_bad_sizes():
    for n in (2, 9):
        with pytest.raises(ValidationError):
            generate_instance(n, 1)


def test_builtin_instances_load_and_verify():
    for n in BUILTIN_SIZES:
        inst = builtin_instances(n)
        assert inst.n == n
        assert inst.id == f"builtin_n{n}"
        energy, states, decs = brute_force_solve(inst.q)
        assert energy == inst.ground_energy
        assert tuple(states) == inst.ground_states
        assert tuple(decs) == inst.dec_states
        assert len(states) == 1


def test_builtin_instances_reject_unsupported_size():
    with pytest.raises(ValidationError):
        builtin_instances(7)


def test_make_instance_helper_is_solvable(inst4):
    costs = all_costs(inst4.q)
    assert costs.min() == pytest.approx(inst4.ground_energy)


def test_load_instance_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_instance(tmp_path / "absent.json")
