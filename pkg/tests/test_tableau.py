"""
Unit tests for the stabilizer tableau.

Tests cover:
- Initial states and single gates (H, CZ, CNOT, X, Z)
- Z measurement: deterministic, random and forced outcomes
- Canonical form and group equality
- Subgroup restriction and group membership
- Invariants under long random Clifford sequences
"""

import numpy as np
import pytest

# Adjust path so we can import from the project root
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from tools.tableau import (
    PauliString,
    TableauInvariantError,
    apply_cnot,
    apply_cz,
    apply_h,
    apply_pauli,
    canonical_form,
    canonical_generators,
    group_contains,
    measure_z,
    new_tableau,
    reduced_generators,
    stabilizer_group_equals,
)


# ── Helpers ───────────────────────────────────────────────────────────────────

def _paulis(*labels: str) -> list[PauliString]:
    return [PauliString.from_label(label) for label in labels]


def _plus_state(n: int):
    t = new_tableau(n)
    for q in range(n):
        apply_h(t, q)
    return t


def _random_clifford(t, rng: np.random.Generator, length: int, measure: bool = False) -> None:
    """Random H/CZ/CNOT/X/Z sequence, optionally with Z measurements."""
    n = t.n
    choices = 6 if measure else 5
    for _ in range(length):
        gate = int(rng.integers(choices))
        q = int(rng.integers(n))
        if gate == 0:
            apply_h(t, q)
        elif gate in (1, 2) and n > 1:
            other = int((q + 1 + rng.integers(n - 1)) % n)
            (apply_cz if gate == 1 else apply_cnot)(t, q, other)
        elif gate == 3:
            apply_pauli(t, q, "X")
        elif gate == 4:
            apply_pauli(t, q, "Z")
        elif gate == 5:
            measure_z(t, q, rng=rng)


# ── Tests ─────────────────────────────────────────────────────────────────────

class TestPauliString:
    """Label parsing and Pauli algebra."""

    def test_label_round_trip(self):
        assert PauliString.from_label("-ZZ").to_label() == "-ZZ"
        assert PauliString.from_label("XIY").to_label() == "+XIY"

    def test_invalid_label_rejected(self):
        with pytest.raises(ValueError):
            PauliString.from_label("XQ")
        with pytest.raises(ValueError):
            PauliString.from_label("+")

    def test_product_of_cluster_generators(self):
        product = PauliString.from_label("XZ") * PauliString.from_label("ZX")
        assert product.to_label() == "+YY"

    def test_anticommuting_product_rejected(self):
        with pytest.raises(ValueError):
            PauliString.from_label("X") * PauliString.from_label("Z")

    def test_commutation(self):
        assert PauliString.from_label("XX").commutes_with(PauliString.from_label("ZZ"))
        assert not PauliString.from_label("XI").commutes_with(PauliString.from_label("ZI"))


class TestNewTableau:
    """Initialisation to |0...0>."""

    def test_single_qubit(self):
        assert new_tableau(1).stabilizer_labels() == ["+Z"]

    def test_three_qubits(self):
        assert new_tableau(3).stabilizer_labels() == ["+ZII", "+IZI", "+IIZ"]

    def test_destabilizers_are_x(self):
        assert [d.to_label() for d in new_tableau(2).destabilizers] == ["+XI", "+IX"]

    def test_zero_qubits_rejected(self):
        with pytest.raises(ValueError):
            new_tableau(0)

    def test_hadamard_on_both(self):
        assert _plus_state(2).stabilizer_labels() == ["+XI", "+IX"]


class TestGates:
    """Conjugation rules of the supported gates."""

    def test_h_on_zero_and_plus(self):
        t = new_tableau(1)
        apply_h(t, 0)
        assert t.stabilizer_labels() == ["+X"]
        apply_h(t, 0)
        assert t.stabilizer_labels() == ["+Z"]

    def test_h_twice_is_identity(self):
        rng = np.random.default_rng(3)
        t = new_tableau(4)
        _random_clifford(t, rng, 40)
        before = canonical_form(t).stabilizer_labels()
        apply_h(t, 2)
        apply_h(t, 2)
        assert canonical_form(t).stabilizer_labels() == before

    def test_cz_builds_two_qubit_cluster(self):
        t = _plus_state(2)
        apply_cz(t, 0, 1)
        assert t.stabilizer_labels() == ["+XZ", "+ZX"]

    def test_cz_twice_is_identity(self):
        t = _plus_state(2)
        apply_cz(t, 0, 1)
        apply_cz(t, 0, 1)
        assert t.stabilizer_labels() == ["+XI", "+IX"]

    def test_cz_is_symmetric(self):
        rng = np.random.default_rng(11)
        t = new_tableau(3)
        _random_clifford(t, rng, 30)
        before = canonical_form(t).stabilizer_labels()
        apply_cz(t, 1, 2)
        apply_cz(t, 2, 1)
        assert canonical_form(t).stabilizer_labels() == before

    def test_cz_rejects_equal_or_bad_indices(self):
        t = new_tableau(2)
        with pytest.raises(ValueError):
            apply_cz(t, 1, 1)
        with pytest.raises(ValueError):
            apply_cz(t, 0, 2)

    def test_cnot_makes_bell_pair(self):
        t = new_tableau(2)
        apply_h(t, 0)
        apply_cnot(t, 0, 1)
        assert t.stabilizer_labels() == ["+XX", "+ZZ"]

    def test_cnot_on_one_zero(self):
        t = new_tableau(2)
        apply_pauli(t, 0, "X")
        apply_cnot(t, 0, 1)
        assert measure_z(t, 0).value == 1
        assert measure_z(t, 1).value == 1

    def test_cnot_matches_h_cz_h(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            t1 = new_tableau(4)
            _random_clifford(t1, rng, 25)
            t2 = t1.copy()
            c, x = (int(q) for q in rng.choice(4, size=2, replace=False))
            apply_cnot(t1, c, x)
            apply_h(t2, x)
            apply_cz(t2, c, x)
            apply_h(t2, x)
            assert stabilizer_group_equals(t1, t2)

    def test_pauli_flips(self):
        t = new_tableau(1)
        apply_h(t, 0)
        apply_pauli(t, 0, "Z")
        assert t.stabilizer_labels() == ["-X"]
        t = new_tableau(1)
        apply_pauli(t, 0, "X")
        assert t.stabilizer_labels() == ["-Z"]

    def test_z_twice_is_identity(self):
        rng = np.random.default_rng(5)
        t = new_tableau(3)
        _random_clifford(t, rng, 30)
        before = t.stabilizer_labels()
        apply_pauli(t, 1, "Z")
        apply_pauli(t, 1, "Z")
        assert t.stabilizer_labels() == before

    def test_unsupported_pauli_rejected(self):
        with pytest.raises(ValueError):
            apply_pauli(new_tableau(1), 0, "Y")


class TestMeasurement:
    """Projection rule and outcome statistics."""

    def test_zero_is_deterministic(self):
        outcome = measure_z(new_tableau(1), 0)
        assert outcome.value == 0
        assert outcome.deterministic

    def test_plus_is_fair(self):
        ones = 0
        for seed in range(1000):
            t = _plus_state(1)
            outcome = measure_z(t, 0, rng=np.random.default_rng(seed))
            assert not outcome.deterministic
            ones += outcome.value
        assert abs(ones / 1000 - 0.5) <= 0.05

    def test_bell_pair_correlation(self):
        for seed in range(20):
            t = new_tableau(2)
            apply_h(t, 0)
            apply_cnot(t, 0, 1)
            first = measure_z(t, 0, rng=np.random.default_rng(seed))
            second = measure_z(t, 1)
            assert second.deterministic
            assert second.value == first.value

    def test_forced_branch(self):
        t = _plus_state(1)
        assert measure_z(t, 0, forced=1).value == 1
        assert t.stabilizer_labels() == ["-Z"]

    def test_forced_contradiction_rejected(self):
        with pytest.raises(ValueError):
            measure_z(new_tableau(1), 0, forced=1)

    def test_random_outcome_needs_a_source(self):
        with pytest.raises(ValueError):
            measure_z(_plus_state(1), 0)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            measure_z(new_tableau(2), 5)


class TestCanonicalForm:
    """Uniqueness of the row-reduced generator set."""

    def test_generator_order_irrelevant(self):
        a = canonical_generators(_paulis("XX", "ZZ"))
        b = canonical_generators(_paulis("ZZ", "XX"))
        assert [g.to_label() for g in a] == [g.to_label() for g in b] == ["+XX", "+ZZ"]

    def test_product_replaced_set(self):
        assert stabilizer_group_equals(_paulis("XZ", "ZX"), _paulis("XZ", "YY"))

    def test_idempotent(self):
        rng = np.random.default_rng(8)
        t = new_tableau(5)
        _random_clifford(t, rng, 60, measure=True)
        once = canonical_form(t)
        twice = canonical_form(once)
        assert once.stabilizer_labels() == twice.stabilizer_labels()
        assert stabilizer_group_equals(t, once)
        once.check_invariants()

    def test_plus_states_equal(self):
        assert stabilizer_group_equals(_plus_state(4), _plus_state(4))

    def test_plus_vs_cluster(self):
        cluster = _plus_state(2)
        apply_cz(cluster, 0, 1)
        assert not stabilizer_group_equals(_plus_state(2), cluster)

    def test_sign_matters(self):
        assert not stabilizer_group_equals(_paulis("XZ", "ZX"), _paulis("-XZ", "ZX"))

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            stabilizer_group_equals(_plus_state(2), _plus_state(3))

    def test_non_commuting_generators_rejected(self):
        with pytest.raises(ValueError):
            canonical_generators(_paulis("XI", "ZI"))


class TestSubgroups:
    """Restriction to kept qubits and membership."""

    def test_product_state_spectator_dropped(self):
        t = new_tableau(3)
        apply_h(t, 0)
        apply_cnot(t, 0, 1)
        kept = reduced_generators(t, [0, 1])
        assert [g.to_label() for g in kept] == ["+XX", "+ZZ"]

    def test_entangled_spectator_masks_out_x_part(self):
        t = new_tableau(3)
        apply_h(t, 0)
        apply_cnot(t, 0, 1)
        apply_cnot(t, 1, 2)
        kept = reduced_generators(t, [0, 1])
        assert [g.to_label() for g in kept] == ["+ZZ"]

    def test_membership(self):
        cluster = _paulis("XZ", "ZX")
        assert group_contains(cluster, PauliString.from_label("YY"))
        assert not group_contains(cluster, PauliString.from_label("-YY"))
        assert not group_contains(cluster, PauliString.from_label("XI"))
        assert group_contains(cluster, PauliString.from_label("II"))


class TestInvariants:
    """Tableau invariants hold along long random sequences."""

    def test_random_sequences_keep_invariants(self):
        rng = np.random.default_rng(1)
        t = new_tableau(8)
        for _ in range(1000):
            _random_clifford(t, rng, 1, measure=True)
            t.check_invariants()

    def test_corrupted_tableau_detected(self):
        t = _plus_state(2)
        t.z[2, 1] = True  # XI -> XZ breaks commutation with IX
        with pytest.raises(TableauInvariantError):
            t.check_invariants()

    def test_added_qubit_starts_in_zero(self):
        t = _plus_state(2)
        apply_cz(t, 0, 1)
        q = t.add_qubit()
        assert q == 2
        assert t.stabilizer_labels() == ["+XZI", "+ZXI", "+IIZ"]
        t.check_invariants()
