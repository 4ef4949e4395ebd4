"""
Unit tests for the Module Agent.

Tests cover:
- CZ module equals a direct CZ for both ancilla branches
- Deferred corrections equal immediate ones
- Parity module outcomes and post-measurement state
- Buffered CZ module
- Ancilla hygiene and reuse errors
- Pauli frame application
"""

import numpy as np
import pytest

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from agents.module_agent import (
    AncillaRegister,
    AncillaReuseError,
    CavityCycle,
    PauliFrame,
    apply_frame,
    run_buffered_cz_module,
    run_cz_module,
    run_parity_module,
)
from models.schema import CorrectionMode, ProtocolKind
from tools.statevector import StateVector, sv_apply_gate, sv_equal_up_to_phase, sv_measure_z
from tools.tableau import (
    PauliString,
    apply_cnot,
    apply_cz,
    apply_h,
    apply_pauli,
    canonical_form,
    group_contains,
    new_tableau,
    reduced_generators,
    stabilizer_group_equals,
)


# ── Helpers ───────────────────────────────────────────────────────────────────

def _random_state(n: int, rng: np.random.Generator):
    t = new_tableau(n)
    for _ in range(4 * n):
        q = int(rng.integers(n))
        op = int(rng.integers(4))
        if op == 0:
            apply_h(t, q)
        elif op == 1 and n > 1:
            apply_cz(t, q, int((q + 1 + rng.integers(n - 1)) % n))
        elif op == 2 and n > 1:
            apply_cnot(t, q, int((q + 1 + rng.integers(n - 1)) % n))
        else:
            apply_pauli(t, q, "Z" if rng.integers(2) else "X")
    return t


def _photons_equal(t_module, t_direct, n: int) -> bool:
    return stabilizer_group_equals(reduced_generators(t_module, range(n)), canonical_form(t_direct).stabilizers)


def _pair(rng: np.random.Generator, n: int) -> tuple[int, int]:
    x, y = rng.choice(n, size=2, replace=False)
    return int(x), int(y)


# ── Tests ─────────────────────────────────────────────────────────────────────

class TestCZModule:
    """Measurement-based CZ."""

    def test_equivalence_both_branches(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(2, 9))
            t = _random_state(n, rng)
            x, y = _pair(rng, n)
            direct = t.copy()
            apply_cz(direct, x, y)
            for branch in (0, 1):
                module = t.copy()
                record = run_cz_module(module, x, y, None, CorrectionMode.IMMEDIATE, None, forced=branch)
                assert record.outcome.value == branch
                assert not record.outcome.deterministic
                assert _photons_equal(module, direct, n)

    def test_plus_plus_gives_cluster(self):
        for seed in range(10):
            t = new_tableau(2)
            apply_h(t, 0)
            apply_h(t, 1)
            run_cz_module(t, 0, 1, None, CorrectionMode.IMMEDIATE, np.random.default_rng(seed))
            assert [g.to_label() for g in reduced_generators(t, [0, 1])] == ["+XZ", "+ZX"]

    def test_zero_control_leaves_photons(self):
        t = new_tableau(2)
        apply_h(t, 1)
        run_cz_module(t, 0, 1, None, CorrectionMode.IMMEDIATE, np.random.default_rng(0))
        assert stabilizer_group_equals(reduced_generators(t, [0, 1]), [PauliString.from_label("ZI"), PauliString.from_label("IX")])

    def test_one_control_flips_target(self):
        t = new_tableau(2)
        apply_pauli(t, 0, "X")
        apply_h(t, 1)
        run_cz_module(t, 0, 1, None, CorrectionMode.IMMEDIATE, np.random.default_rng(0))
        assert stabilizer_group_equals(reduced_generators(t, [0, 1]), [PauliString.from_label("-ZI"), PauliString.from_label("-IX")])

    def test_record_fields(self):
        t = new_tableau(3)
        record = run_cz_module(t, 2, 0, None, CorrectionMode.IMMEDIATE, None, forced=1, module_id="M1a-r0")
        assert record.kind == ProtocolKind.CZ
        assert (record.x, record.y, record.correction_target) == (2, 0, 2)
        assert record.ancilla == 3
        assert record.module_id == "M1a-r0"

    def test_ancilla_disentangled(self):
        rng = np.random.default_rng(21)
        for _ in range(30):
            n = int(rng.integers(2, 7))
            t = _random_state(n, rng)
            x, y = _pair(rng, n)
            record = run_cz_module(t, x, y, None, CorrectionMode.IMMEDIATE, rng)
            z_anc = np.zeros(t.n, dtype=bool)
            z_anc[record.ancilla] = True
            readout = PauliString(np.zeros(t.n, dtype=bool), z_anc, record.outcome.value)
            assert group_contains(t.stabilizers, readout)
            assert len(reduced_generators(t, range(n))) == n

    def test_same_photon_rejected(self):
        with pytest.raises(ValueError):
            run_cz_module(new_tableau(2), 1, 1, None, CorrectionMode.IMMEDIATE, None, forced=0)

    def test_ancilla_as_photon_rejected(self):
        t = new_tableau(2)
        ancillas = AncillaRegister()
        run_cz_module(t, 0, 1, None, CorrectionMode.IMMEDIATE, None, ancillas=ancillas, forced=0)
        with pytest.raises(ValueError):
            run_cz_module(t, 0, 2, None, CorrectionMode.IMMEDIATE, None, ancillas=ancillas, forced=0)

    def test_oracle_phase_exact(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(2, 6))
            x, y = _pair(rng, n)
            prep = [(int(rng.integers(3)), int(rng.integers(n))) for _ in range(3 * n)]
            for branch in (0, 1):
                direct = StateVector(n + 1)
                module = StateVector(n + 1)
                for s in (direct, module):
                    for op, q in prep:
                        sv_apply_gate(s, ("H", "X", "Z")[op], [q])
                    for q in range(n - 1):
                        sv_apply_gate(s, "CZ", [q, q + 1])
                anc = n
                sv_apply_gate(module, "H", [anc])
                sv_apply_gate(module, "CZ", [x, anc])
                sv_apply_gate(module, "H", [anc])
                sv_apply_gate(module, "CZ", [anc, y])
                sv_apply_gate(module, "H", [anc])
                sv_measure_z(module, anc, forced=branch)
                if branch:
                    sv_apply_gate(module, "Z", [x])
                sv_apply_gate(direct, "CZ", [x, y])
                if branch:
                    sv_apply_gate(direct, "X", [anc])
                assert sv_equal_up_to_phase(module, direct)


class TestDeferredCorrections:
    """Pauli frame soundness."""

    def test_interleaved_firings(self):
        rng = np.random.default_rng(13)
        for _ in range(40):
            n = int(rng.integers(3, 8))
            base = _random_state(n, rng)
            immediate, deferred = base.copy(), base.copy()
            frame = PauliFrame(n)
            for _ in range(int(rng.integers(1, 6))):
                x, y = _pair(rng, n)
                branch = int(rng.integers(2))
                run_cz_module(immediate, x, y, None, CorrectionMode.IMMEDIATE, None, forced=branch)
                run_cz_module(deferred, x, y, frame, CorrectionMode.DEFERRED, None, forced=branch)
            apply_frame(deferred, frame)
            assert frame.is_empty()
            assert stabilizer_group_equals(immediate, deferred)

    def test_deferred_sets_frame_bit(self):
        t = new_tableau(2)
        frame = PauliFrame(2)
        run_cz_module(t, 1, 0, frame, CorrectionMode.DEFERRED, None, forced=1)
        assert frame.pending_z.tolist() == [False, True]

    def test_empty_frame_is_noop(self):
        t = new_tableau(3)
        apply_h(t, 1)
        before = t.stabilizer_labels()
        assert apply_frame(t, PauliFrame(3)) == 0
        assert t.stabilizer_labels() == before

    def test_pending_z_flips_plus(self):
        t = new_tableau(1)
        apply_h(t, 0)
        frame = PauliFrame(1)
        frame.flip_z(0)
        assert apply_frame(t, frame) == 1
        assert t.stabilizer_labels() == ["-X"]

    def test_frame_rejects_non_photon(self):
        with pytest.raises(ValueError):
            PauliFrame(2).flip_z(2)


class TestParityModule:
    """Nondestructive Z_x Z_y measurement."""

    def test_even_parity(self):
        record = run_parity_module(new_tableau(2), 0, 1, None)
        assert record.kind == ProtocolKind.PARITY
        assert record.outcome.value == 0
        assert record.outcome.deterministic
        assert record.correction_target is None

    def test_bell_pair_unchanged(self):
        t = new_tableau(2)
        apply_h(t, 0)
        apply_cnot(t, 0, 1)
        record = run_parity_module(t, 0, 1, None)
        assert record.outcome.value == 0
        assert record.outcome.deterministic
        assert [g.to_label() for g in reduced_generators(t, [0, 1])] == ["+XX", "+ZZ"]

    @pytest.mark.parametrize("branch", [0, 1])
    def test_plus_plus_projects(self, branch):
        t = new_tableau(2)
        apply_h(t, 0)
        apply_h(t, 1)
        record = run_parity_module(t, 0, 1, None, forced=branch)
        assert not record.outcome.deterministic
        zz = PauliString.from_label("-ZZ" if branch else "+ZZ")
        assert group_contains(reduced_generators(t, [0, 1]), zz)

    def test_deterministic_iff_zz_in_group(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            n = int(rng.integers(2, 6))
            t = _random_state(n, rng)
            x, y = _pair(rng, n)
            z = np.zeros(n, dtype=bool)
            z[[x, y]] = True
            in_group = any(
                group_contains(t.stabilizers, PauliString(np.zeros(n, dtype=bool), z, sign)) for sign in (0, 1)
            )
            record = run_parity_module(t, x, y, rng)
            assert record.outcome.deterministic == in_group


class TestBufferedModule:
    """CZ from two interactions of the first photon."""

    def test_equals_direct_cz(self):
        rng = np.random.default_rng(41)
        for _ in range(50):
            n = int(rng.integers(2, 7))
            t = _random_state(n, rng)
            x, y = _pair(rng, n)
            direct = t.copy()
            apply_cz(direct, x, y)
            record = run_buffered_cz_module(t, x, y)
            assert record.kind == ProtocolKind.BUFFERED
            assert record.outcome.deterministic and record.outcome.value == 0
            assert _photons_equal(t, direct, n)


class TestAncillas:
    """Each ancilla lives for one cycle."""

    def test_consume_twice(self):
        t = new_tableau(1)
        register = AncillaRegister()
        q = register.allocate(t)
        register.consume(q)
        with pytest.raises(AncillaReuseError):
            register.consume(q)

    def test_cycle_cannot_reuse_its_ancilla(self):
        t = new_tableau(2)
        apply_h(t, 0)
        cycle = CavityCycle(t, AncillaRegister(), "M2-r0-r1")
        cycle.initialize()
        cycle.interact(0)
        cycle.hadamard()
        cycle.readout(np.random.default_rng(0))
        with pytest.raises(AncillaReuseError):
            cycle.interact(1)
        with pytest.raises(AncillaReuseError):
            cycle.initialize()

    def test_cycle_needs_initialisation(self):
        cycle = CavityCycle(new_tableau(1), AncillaRegister(), "M1a-r0")
        with pytest.raises(RuntimeError):
            cycle.hadamard()
