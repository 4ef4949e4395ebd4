"""
Dense state-vector oracle for small registers (at most MAX_ORACLE_QUBITS).

Brute-force reference used to cross-check the tableau and the module
protocols. Qubit 0 is the most significant tensor axis, matching the
left-to-right order of Pauli labels.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from config import MAX_ORACLE_QUBITS, SV_TOLERANCE
from tools.tableau import PauliString

logger = logging.getLogger(__name__)

_SQRT_HALF = 1 / np.sqrt(2)
_NORM_TOLERANCE = 1e-10

_SINGLE = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT_HALF,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)

_DOUBLE = {
    "CZ": np.diag([1, 1, 1, -1]).astype(complex).reshape(2, 2, 2, 2),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ).reshape(2, 2, 2, 2),
}


class StateVector:
    """Pure state of n ≤ MAX_ORACLE_QUBITS qubits, initialised to |0...0>."""

    def __init__(self, n: int) -> None:
        if not 1 <= n <= MAX_ORACLE_QUBITS:
            raise ValueError(f"Oracle supports 1..{MAX_ORACLE_QUBITS} qubits, got {n}")
        self.n = n
        self.amplitudes = np.zeros(2**n, dtype=complex)
        self.amplitudes[0] = 1.0

    @classmethod
    def from_amplitudes(cls, amplitudes: Sequence[complex]) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        n = int(round(np.log2(amps.size)))
        if 2**n != amps.size:
            raise ValueError(f"Amplitude count {amps.size} is not a power of two")
        state = cls(n)
        state.amplitudes = amps / np.linalg.norm(amps)
        return state

    def copy(self) -> "StateVector":
        out = StateVector(self.n)
        out.amplitudes = self.amplitudes.copy()
        return out

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def _check(self, q: int) -> None:
        if not 0 <= q < self.n:
            raise ValueError(f"Qubit index {q} out of range for {self.n} qubits")


def _apply_matrix(s: StateVector, matrix: np.ndarray, targets: Sequence[int]) -> None:
    k = len(targets)
    psi = np.tensordot(matrix, s.tensor(), axes=(list(range(k, 2 * k)), list(targets)))
    psi = np.moveaxis(psi, list(range(k)), list(targets))
    s.amplitudes = psi.reshape(-1)


def sv_apply_gate(s: StateVector, gate: str, targets: Sequence[int]) -> None:
    """Apply H, X, Z (one target) or CZ, CNOT (control first) exactly."""
    for q in targets:
        s._check(q)
    if gate in _SINGLE:
        if len(targets) != 1:
            raise ValueError(f"{gate} takes one target, got {list(targets)}")
        _apply_matrix(s, _SINGLE[gate], targets)
    elif gate in _DOUBLE:
        if len(targets) != 2 or targets[0] == targets[1]:
            raise ValueError(f"{gate} takes two distinct targets, got {list(targets)}")
        _apply_matrix(s, _DOUBLE[gate], targets)
    else:
        raise ValueError(f"Unknown gate {gate!r}")
    if abs(s.norm() - 1.0) > _NORM_TOLERANCE:
        raise RuntimeError(f"State norm drifted to {s.norm()} after {gate}")


def sv_measure_z(
    s: StateVector,
    q: int,
    rng: Optional[np.random.Generator] = None,
    forced: Optional[int] = None,
) -> int:
    """Born-rule Z measurement; `forced` selects a branch of non-zero weight."""
    s._check(q)
    psi = np.moveaxis(s.tensor(), q, 0)
    p1 = float(np.sum(np.abs(psi[1]) ** 2))
    if forced is not None:
        if forced not in (0, 1):
            raise ValueError(f"Forced outcome must be 0 or 1, got {forced}")
        weight = p1 if forced else 1.0 - p1
        if weight < SV_TOLERANCE:
            raise ValueError(f"Forced outcome {forced} on qubit {q} has zero probability")
        outcome = forced
    elif rng is not None:
        outcome = int(rng.random() < p1)
    else:
        raise ValueError("Measurement needs an rng or a forced outcome")
    projected = psi.copy()
    projected[1 - outcome] = 0
    projected = np.moveaxis(projected, 0, q).reshape(-1)
    s.amplitudes = projected / np.linalg.norm(projected)
    return outcome


def sv_equal_up_to_phase(s1: StateVector, s2: StateVector) -> bool:
    if s1.n != s2.n:
        raise ValueError(f"Width mismatch: {s1.n} vs {s2.n}")
    return abs(np.vdot(s1.amplitudes, s2.amplitudes)) >= 1 - SV_TOLERANCE


def sv_apply_pauli_string(s: StateVector, g: PauliString) -> StateVector:
    """Return g·s as a new state (sign included)."""
    if g.n != s.n:
        raise ValueError(f"Width mismatch: {g.n} vs {s.n}")
    out = s.copy()
    for q in range(g.n):
        x, z = bool(g.x_bits[q]), bool(g.z_bits[q])
        if x and z:
            _apply_matrix(out, _PAULI_Y, [q])
        elif x:
            _apply_matrix(out, _SINGLE["X"], [q])
        elif z:
            _apply_matrix(out, _SINGLE["Z"], [q])
    out.amplitudes = out.amplitudes * g.phase
    return out


def sv_stabilizer_check(s: StateVector, g: PauliString) -> bool:
    """True iff g·s = s."""
    image = sv_apply_pauli_string(s, g)
    return bool(np.allclose(image.amplitudes, s.amplitudes, atol=SV_TOLERANCE))
