"""
Module Agent — ancilla-mediated entangling modules on the stabilizer tableau.

Each module owns a cavity qubit (the ancilla) that interacts with passing
photons and is read out at the end of a cycle:

- CZ module:      |+>; CZ(x,a); H(a); CZ(a,y); H(a); measure a; Z^a on x
- Parity module:  |+>; CZ(x,a); CZ(y,a); H(a); measure a  (a = Z_x Z_y bit)
- Buffered CZ:    |0>; CNOT(x,a); CZ(a,y); CNOT(x,a)  (x passes the cavity twice)

The CZ correction is either applied at once or pushed into a PauliFrame and
applied once at the end of preparation.
"""

import logging
from typing import Optional

import numpy as np

from config import CHECK_INVARIANTS
from models.schema import CorrectionMode, MeasurementOutcome, ModuleRunRecord, ProtocolKind
from tools.tableau import (
    StabilizerTableau,
    apply_cnot,
    apply_cz,
    apply_h,
    apply_pauli,
    measure_z,
)

logger = logging.getLogger(__name__)


class AncillaReuseError(RuntimeError):
    """Raised when an ancilla that was already read out is used again."""


class PauliFrame:
    """Pending Pauli corrections, one bit per photon qubit."""

    def __init__(self, n_photons: int) -> None:
        self.pending_z = np.zeros(n_photons, dtype=bool)
        # reserved for modules that would need X feed-forward
        self.pending_x = np.zeros(n_photons, dtype=bool)

    @property
    def n_photons(self) -> int:
        return self.pending_z.size

    def _check(self, q: int) -> None:
        if not 0 <= q < self.n_photons:
            raise ValueError(f"Qubit {q} is not a photon of this frame ({self.n_photons} photons)")

    def flip_z(self, q: int) -> None:
        self._check(q)
        self.pending_z[q] ^= True

    def flip_x(self, q: int) -> None:
        self._check(q)
        self.pending_x[q] ^= True

    def is_empty(self) -> bool:
        return not (self.pending_z.any() or self.pending_x.any())

    def clear(self) -> None:
        self.pending_z[:] = False
        self.pending_x[:] = False

    def __repr__(self) -> str:
        return (
            f"PauliFrame(z={np.flatnonzero(self.pending_z).tolist()}, "
            f"x={np.flatnonzero(self.pending_x).tolist()})"
        )


class AncillaRegister:
    """Ancilla qubits appended to a tableau; each is live for one cycle only."""

    def __init__(self) -> None:
        self.allocated: list[int] = []
        self.consumed: set[int] = set()
        self._members: set[int] = set()

    def allocate(self, t: StabilizerTableau) -> int:
        q = t.add_qubit()
        self.allocated.append(q)
        self._members.add(q)
        return q

    def check_live(self, q: int) -> None:
        if q in self.consumed:
            raise AncillaReuseError(f"Ancilla {q} was already read out")
        if q not in self._members:
            raise ValueError(f"Qubit {q} is not an ancilla of this register")

    def consume(self, q: int) -> None:
        self.check_live(q)
        self.consumed.add(q)

    def __contains__(self, q: int) -> bool:
        return q in self._members

    def __len__(self) -> int:
        return len(self.allocated)


class CavityCycle:
    """
    One ancilla lifetime inside a module cavity, driven step by step.

    The network simulator calls the steps as photons arrive (or as global
    control pulses fire); the run_*_module functions call them back to back.
    """

    def __init__(
        self,
        t: StabilizerTableau,
        ancillas: AncillaRegister,
        module_id: str,
        time_bin: Optional[int] = None,
    ) -> None:
        self.t = t
        self.ancillas = ancillas
        self.module_id = module_id
        self.time_bin = time_bin
        self.ancilla: Optional[int] = None
        self.photons: list[int] = []
        self.hadamards = 0
        self.outcome: Optional[MeasurementOutcome] = None

    def initialize(self, plus: bool = True) -> int:
        """Fresh ancilla in |+> (|0> then H) or in |0>."""
        if self.ancilla is not None:
            raise AncillaReuseError(f"{self.module_id}: cycle already holds ancilla {self.ancilla}")
        self.ancilla = self.ancillas.allocate(self.t)
        if plus:
            apply_h(self.t, self.ancilla)
        return self.ancilla

    def _live(self) -> int:
        if self.ancilla is None:
            raise RuntimeError(f"{self.module_id}: cavity used before initialisation")
        self.ancillas.check_live(self.ancilla)
        return self.ancilla

    def interact(self, photon: int) -> None:
        """Controlled-phase between the passing photon and the cavity qubit."""
        anc = self._live()
        if photon in self.ancillas:
            raise ValueError(f"Qubit {photon} is an ancilla, not a photon")
        apply_cz(self.t, photon, anc)
        self.photons.append(photon)

    def interact_cnot(self, photon: int) -> None:
        """Photon-controlled flip of the cavity qubit."""
        anc = self._live()
        if photon in self.ancillas:
            raise ValueError(f"Qubit {photon} is an ancilla, not a photon")
        apply_cnot(self.t, photon, anc)
        self.photons.append(photon)

    def hadamard(self) -> None:
        apply_h(self.t, self._live())
        self.hadamards += 1

    def readout(
        self,
        rng: Optional[np.random.Generator] = None,
        forced: Optional[int] = None,
    ) -> MeasurementOutcome:
        anc = self._live()
        self.outcome = measure_z(self.t, anc, rng=rng, forced=forced)
        self.ancillas.consume(anc)
        return self.outcome


# ── Helpers ───────────────────────────────────────────────────────────────────

def _check_photons(
    t: StabilizerTableau,
    x: int,
    y: int,
    ancillas: AncillaRegister,
    frame: Optional[PauliFrame] = None,
) -> None:
    if x == y:
        raise ValueError(f"Module needs two distinct photons, got {x} twice")
    for q in (x, y):
        t.check_qubit(q)
        if q in ancillas:
            raise ValueError(f"Qubit {q} is an ancilla, not a photon")
        if frame is not None:
            frame._check(q)


def _after_firing(t: StabilizerTableau, record: ModuleRunRecord) -> None:
    logger.debug(
        "%s fired on (%d, %d): ancilla %d -> %d",
        record.module_id, record.x, record.y, record.ancilla, record.outcome.value,
    )
    if CHECK_INVARIANTS:
        t.check_invariants()


# ── Protocols ─────────────────────────────────────────────────────────────────

def complete_cz_firing(
    t: StabilizerTableau,
    x: int,
    y: int,
    ancilla: int,
    outcome: MeasurementOutcome,
    frame: Optional[PauliFrame],
    mode: CorrectionMode,
    module_id: str,
    time: Optional[int] = None,
) -> ModuleRunRecord:
    """
    Apply (or defer) the Z^a correction on the first photon and record the firing.

    Raises:
        ValueError: Deferred mode without a frame.
    """
    if outcome.value:
        if mode == CorrectionMode.IMMEDIATE:
            apply_pauli(t, x, "Z")
        else:
            if frame is None:
                raise ValueError("Deferred corrections need a PauliFrame")
            frame.flip_z(x)
    record = ModuleRunRecord(
        module_id=module_id,
        kind=ProtocolKind.CZ,
        x=x,
        y=y,
        ancilla=ancilla,
        outcome=outcome,
        correction_target=x,
        time=time,
    )
    _after_firing(t, record)
    return record


def run_cz_module(
    t: StabilizerTableau,
    x: int,
    y: int,
    frame: Optional[PauliFrame],
    mode: CorrectionMode,
    rng: Optional[np.random.Generator],
    *,
    ancillas: Optional[AncillaRegister] = None,
    forced: Optional[int] = None,
    module_id: str = "cz",
) -> ModuleRunRecord:
    """
    Fire a CZ module on photons x (first) and y.

    After the correction is applied the photons have undergone exactly CZ(x, y)
    and the ancilla is left in a Z eigenstate.

    Args:
        t: Tableau holding the photons; the ancilla is appended to it.
        x: First photon; receives the Z^a correction.
        y: Second photon.
        frame: Pauli frame for deferred corrections.
        mode: Apply the correction now or defer it to the frame.
        rng: Seeded generator for the ancilla readout.
        ancillas: Register tracking consumed ancillas; a private one if omitted.
        forced: Pin the ancilla outcome (branch selection in tests).
        module_id: Name written into the record.

    Returns:
        The firing record.
    """
    ancillas = ancillas if ancillas is not None else AncillaRegister()
    _check_photons(t, x, y, ancillas, frame if mode == CorrectionMode.DEFERRED else None)
    cycle = CavityCycle(t, ancillas, module_id)
    anc = cycle.initialize()
    cycle.interact(x)
    cycle.hadamard()
    cycle.interact(y)
    cycle.hadamard()
    outcome = cycle.readout(rng, forced)
    return complete_cz_firing(t, x, y, anc, outcome, frame, mode, module_id)


def run_parity_module(
    t: StabilizerTableau,
    x: int,
    y: int,
    rng: Optional[np.random.Generator],
    *,
    ancillas: Optional[AncillaRegister] = None,
    forced: Optional[int] = None,
    module_id: str = "parity",
) -> ModuleRunRecord:
    """
    Nondestructive Z_x Z_y parity measurement.

    The outcome bit is the parity; no postprocessing gate is applied.
    """
    ancillas = ancillas if ancillas is not None else AncillaRegister()
    _check_photons(t, x, y, ancillas)
    cycle = CavityCycle(t, ancillas, module_id)
    anc = cycle.initialize()
    cycle.interact(x)
    cycle.interact(y)
    cycle.hadamard()
    outcome = cycle.readout(rng, forced)
    record = ModuleRunRecord(
        module_id=module_id, kind=ProtocolKind.PARITY, x=x, y=y, ancilla=anc, outcome=outcome
    )
    _after_firing(t, record)
    return record


def run_buffered_cz_module(
    t: StabilizerTableau,
    x: int,
    y: int,
    rng: Optional[np.random.Generator] = None,
    *,
    ancillas: Optional[AncillaRegister] = None,
    module_id: str = "buffered",
) -> ModuleRunRecord:
    """
    CZ(x, y) without measurement-based disentangling.

    The first photon meets the cavity twice, so the ancilla (prepared in |0>)
    returns to |0> and the readout is deterministic. Needs a delay line for x.

    Raises:
        RuntimeError: The ancilla did not come back disentangled.
    """
    ancillas = ancillas if ancillas is not None else AncillaRegister()
    _check_photons(t, x, y, ancillas)
    cycle = CavityCycle(t, ancillas, module_id)
    anc = cycle.initialize(plus=False)
    cycle.interact_cnot(x)
    apply_cz(t, anc, y)
    cycle.photons.append(y)
    cycle.interact_cnot(x)
    outcome = cycle.readout(rng)
    if not outcome.deterministic or outcome.value:
        raise RuntimeError(f"{module_id}: ancilla left entangled after buffered CZ")
    record = ModuleRunRecord(
        module_id=module_id, kind=ProtocolKind.BUFFERED, x=x, y=y, ancilla=anc, outcome=outcome
    )
    _after_firing(t, record)
    return record


def apply_frame(t: StabilizerTableau, frame: PauliFrame) -> int:
    """
    Apply every pending correction to the tableau and clear the frame.

    Returns:
        Number of Pauli operators applied.
    """
    applied = 0
    for q in np.flatnonzero(frame.pending_z):
        apply_pauli(t, int(q), "Z")
        applied += 1
    for q in np.flatnonzero(frame.pending_x):
        apply_pauli(t, int(q), "X")
        applied += 1
    frame.clear()
    if applied:
        logger.info("Applied %d deferred corrections", applied)
    return applied
