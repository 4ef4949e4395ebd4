"""
Stabilizer tableau — Aaronson-Gottesman style simulator over numpy bit arrays.

Rows 0..n-1 hold destabilizers, rows n..2n-1 stabilizers. Each row is a
signed Pauli string stored as x/z bit vectors plus one sign bit; with the
gate set used here (H, CZ, CNOT, X, Z, Z-measurement) stabilizer signs are
always real.

Also provides the GF(2) row reduction used for canonical forms, subgroup
restriction and group membership.
"""

import logging
from typing import Optional, Sequence, Union

import numpy as np

from models.schema import MeasurementOutcome

logger = logging.getLogger(__name__)

_LETTERS = {(False, False): "I", (True, False): "X", (False, True): "Z", (True, True): "Y"}


class TableauInvariantError(RuntimeError):
    """Raised when a tableau leaves the valid stabilizer-state manifold."""


# ── Pauli strings ─────────────────────────────────────────────────────────────

class PauliString:
    """A signed Pauli operator on n qubits (sign is +1 or -1 only)."""

    __slots__ = ("x_bits", "z_bits", "sign")

    def __init__(self, x_bits, z_bits, sign: int = 0) -> None:
        self.x_bits = np.array(x_bits, dtype=bool)
        self.z_bits = np.array(z_bits, dtype=bool)
        if self.x_bits.ndim != 1 or self.x_bits.shape != self.z_bits.shape:
            raise ValueError("x_bits and z_bits must be 1-D vectors of equal length")
        self.sign = int(sign) & 1

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse labels such as '+XZI', '-ZZ' or 'XIY'."""
        sign = 0
        if label[:1] in ("+", "-"):
            sign = int(label[0] == "-")
            label = label[1:]
        bad = set(label) - set("IXYZ")
        if bad or not label:
            raise ValueError(f"Invalid Pauli label: {label!r}")
        x = [c in "XY" for c in label]
        z = [c in "ZY" for c in label]
        return cls(x, z, sign)

    @property
    def n(self) -> int:
        return self.x_bits.size

    @property
    def phase(self) -> int:
        return -1 if self.sign else 1

    def to_label(self) -> str:
        body = "".join(_LETTERS[(bool(a), bool(b))] for a, b in zip(self.x_bits, self.z_bits))
        return ("-" if self.sign else "+") + body

    def commutes_with(self, other: "PauliString") -> bool:
        if other.n != self.n:
            raise ValueError(f"Width mismatch: {self.n} vs {other.n}")
        overlap = np.count_nonzero(self.x_bits & other.z_bits) + np.count_nonzero(
            self.z_bits & other.x_bits
        )
        return overlap % 2 == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        if not self.commutes_with(other):
            raise ValueError("Product of anticommuting Paulis has an imaginary sign")
        x, z, r = _row_product(self.x_bits, self.z_bits, self.sign, other.x_bits, other.z_bits, other.sign)
        return PauliString(x, z, r)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (
            self.sign == other.sign
            and np.array_equal(self.x_bits, other.x_bits)
            and np.array_equal(self.z_bits, other.z_bits)
        )

    __hash__ = None  # mutable

    def __repr__(self) -> str:
        return f"PauliString({self.to_label()!r})"


# ── Row arithmetic ────────────────────────────────────────────────────────────

def _phase_exponent(x1, z1, x2, z2) -> np.ndarray:
    """Power of i picked up by P1·P2, summed over qubits (last axis)."""
    x1 = np.asarray(x1, dtype=np.int8)
    z1 = np.asarray(z1, dtype=np.int8)
    x2 = np.asarray(x2, dtype=np.int8)
    z2 = np.asarray(z2, dtype=np.int8)
    g = (
        (x1 & z1) * (z2 - x2)
        + (x1 & (1 - z1)) * z2 * (2 * x2 - 1)
        + ((1 - x1) & z1) * x2 * (1 - 2 * z2)
    )
    return g.sum(axis=-1, dtype=np.int64)


def _row_product(x1, z1, r1, x2, z2, r2) -> tuple[np.ndarray, np.ndarray, int]:
    """Return P1·P2 for two commuting signed rows."""
    exponent = (2 * int(r1) + 2 * int(r2) + int(_phase_exponent(x1, z1, x2, z2))) % 4
    if exponent % 2:
        raise TableauInvariantError("Row product produced an imaginary sign")
    return np.logical_xor(x1, x2), np.logical_xor(z1, z2), exponent // 2


def _multiply_rows(
    x: np.ndarray,
    z: np.ndarray,
    r: np.ndarray,
    targets: np.ndarray,
    src: int,
    *,
    check: bool = True,
) -> None:
    """In place: row[t] <- row[src] · row[t] for every t in targets."""
    if targets.size == 0:
        return
    xs, zs = x[src].copy(), z[src].copy()
    exponent = (
        2 * r[targets].astype(np.int64)
        + 2 * int(r[src])
        + _phase_exponent(xs, zs, x[targets], z[targets])
    ) % 4
    if check and np.any(exponent % 2):
        raise TableauInvariantError("Stabilizer row product produced an imaginary sign")
    r[targets] = (exponent // 2).astype(np.uint8)
    x[targets] ^= xs
    z[targets] ^= zs


def _swap_rows(arrays: Sequence[np.ndarray], a: int, b: int) -> None:
    for arr in arrays:
        arr[[a, b]] = arr[[b, a]]


def _standard_columns(qubits: Sequence[int]) -> list[tuple[bool, int]]:
    """X block first, then Z block, each in qubit order."""
    return [(True, q) for q in qubits] + [(False, q) for q in qubits]


def _eliminate(
    x: np.ndarray,
    z: np.ndarray,
    r: np.ndarray,
    columns: Sequence[tuple[bool, int]],
    dx: Optional[np.ndarray] = None,
    dz: Optional[np.ndarray] = None,
) -> list[tuple[bool, int]]:
    """
    Reduced row echelon form over GF(2) with signs tracked, in place.

    When destabilizer blocks are given they are updated so that each row keeps
    anticommuting with its stabilizer partner only. Returns the pivot column of
    every leading row, in row order.
    """
    rows = x.shape[0]
    pivot_row = 0
    pivots: list[tuple[bool, int]] = []
    for is_x, q in columns:
        if pivot_row == rows:
            break
        block = x if is_x else z
        candidates = np.flatnonzero(block[pivot_row:, q])
        if candidates.size == 0:
            continue
        k = pivot_row + int(candidates[0])
        if k != pivot_row:
            _swap_rows([x, z, r], pivot_row, k)
            if dx is not None:
                _swap_rows([dx, dz], pivot_row, k)
        targets = np.flatnonzero(block[:, q])
        targets = targets[targets != pivot_row]
        _multiply_rows(x, z, r, targets, pivot_row)
        if dx is not None and targets.size:
            # destabilizer signs carry no meaning
            dx[pivot_row] ^= np.bitwise_xor.reduce(dx[targets], axis=0)
            dz[pivot_row] ^= np.bitwise_xor.reduce(dz[targets], axis=0)
        pivots.append((is_x, q))
        pivot_row += 1
    return pivots


def _symplectic(xa, za, xb, zb) -> np.ndarray:
    """Matrix of pairwise anticommutation bits between two row sets."""
    xa, za = np.asarray(xa, dtype=np.int64), np.asarray(za, dtype=np.int64)
    xb, zb = np.asarray(xb, dtype=np.int64), np.asarray(zb, dtype=np.int64)
    return (xa @ zb.T + za @ xb.T) % 2


def _stack(generators: Sequence[PauliString]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not generators:
        raise ValueError("Empty generator list")
    width = generators[0].n
    if any(g.n != width for g in generators):
        raise ValueError("Generators have different widths")
    x = np.array([g.x_bits for g in generators], dtype=bool)
    z = np.array([g.z_bits for g in generators], dtype=bool)
    r = np.array([g.sign for g in generators], dtype=np.uint8)
    return x, z, r


def _to_paulis(x: np.ndarray, z: np.ndarray, r: np.ndarray) -> list[PauliString]:
    return [PauliString(x[i], z[i], r[i]) for i in range(x.shape[0])]


# ── Tableau ───────────────────────────────────────────────────────────────────

class StabilizerTableau:
    """n-qubit stabilizer state with destabilizers; grows when ancillas are added."""

    def __init__(self, n: int) -> None:
        if n < 1:
            raise ValueError(f"Tableau needs at least one qubit, got {n}")
        idx = np.arange(n)
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        self.x[idx, idx] = True
        self.z[n + idx, idx] = True

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def stabilizers(self) -> list[PauliString]:
        n = self.n
        return _to_paulis(self.x[n:], self.z[n:], self.r[n:])

    @property
    def destabilizers(self) -> list[PauliString]:
        n = self.n
        return _to_paulis(self.x[:n], self.z[:n], self.r[:n])

    def stabilizer_labels(self) -> list[str]:
        return [p.to_label() for p in self.stabilizers]

    def copy(self) -> "StabilizerTableau":
        out = StabilizerTableau.__new__(StabilizerTableau)
        out.x = self.x.copy()
        out.z = self.z.copy()
        out.r = self.r.copy()
        return out

    def add_qubit(self) -> int:
        """Append a qubit in |0> and return its index."""
        n = self.n
        x = np.zeros((2 * n + 2, n + 1), dtype=bool)
        z = np.zeros((2 * n + 2, n + 1), dtype=bool)
        r = np.zeros(2 * n + 2, dtype=np.uint8)
        x[:n, :n], z[:n, :n], r[:n] = self.x[:n], self.z[:n], self.r[:n]
        x[n + 1:2 * n + 1, :n] = self.x[n:]
        z[n + 1:2 * n + 1, :n] = self.z[n:]
        r[n + 1:2 * n + 1] = self.r[n:]
        x[n, n] = True
        z[2 * n + 1, n] = True
        self.x, self.z, self.r = x, z, r
        return n

    def check_invariants(self) -> None:
        """Commutation, destabilizer pairing and (hence) stabilizer independence."""
        n = self.n
        omega = _symplectic(self.x, self.z, self.x, self.z)
        expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
        expected[:n, n:] = np.eye(n, dtype=np.int64)
        expected[n:, :n] = np.eye(n, dtype=np.int64)
        if not np.array_equal(omega, expected):
            raise TableauInvariantError("Tableau rows violate the symplectic pairing")

    def check_qubit(self, q: int) -> None:
        if not 0 <= q < self.n:
            raise ValueError(f"Qubit index {q} out of range for {self.n} qubits")

    def __repr__(self) -> str:
        return f"StabilizerTableau(n={self.n}, stabilizers={self.stabilizer_labels()})"


def new_tableau(n: int) -> StabilizerTableau:
    """|0...0> on n qubits: stabilizers Z_i, destabilizers X_i."""
    return StabilizerTableau(n)


# ── Gates ─────────────────────────────────────────────────────────────────────

def apply_h(t: StabilizerTableau, q: int) -> None:
    t.check_qubit(q)
    xq, zq = t.x[:, q].copy(), t.z[:, q].copy()
    t.r ^= (xq & zq).astype(np.uint8)
    t.x[:, q], t.z[:, q] = zq, xq


def _check_pair(t: StabilizerTableau, a: int, b: int) -> None:
    t.check_qubit(a)
    t.check_qubit(b)
    if a == b:
        raise ValueError(f"Two-qubit gate needs distinct qubits, got {a} twice")


def apply_cz(t: StabilizerTableau, q1: int, q2: int) -> None:
    _check_pair(t, q1, q2)
    xa, xb = t.x[:, q1].copy(), t.x[:, q2].copy()
    za, zb = t.z[:, q1], t.z[:, q2]
    t.r ^= (xa & xb & (za ^ zb)).astype(np.uint8)
    t.z[:, q1] ^= xb
    t.z[:, q2] ^= xa


def apply_cnot(t: StabilizerTableau, c: int, x: int) -> None:
    _check_pair(t, c, x)
    xc, zc = t.x[:, c].copy(), t.z[:, c].copy()
    xt, zt = t.x[:, x].copy(), t.z[:, x].copy()
    t.r ^= (xc & zt & ~(xt ^ zc)).astype(np.uint8)
    t.x[:, x] ^= xc
    t.z[:, c] ^= zt


def apply_pauli(t: StabilizerTableau, q: int, p: str) -> None:
    """Apply X or Z on qubit q (sign flips of anticommuting rows)."""
    t.check_qubit(q)
    if p == "X":
        t.r ^= t.z[:, q].astype(np.uint8)
    elif p == "Z":
        t.r ^= t.x[:, q].astype(np.uint8)
    else:
        raise ValueError(f"Unsupported Pauli {p!r}; expected 'X' or 'Z'")


def measure_z(
    t: StabilizerTableau,
    q: int,
    rng: Optional[np.random.Generator] = None,
    forced: Optional[int] = None,
) -> MeasurementOutcome:
    """
    Measure qubit q in the computational basis.

    Args:
        t: Tableau, updated in place by the projection rule.
        q: Qubit index.
        rng: Seeded generator supplying the fair coin of random outcomes.
        forced: Pin the outcome of a random measurement (branch selection).

    Returns:
        The outcome bit and whether it was already determined by the state.

    Raises:
        ValueError: Bad index, or a forced value contradicting a deterministic outcome.
    """
    t.check_qubit(q)
    if forced is not None and forced not in (0, 1):
        raise ValueError(f"Forced outcome must be 0 or 1, got {forced}")
    n = t.n
    hits = np.flatnonzero(t.x[n:, q])

    if hits.size:
        p = n + int(hits[0])
        _multiply_rows(t.x, t.z, t.r, n + hits[1:], p)
        destab = np.flatnonzero(t.x[:n, q])
        _multiply_rows(t.x, t.z, t.r, destab[destab != p - n], p, check=False)
        t.x[p - n], t.z[p - n], t.r[p - n] = t.x[p], t.z[p], t.r[p]
        t.x[p] = False
        t.z[p] = False
        t.z[p, q] = True
        if forced is not None:
            value = forced
        elif rng is not None:
            value = int(rng.integers(2))
        else:
            raise ValueError("Random measurement outcome needs an rng or a forced value")
        t.r[p] = value
        return MeasurementOutcome(value=value, deterministic=False)

    sx = np.zeros(n, dtype=bool)
    sz = np.zeros(n, dtype=bool)
    sr = 0
    for j in np.flatnonzero(t.x[:n, q]):
        sx, sz, sr = _row_product(t.x[n + j], t.z[n + j], t.r[n + j], sx, sz, sr)
    if forced is not None and forced != sr:
        raise ValueError(f"Forced outcome {forced} on qubit {q} has zero probability")
    return MeasurementOutcome(value=int(sr), deterministic=True)


# ── Canonical form and group comparison ───────────────────────────────────────

def canonical_form(t: StabilizerTableau) -> StabilizerTableau:
    """Unique row-reduced stabilizer generators (X block before Z block), signs kept."""
    n = t.n
    out = t.copy()
    _eliminate(out.x[n:], out.z[n:], out.r[n:], _standard_columns(range(n)), out.x[:n], out.z[:n])
    return out


def canonical_generators(generators: Sequence[PauliString]) -> list[PauliString]:
    """Canonical form of an explicit commuting generator list."""
    x, z, r = _stack(generators)
    if np.any(_symplectic(x, z, x, z)):
        raise ValueError("Generators do not commute")
    _eliminate(x, z, r, _standard_columns(range(x.shape[1])))
    keep = x.any(axis=1) | z.any(axis=1)
    if np.any(r[~keep]):
        raise ValueError("Generators are inconsistent: their product is -I")
    return _to_paulis(x[keep], z[keep], r[keep])


def _canonical_arrays(
    group: Union[StabilizerTableau, Sequence[PauliString]],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(group, StabilizerTableau):
        c = canonical_form(group)
        n = c.n
        return c.x[n:], c.z[n:], c.r[n:]
    return _stack(canonical_generators(group))


def stabilizer_group_equals(
    t1: Union[StabilizerTableau, Sequence[PauliString]],
    t2: Union[StabilizerTableau, Sequence[PauliString]],
) -> bool:
    """True iff both generate the same signed stabilizer group."""
    x1, z1, r1 = _canonical_arrays(t1)
    x2, z2, r2 = _canonical_arrays(t2)
    if x1.shape[1] != x2.shape[1]:
        raise ValueError(f"Width mismatch: {x1.shape[1]} vs {x2.shape[1]}")
    return (
        x1.shape == x2.shape
        and np.array_equal(x1, x2)
        and np.array_equal(z1, z2)
        and np.array_equal(r1, r2)
    )


def reduced_generators(t: StabilizerTableau, keep: Sequence[int]) -> list[PauliString]:
    """
    Canonical generators of the stabilizer subgroup supported on `keep`.

    Qubits outside `keep` (measured ancillas, measured-out photons) are
    eliminated first; rows left without support on them span the subgroup.
    Generators are returned over the kept qubits only, in sorted order.
    """
    n = t.n
    kept = sorted(set(keep))
    if not kept:
        raise ValueError("No qubits to keep")
    for q in kept:
        t.check_qubit(q)
    kept_set = set(kept)
    dropped = [q for q in range(n) if q not in kept_set]
    x, z, r = t.x[n:].copy(), t.z[n:].copy(), t.r[n:].copy()
    _eliminate(x, z, r, _standard_columns(dropped) + _standard_columns(kept))
    if dropped:
        mask = ~(x[:, dropped].any(axis=1) | z[:, dropped].any(axis=1))
    else:
        mask = np.ones(n, dtype=bool)
    sx, sz, sr = x[mask][:, kept], z[mask][:, kept], r[mask]
    nonzero = sx.any(axis=1) | sz.any(axis=1)
    sx, sz, sr = sx[nonzero], sz[nonzero], sr[nonzero]
    _eliminate(sx, sz, sr, _standard_columns(range(len(kept))))
    return _to_paulis(sx, sz, sr)


def group_contains(generators: Sequence[PauliString], p: PauliString) -> bool:
    """Whether the signed Pauli p belongs to the group the generators span."""
    x, z, r = _stack(generators)
    if p.n != x.shape[1]:
        raise ValueError(f"Width mismatch: {p.n} vs {x.shape[1]}")
    if np.any(_symplectic(x, z, p.x_bits[None, :], p.z_bits[None, :])):
        return False
    pivots = _eliminate(x, z, r, _standard_columns(range(x.shape[1])))
    px, pz, pr = p.x_bits.copy(), p.z_bits.copy(), p.sign
    for row, (is_x, q) in enumerate(pivots):
        if (px if is_x else pz)[q]:
            px, pz, pr = _row_product(x[row], z[row], r[row], px, pz, pr)
    return not px.any() and not pz.any() and pr == 0
