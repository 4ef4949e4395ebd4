"""
Pydantic models for every serialisable record of the cluster-state builder.

Layouts, schedules, module firings, event logs, resource counts and run
reports all live here so the simulator, the pipeline and the CLI agree on
one JSON shape.
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


# ── Enums ─────────────────────────────────────────────────────────────────────

class Tag(str, Enum):
    """Non-computational photon degree of freedom used for passive routing."""

    H = "H"
    V = "V"


class Color(str, Enum):
    RED = "red"
    GREEN = "green"


class ModuleKind(str, Enum):
    M1 = "M1"
    M2 = "M2"


class Orientation(str, Enum):
    XZ = "xz"
    XY = "xy"


class SwitchKind(str, Enum):
    ACTIVE_FLIPFLOP = "active_flipflop"
    PASSIVE_PBS = "passive_pbs"
    NONE = "none"


class Switching(str, Enum):
    """Network-wide switching choice for M2 modules."""

    ACTIVE = "active"
    PASSIVE = "passive"

    @property
    def switch_kind(self) -> SwitchKind:
        if self is Switching.ACTIVE:
            return SwitchKind.ACTIVE_FLIPFLOP
        return SwitchKind.PASSIVE_PBS


class Control(str, Enum):
    INDIVIDUAL = "individual"
    GLOBAL = "global"


class CorrectionMode(str, Enum):
    IMMEDIATE = "immediate"
    DEFERRED = "deferred"


class CavityVariant(str, Enum):
    """Optics-level construction of a module; identical gate logic."""

    Q_SWITCHED = "q_switched"
    REFLECTION = "reflection"


class ProtocolKind(str, Enum):
    CZ = "cz"
    PARITY = "parity"
    BUFFERED = "buffered"


class Route(str, Enum):
    """Exit port of a polarising beam splitter."""

    TRANSMITTED = "toward_cavity_rail_A"
    REFLECTED = "toward_cavity_rail_B"


# ── Stabilizer records ────────────────────────────────────────────────────────

class MeasurementOutcome(BaseModel):
    """Result of a Z-basis measurement on the tableau."""

    value: int = Field(..., ge=0, le=1, description="Measured bit.")
    deterministic: bool = Field(
        ...,
        description="True when the observable was already in the stabilizer group.",
    )


class ModuleRunRecord(BaseModel):
    """One firing of an ancilla-mediated module."""

    module_id: str
    kind: ProtocolKind = Field(default=ProtocolKind.CZ)
    x: int = Field(..., description="First photon (qubit index) of the pair.")
    y: int = Field(..., description="Second photon (qubit index) of the pair.")
    ancilla: int = Field(..., description="Tableau index of the consumed ancilla.")
    outcome: MeasurementOutcome
    correction_target: Optional[int] = Field(
        default=None,
        description="Photon receiving the Z^a feed-forward; None when no correction applies.",
    )
    time: Optional[int] = Field(default=None, description="Completion time in half-periods.")


# ── Graphs ────────────────────────────────────────────────────────────────────

class Vertex(BaseModel):
    """A vertex of a target cluster graph."""

    id: int
    coords: tuple[int, ...]
    color: Color = Field(default=Color.RED)
    rail: int
    time_bin: int


# ── Network ───────────────────────────────────────────────────────────────────

class Rail(BaseModel):
    """A photon line of the chip."""

    index: int
    coords: tuple[int, ...] = Field(..., description="(row,) in 2D, (y, z) in 3D.")
    color: Color = Field(default=Color.RED)
    tag: Tag
    offset: int = Field(..., ge=0, le=1, description="Injection offset in half-periods.")
    first_bin: int = Field(default=0, ge=0)
    stride: int = Field(default=1, ge=1, description="Bins between consecutive photons.")


class ModuleSpec(BaseModel):
    """Placement and role of one entangling module."""

    id: str
    kind: ModuleKind
    orientation: Optional[Orientation] = Field(default=None)
    layer: int
    rails: list[int] = Field(..., min_length=1, max_length=2)
    switching: SwitchKind = Field(default=SwitchKind.NONE)
    pairing: Optional[int] = Field(
        default=None,
        description="M1 only: parity of the first time bin of each pair it entangles.",
    )
    cavity: CavityVariant = Field(default=CavityVariant.Q_SWITCHED)


class Layer(BaseModel):
    index: int
    name: str
    modules: list[ModuleSpec] = Field(default_factory=list)


class NetworkLayout(BaseModel):
    """Full description of a photonic chip; doubles as the JSON layout descriptor."""

    dimension: int = Field(..., ge=2, le=3)
    shape: tuple[int, ...] = Field(..., description="(m,) in 2D, (my, mz) in 3D.")
    time_steps: int = Field(..., ge=1)
    rails: list[Rail]
    layers: list[Layer]
    period: int = Field(default=2, description="T expressed in half-periods.")
    layer_transit: int = Field(default=2, ge=1, description="Half-periods between layers.")
    switching: Switching = Field(default=Switching.ACTIVE)
    control: Control = Field(default=Control.INDIVIDUAL)
    cavity: CavityVariant = Field(default=CavityVariant.Q_SWITCHED)
    prune_at_injection: bool = Field(default=True)

    @property
    def modules(self) -> list[ModuleSpec]:
        return [module for layer in self.layers for module in layer.modules]

    def rail_bins(self, rail: Rail) -> list[int]:
        return list(range(rail.first_bin, self.time_steps, rail.stride))

    def vertex_id(self, rail: Rail, time_bin: int) -> int:
        """Row-major vertex id of the target graph (slow axes first, time last)."""
        return rail.index * self.time_steps + time_bin


class Photon(BaseModel):
    """A photon injected into the chip. `id` doubles as its tableau qubit index."""

    id: int
    vertex: int
    rail: int
    time_bin: int
    arrival: int = Field(..., description="Injection time in half-periods.")
    tag: Tag
    color: Color = Field(default=Color.RED)

    @property
    def arrival_periods(self) -> float:
        return self.arrival / 2


class EventRecord(BaseModel):
    """One entry of the simulation event log."""

    time: int
    stage: int
    layer: int
    kind: str
    module: Optional[str] = Field(default=None)
    photon: Optional[int] = Field(default=None)
    outcome: Optional[int] = Field(default=None)
    detail: Optional[str] = Field(default=None)


class Pulse(BaseModel):
    """A global control pulse sent to a synchronous group of M2 modules."""

    time: int
    stage: int
    layer: int
    group: int
    kind: str = Field(..., description="init, h1, h2, readout or drain.")
    modules: list[str]


class ResourceReport(BaseModel):
    m1_count: int
    m2_count: int
    measurement_count: int = Field(default=0)
    switch_event_count: int = Field(
        default=0,
        description="Flip-flop toggles. The switch pairs are clocked every half-period, so idle ticks count too.",
    )
    switched_arrivals: int = Field(
        default=0, description="Photons that arrived at an active flip-flop; one toggle each if toggled per arrival."
    )
    pulse_count: int = Field(default=0)
    photon_count: int = Field(default=0)
    ancilla_count: int = Field(default=0)
    feed_forward_count: int = Field(default=0)
    tag_violations: int = Field(default=0)
    per_layer_firings: dict[str, int] = Field(default_factory=dict)
    module_total: int = Field(default=0)
    parity_baseline_modules: Optional[int] = Field(default=None)


# ── Reports ───────────────────────────────────────────────────────────────────

class TargetSpec(BaseModel):
    dimension: int = Field(..., ge=2, le=3)
    dims: list[int] = Field(..., description="[rows, cols] in 2D, [cols, ny, nz] in 3D.")
    kind: str = Field(..., description="grid or topological.")


class Mismatch(BaseModel):
    """A target generator absent from the produced stabilizer group."""

    vertex: int
    generator: str


class StructureReport(BaseModel):
    color_counts: dict[str, int] = Field(default_factory=dict)
    rail_photon_counts: dict[str, int] = Field(default_factory=dict)
    degrees: dict[str, int] = Field(default_factory=dict)
    interior_degrees_ok: Optional[bool] = Field(default=None)
    visit_counts: dict[str, int] = Field(default_factory=dict)


class RunModes(BaseModel):
    switching: Switching
    control: Control
    corrections: CorrectionMode
    pruning: str = Field(default="injection")
    cavity: CavityVariant = Field(default=CavityVariant.Q_SWITCHED)


class RunReport(BaseModel):
    """The JSON run report written by the build commands and read back by verify."""

    model_config = ConfigDict(populate_by_name=True)

    target: TargetSpec
    layout: NetworkLayout
    seed: int
    modes: RunModes
    resources: ResourceReport
    structure: Optional[StructureReport] = Field(default=None)
    events: Optional[list[EventRecord]] = Field(default=None)
    module_records: Optional[list[ModuleRunRecord]] = Field(default=None)
    canonical_stabilizers: list[str]
    mismatched_generators: list[Mismatch] = Field(default_factory=list)
    passed: bool = Field(..., alias="pass")
    wall_time: Optional[float] = Field(default=None)


class VerificationReport(BaseModel):
    """Outcome of comparing a produced state with its target cluster state."""

    target: TargetSpec
    passed: bool
    mismatched_generators: list[Mismatch] = Field(default_factory=list)
    canonical_stabilizers: list[str] = Field(default_factory=list)
    resources: Optional[ResourceReport] = Field(default=None)
    seed: Optional[int] = Field(default=None)
    corrections: Optional[CorrectionMode] = Field(default=None)
    switching: Optional[Switching] = Field(default=None)

    def summary(self) -> str:
        return (
            f"Verification: {'PASS' if self.passed else 'FAIL'} | "
            f"generators={len(self.canonical_stabilizers)}, "
            f"mismatched={len(self.mismatched_generators)}"
        )
