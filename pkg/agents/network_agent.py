"""
Network Agent — discrete-event simulation of the photonic chip.

Photons are injected on rails, one per time bin, and travel through ordered
layers of modules:

- M1 modules entangle consecutive photons of one rail,
- M2 modules entangle same-bin photons of two adjacent rails; photons reach
  the shared cavity through an active flip-flop switch pair or a passive
  polarising beam splitter acting on the photon tag.

Time is counted in half-periods (T/2). A photon of bin k on a rail with
offset o reaches layer L at 2k + o + L * layer_transit. Events are processed
in the total order (time, stage, layer, rail, slot, photon id), so a run is
fully determined by (layout, schedule, seed). Under global control a pulse
acts on each module of its group in the slot just before or just after that
module's photon, so readouts and ancilla allocations happen in the same
order as under individual control.
"""

import heapq
import itertools
import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from agents.module_agent import (
    AncillaRegister,
    CavityCycle,
    PauliFrame,
    complete_cz_firing,
)
from config import LAYER_TRANSIT
from models.schema import (
    CavityVariant,
    Color,
    Control,
    CorrectionMode,
    EventRecord,
    Layer,
    ModuleKind,
    ModuleRunRecord,
    ModuleSpec,
    NetworkLayout,
    Orientation,
    Photon,
    Pulse,
    Rail,
    ResourceReport,
    Route,
    SwitchKind,
    Switching,
    Tag,
)
from tools.lattice import is_blue, rail_color
from tools.tableau import StabilizerTableau, apply_h, apply_pauli, measure_z, new_tableau

logger = logging.getLogger(__name__)

# Event stages within one half-period tick
STAGE_PRE_PULSE = 0
STAGE_ARRIVAL = 1
STAGE_POST_PULSE = 2
STAGE_DRAIN = 3

_PULSE_ORDER = {"init": 0, "h1": 1, "h2": 2, "readout": 3, "drain": 4}

# Slots around a photon event on one (time, layer, rail)
SLOT_BEFORE_PHOTON = 0
SLOT_PHOTON = 1
_PULSE_SLOT = {"init": SLOT_BEFORE_PHOTON, "h1": 2, "h2": 2, "readout": 3}


class SchedulingError(RuntimeError):
    """The network reached a state that its construction should rule out."""


class TimingViolation(RuntimeError):
    """A global control pulse found a module that was not ready for it."""

    def __init__(self, module_id: str, tick: int, message: str) -> None:
        super().__init__(f"{module_id} at tick {tick}: {message}")
        self.module_id = module_id
        self.tick = tick


# ── Layouts ───────────────────────────────────────────────────────────────────

def _check_positive(**dims: int) -> None:
    for name, value in dims.items():
        if value < 1:
            raise ValueError(f"{name} must be ≥ 1, got {value}")


def _m2(
    module_id: str,
    layer: int,
    rails: list[Rail],
    switching: Switching,
    cavity: CavityVariant,
    orientation: Optional[Orientation] = None,
) -> ModuleSpec:
    # the offset-0 rail arrives first and is served as rail A
    ordered = sorted(rails, key=lambda r: (r.offset, r.index))
    return ModuleSpec(
        id=module_id,
        kind=ModuleKind.M2,
        orientation=orientation,
        layer=layer,
        rails=[r.index for r in ordered],
        switching=switching.switch_kind,
        cavity=cavity,
    )


def _m1(module_id: str, layer: int, rail: Rail, pairing: int, cavity: CavityVariant) -> ModuleSpec:
    return ModuleSpec(
        id=module_id,
        kind=ModuleKind.M1,
        layer=layer,
        rails=[rail.index],
        pairing=pairing,
        cavity=cavity,
    )


def build_2d_layout(
    m: int,
    n: int,
    switching: Switching = Switching.ACTIVE,
    control: Control = Control.INDIVIDUAL,
    cavity: CavityVariant = CavityVariant.Q_SWITCHED,
    layer_transit: int = LAYER_TRANSIT,
) -> NetworkLayout:
    """
    Chip for an m×n square-lattice cluster: m rails, n time bins.

    Layers: M1 on bin pairs (0,1),(2,3)..., M2 on even rail pairs, M2 on odd
    rail pairs, M1 on bin pairs (1,2),(3,4)... Adjacent rails alternate tag
    and half-period offset.
    """
    _check_positive(rows=m, cols=n)
    rails = [
        Rail(index=r, coords=(r,), tag=Tag.H if r % 2 == 0 else Tag.V, offset=r % 2)
        for r in range(m)
    ]
    layers = [
        Layer(
            index=0,
            name="M1a",
            modules=[_m1(f"M1a-r{r.index}", 0, r, 0, cavity) for r in rails],
        ),
        Layer(
            index=1,
            name="M2-even",
            modules=[
                _m2(f"M2-r{r}-r{r + 1}", 1, [rails[r], rails[r + 1]], switching, cavity)
                for r in range(0, m - 1, 2)
            ],
        ),
        Layer(
            index=2,
            name="M2-odd",
            modules=[
                _m2(f"M2-r{r}-r{r + 1}", 2, [rails[r], rails[r + 1]], switching, cavity)
                for r in range(1, m - 1, 2)
            ],
        ),
        Layer(
            index=3,
            name="M1b",
            modules=[_m1(f"M1b-r{r.index}", 3, r, 1, cavity) for r in rails],
        ),
    ]
    layout = NetworkLayout(
        dimension=2,
        shape=(m,),
        time_steps=n,
        rails=rails,
        layers=layers,
        layer_transit=layer_transit,
        switching=switching,
        control=control,
        cavity=cavity,
    )
    logger.info(
        "2D layout: %d rails × %d bins, %d M1 + %d M2 modules",
        m, n, _count(layout, ModuleKind.M1), _count(layout, ModuleKind.M2),
    )
    return layout


def build_3d_layout(
    my: int,
    mz: int,
    n: int,
    switching: Switching = Switching.ACTIVE,
    control: Control = Control.INDIVIDUAL,
    cavity: CavityVariant = CavityVariant.Q_SWITCHED,
    prune_at_injection: bool = True,
    layer_transit: int = LAYER_TRANSIT,
) -> NetworkLayout:
    """
    Chip for a 3D cluster: an my×mz grid of rails, n time bins along x.

    With prune_at_injection, green rails ((y+z) even) only emit on the bins
    whose vertex survives blue-vertex removal and carry no M1 modules; red
    rails emit every bin. Without it every rail emits every bin and has M1
    modules, giving the plain cubic cluster (see measure_out_blue).
    """
    _check_positive(ny=my, nz=mz, cols=n)
    rails: list[Rail] = []
    for z, y in itertools.product(range(mz), range(my)):
        color = rail_color(y, z)
        green = color is Color.GREEN
        first_bin, stride = 0, 1
        if green and prune_at_injection:
            # (even, even) rails keep odd x, (odd, odd) rails keep even x
            first_bin, stride = (1 if y % 2 == 0 else 0), 2
        rails.append(
            Rail(
                index=z * my + y,
                coords=(y, z),
                color=color,
                tag=Tag.H if green else Tag.V,
                offset=0 if green else 1,
                first_bin=first_bin,
                stride=stride,
            )
        )

    def rail(y: int, z: int) -> Rail:
        return rails[z * my + y]

    m1_rails = [r for r in rails if r.color is Color.RED or not prune_at_injection]

    def xz_layer(index: int, parity: int) -> Layer:
        modules = [
            _m2(f"M2xz-y{y}-z{z}", index, [rail(y, z), rail(y, z + 1)], switching, cavity, Orientation.XZ)
            for z in range(parity, mz - 1, 2)
            for y in range(my)
        ]
        return Layer(index=index, name=f"M2-xz-{'odd' if parity else 'even'}", modules=modules)

    def xy_layer(index: int, parity: int) -> Layer:
        modules = [
            _m2(f"M2xy-y{y}-z{z}", index, [rail(y, z), rail(y + 1, z)], switching, cavity, Orientation.XY)
            for z in range(mz)
            for y in range(parity, my - 1, 2)
        ]
        return Layer(index=index, name=f"M2-xy-{'odd' if parity else 'even'}", modules=modules)

    layers = [
        Layer(index=0, name="M1a", modules=[_m1(f"M1a-r{r.index}", 0, r, 0, cavity) for r in m1_rails]),
        xz_layer(1, 0),
        xz_layer(2, 1),
        xy_layer(3, 0),
        xy_layer(4, 1),
        Layer(index=5, name="M1b", modules=[_m1(f"M1b-r{r.index}", 5, r, 1, cavity) for r in m1_rails]),
    ]
    layout = NetworkLayout(
        dimension=3,
        shape=(my, mz),
        time_steps=n,
        rails=rails,
        layers=layers,
        layer_transit=layer_transit,
        switching=switching,
        control=control,
        cavity=cavity,
        prune_at_injection=prune_at_injection,
    )
    logger.info(
        "3D layout: %d×%d rails × %d bins, %d M1 + %d M2 modules (pruning %s)",
        my, mz, n, _count(layout, ModuleKind.M1), _count(layout, ModuleKind.M2),
        "at injection" if prune_at_injection else "by measurement",
    )
    return layout


def _count(layout: NetworkLayout, kind: ModuleKind) -> int:
    return sum(1 for module in layout.modules if module.kind == kind)


def dump_layout(layout: NetworkLayout, path: Path) -> None:
    """Write the JSON layout descriptor."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(layout.model_dump_json(indent=2), encoding="utf-8")
    logger.info("Layout saved to: %s", path)


def load_layout(path: Path) -> NetworkLayout:
    """
    Read a JSON layout descriptor.

    Raises:
        OSError: Unreadable file.
        pydantic.ValidationError: Malformed descriptor.
    """
    return NetworkLayout.model_validate_json(Path(path).read_text(encoding="utf-8"))


# ── Injection ─────────────────────────────────────────────────────────────────

def injection_schedule(layout: NetworkLayout) -> list[Photon]:
    """
    Every photon of the chip, ordered by target vertex id.

    Photon ids follow that order, so a photon's id is also its tableau qubit.
    """
    photons: list[Photon] = []
    for rail in sorted(layout.rails, key=lambda r: r.index):
        for time_bin in layout.rail_bins(rail):
            photons.append(
                Photon(
                    id=len(photons),
                    vertex=layout.vertex_id(rail, time_bin),
                    rail=rail.index,
                    time_bin=time_bin,
                    arrival=layout.period * time_bin + rail.offset,
                    tag=rail.tag,
                    color=rail.color,
                )
            )
    return photons


def _check_schedule(layout: NetworkLayout, schedule: list[Photon]) -> None:
    rails = {rail.index: rail for rail in layout.rails}
    for i, photon in enumerate(schedule):
        rail = rails.get(photon.rail)
        if rail is None:
            raise ValueError(f"Photon {photon.id} sits on unknown rail {photon.rail}")
        if photon.id != i:
            raise ValueError(f"Photon ids must be 0..n-1 in order, got {photon.id} at position {i}")
        if not 0 <= photon.time_bin < layout.time_steps:
            raise ValueError(f"Photon {photon.id} has bin {photon.time_bin} outside 0..{layout.time_steps - 1}")
        expected = layout.period * photon.time_bin + rail.offset
        if photon.arrival != expected:
            raise ValueError(f"Photon {photon.id} arrives at {photon.arrival}, layout says {expected}")
        if photon.tag != rail.tag:
            raise ValueError(f"Photon {photon.id} carries tag {photon.tag.value}, rail uses {rail.tag.value}")


# ── Switching ─────────────────────────────────────────────────────────────────

def tag_router(tag: Tag, switch_kind: SwitchKind = SwitchKind.PASSIVE_PBS) -> Route:
    """Polarising beam splitter: H is transmitted toward rail A, V reflected toward rail B."""
    if switch_kind != SwitchKind.PASSIVE_PBS:
        raise ValueError(f"Tag routing needs a passive switch, got {switch_kind.value}")
    return Route.TRANSMITTED if tag == Tag.H else Route.REFLECTED


def interaction_tag(tag: Tag) -> Tag:
    """Tag after a cavity interaction; the coupling acts on photon number only."""
    return tag


class FlipFlop:
    """Synchronous switch pair, clocked every half-period; 'up' admits rail A."""

    def __init__(self, start: int) -> None:
        self.time = start
        self.up = True
        self.toggles = 0
        self.arrivals = 0

    def advance(self, time: int) -> int:
        if time < self.time:
            raise SchedulingError(f"Flip-flop clock moved backwards: {self.time} -> {time}")
        steps = time - self.time
        if steps % 2:
            self.up = not self.up
        self.toggles += steps
        self.time = time
        return steps

    @property
    def side(self) -> int:
        return 0 if self.up else 1


# ── Global control pulses ─────────────────────────────────────────────────────

def _active_bins(module: ModuleSpec, slots: set[tuple[int, int]], n: int) -> tuple[int, ...]:
    a, b = module.rails
    return tuple(k for k in range(n) if (a, k) in slots and (b, k) in slots)


def pulse_schedule(layout: NetworkLayout) -> list[Pulse]:
    """
    Global control pulse train for the M2 layers.

    Modules of a layer whose complete photon pairs fall on the same bins form
    one synchronous group. Each group gets an (init, h1, h2, readout) quadruple
    per active period and a drain tick that empties the 1-bit memories.
    In the run, init and h1 act on each module around its rail-A photon, h2
    and readout right after its rail-B photon.
    """
    slots = {(p.rail, p.time_bin) for p in injection_schedule(layout)}
    pulses: list[Pulse] = []
    for layer in layout.layers:
        groups: dict[tuple[int, ...], list[str]] = defaultdict(list)
        for module in layer.modules:
            if module.kind == ModuleKind.M2:
                bins = _active_bins(module, slots, layout.time_steps)
                if bins:
                    groups[bins].append(module.id)
        for group, bins in enumerate(sorted(groups)):
            modules = groups[bins]
            for k in bins:
                base = layout.period * k + layer.index * layout.layer_transit
                for time, stage, kind in (
                    (base, STAGE_PRE_PULSE, "init"),
                    (base, STAGE_POST_PULSE, "h1"),
                    (base + 1, STAGE_POST_PULSE, "h2"),
                    (base + 1, STAGE_POST_PULSE, "readout"),
                    (base + 1, STAGE_DRAIN, "drain"),
                ):
                    pulses.append(
                        Pulse(time=time, stage=stage, layer=layer.index, group=group, kind=kind, modules=modules)
                    )
    pulses.sort(key=lambda p: (p.time, p.stage, p.layer, p.group, _PULSE_ORDER[p.kind]))
    return pulses


# ── Simulation ────────────────────────────────────────────────────────────────

@dataclass(order=True)
class _Event:
    time: int
    stage: int
    layer: int
    rail: int
    slot: int
    photon: int
    action: Callable[[], None] = field(compare=False)


@dataclass
class SimulationResult:
    """Everything a run produces; the Pauli frame is left unapplied."""

    tableau: StabilizerTableau
    frame: PauliFrame
    events: list[EventRecord]
    records: list[ModuleRunRecord]
    resources: ResourceReport
    photons: list[Photon]
    ancillas: list[int]
    pulses: list[Pulse] = field(default_factory=list)
    visit_counts: dict[int, int] = field(default_factory=dict)
    measured_out: list[int] = field(default_factory=list)

    @property
    def kept_photons(self) -> list[int]:
        """Photon qubits that belong to the final cluster."""
        dropped = set(self.measured_out)
        return [p.id for p in self.photons if p.id not in dropped]


class _NetworkRun:
    """One single-threaded event loop over one tableau."""

    def __init__(
        self,
        layout: NetworkLayout,
        schedule: list[Photon],
        seed: int,
        mode: CorrectionMode,
        global_control: bool,
    ) -> None:
        _check_schedule(layout, schedule)
        if not schedule:
            raise ValueError("Layout injects no photons")
        self.layout = layout
        self.schedule = schedule
        self.mode = mode
        self.global_control = global_control
        self.rng = np.random.default_rng(seed)

        self.t = new_tableau(len(schedule))
        for photon in schedule:
            apply_h(self.t, photon.id)
        self.frame = PauliFrame(len(schedule))
        self.ancillas = AncillaRegister()

        self.slots = {(p.rail, p.time_bin): p for p in schedule}
        self.module_at: dict[tuple[int, int], ModuleSpec] = {}
        for module in layout.modules:
            for rail in module.rails:
                if (module.layer, rail) in self.module_at:
                    raise ValueError(f"Rail {rail} is served twice in layer {module.layer}")
                self.module_at[(module.layer, rail)] = module
        self.layer_names = {layer.index: layer.name for layer in layout.layers}
        self.modules_by_id = {module.id: module for module in layout.modules}

        self.cycles: dict[str, CavityCycle] = {}
        self.memory: dict[str, tuple[CavityCycle, int]] = {}
        self.flipflops: dict[str, FlipFlop] = {}
        self.occupied: dict[str, int] = {}

        self.events: list[EventRecord] = []
        self.records: list[ModuleRunRecord] = []
        self.firings: Counter = Counter()
        self.visits: Counter = Counter()
        self.tag_violations = 0
        self.pulses: list[Pulse] = []
        self._queue: list[_Event] = []

    # ── bookkeeping ──

    def _log(self, time: int, stage: int, layer: int, kind: str, module: Optional[str] = None,
             photon: Optional[int] = None, outcome: Optional[int] = None, detail: Optional[str] = None) -> None:
        self.events.append(
            EventRecord(time=time, stage=stage, layer=layer, kind=kind, module=module,
                        photon=photon, outcome=outcome, detail=detail)
        )

    def _push(self, time: int, stage: int, layer: int, rail: int, slot: int, photon: int,
              action: Callable[[], None]) -> None:
        heapq.heappush(self._queue, _Event(time, stage, layer, rail, slot, photon, action))

    # ── photon side ──

    def _route(self, module: ModuleSpec, photon: Photon, side: int, time: int) -> None:
        last = self.occupied.get(module.id)
        if last == time:
            raise SchedulingError(f"Two photons in the cavity of {module.id} at time {time}")
        self.occupied[module.id] = time
        if module.switching == SwitchKind.ACTIVE_FLIPFLOP:
            flipflop = self.flipflops.setdefault(
                module.id, FlipFlop(module.layer * self.layout.layer_transit)
            )
            steps = flipflop.advance(time)
            flipflop.arrivals += 1
            if steps:
                self._log(time, STAGE_ARRIVAL, module.layer, "switch", module.id,
                          detail=f"{'up' if flipflop.up else 'down'} after {steps}")
            if flipflop.side != side:
                raise SchedulingError(
                    f"Flip-flop of {module.id} admits rail {module.rails[flipflop.side]} "
                    f"but photon {photon.id} is on rail {photon.rail}"
                )
        elif module.switching == SwitchKind.PASSIVE_PBS:
            route = tag_router(photon.tag, module.switching)
            expected = Route.TRANSMITTED if side == 0 else Route.REFLECTED
            if route != expected:
                raise SchedulingError(
                    f"PBS of {module.id} sends {photon.tag.value} photon {photon.id} {route.value}"
                )
            self._log(time, STAGE_ARRIVAL, module.layer, "route", module.id, photon.id, detail=route.value)

    def _interact(self, module: ModuleSpec, cycle: CavityCycle, photon: Photon, time: int) -> None:
        cycle.interact(photon.id)
        if module.switching == SwitchKind.PASSIVE_PBS and interaction_tag(photon.tag) != photon.tag:
            self.tag_violations += 1
        detail = "reflected" if module.cavity == CavityVariant.REFLECTION else None
        self._log(time, STAGE_ARRIVAL, module.layer, "interact", module.id, photon.id, detail=detail)

    def _pass(self, module: ModuleSpec, photon: Photon, time: int) -> None:
        self._log(time, STAGE_ARRIVAL, module.layer, "pass", module.id, photon.id)

    def _open(self, module: ModuleSpec, photon: Photon) -> CavityCycle:
        if module.id in self.cycles:
            raise SchedulingError(f"{module.id} starts a cycle while one is still open")
        cycle = CavityCycle(self.t, self.ancillas, module.id, photon.time_bin)
        cycle.initialize()
        self.cycles[module.id] = cycle
        return cycle

    def _complete(self, module: ModuleSpec, cycle: CavityCycle, outcome_value: int, time: int, stage: int) -> None:
        x, y = cycle.photons
        record = complete_cz_firing(
            self.t, x, y, cycle.ancilla, cycle.outcome, self.frame, self.mode, module.id, time
        )
        self.records.append(record)
        self.firings[self.layer_names[module.layer]] += 1
        del self.cycles[module.id]
        self._log(time, stage, module.layer, "measure", module.id, outcome=outcome_value,
                  detail=f"ancilla {cycle.ancilla}")
        if outcome_value:
            kind = "correct" if self.mode == CorrectionMode.IMMEDIATE else "defer"
            self._log(time, stage, module.layer, kind, module.id, x)

    def _arrive(self, module: ModuleSpec, photon: Photon, time: int) -> None:
        self.visits[photon.id] += 1
        if module.kind == ModuleKind.M1:
            self._arrive_m1(module, photon, time)
            return
        side = module.rails.index(photon.rail)
        self._route(module, photon, side, time)
        if self.global_control:
            self._arrive_m2_global(module, photon, side, time)
        else:
            self._arrive_m2(module, photon, side, time)

    def _arrive_m1(self, module: ModuleSpec, photon: Photon, time: int) -> None:
        self._route(module, photon, 0, time)
        cycle = self.cycles.get(module.id)
        if cycle is not None:
            if cycle.time_bin + 1 != photon.time_bin:
                raise SchedulingError(f"{module.id}: cycle from bin {cycle.time_bin} never completed")
            self._interact(module, cycle, photon, time)
            cycle.hadamard()
            outcome = cycle.readout(self.rng)
            self._complete(module, cycle, outcome.value, time, STAGE_ARRIVAL)
            return
        if photon.time_bin % 2 == module.pairing and (photon.rail, photon.time_bin + 1) in self.slots:
            cycle = self._open(module, photon)
            self._interact(module, cycle, photon, time)
            cycle.hadamard()
        else:
            self._pass(module, photon, time)

    def _arrive_m2(self, module: ModuleSpec, photon: Photon, side: int, time: int) -> None:
        cycle = self.cycles.get(module.id)
        if side == 0:
            if (module.rails[1], photon.time_bin) not in self.slots:
                self._pass(module, photon, time)
                return
            cycle = self._open(module, photon)
            self._interact(module, cycle, photon, time)
            cycle.hadamard()
            return
        if cycle is None:
            self._pass(module, photon, time)
            return
        if cycle.time_bin != photon.time_bin:
            raise SchedulingError(f"{module.id}: photon of bin {photon.time_bin} met a cycle of bin {cycle.time_bin}")
        self._interact(module, cycle, photon, time)
        cycle.hadamard()
        outcome = cycle.readout(self.rng)
        self._complete(module, cycle, outcome.value, time, STAGE_ARRIVAL)

    def _arrive_m2_global(self, module: ModuleSpec, photon: Photon, side: int, time: int) -> None:
        cycle = self.cycles.get(module.id)
        ready = (
            cycle is not None
            and cycle.outcome is None
            and cycle.time_bin == photon.time_bin
            and len(cycle.photons) == side
            and cycle.hadamards == side
        )
        if ready:
            self._interact(module, cycle, photon, time)
        else:
            self._pass(module, photon, time)

    # ── pulse side ──

    def _pulse_module(self, pulse: Pulse, module_id: str) -> None:
        """One module's share of an init, h1, h2 or readout pulse."""
        self._log(pulse.time, pulse.stage, pulse.layer, "pulse", module_id,
                  detail=f"{pulse.kind} group {pulse.group}")
        cycle = self.cycles.get(module_id)
        if pulse.kind == "init":
            if cycle is not None:
                raise TimingViolation(module_id, pulse.time, "init while a cycle is still open")
            time_bin = (pulse.time - pulse.layer * self.layout.layer_transit) // self.layout.period
            cycle = CavityCycle(self.t, self.ancillas, module_id, time_bin)
            cycle.initialize()
            self.cycles[module_id] = cycle
        elif pulse.kind in ("h1", "h2"):
            needed = 1 if pulse.kind == "h1" else 2
            if cycle is None or len(cycle.photons) != needed:
                have = 0 if cycle is None else len(cycle.photons)
                raise TimingViolation(
                    module_id, pulse.time, f"{pulse.kind} with {have} of {needed} photons in the pair"
                )
            cycle.hadamard()
        elif pulse.kind == "readout":
            if cycle is None or cycle.hadamards != 2:
                raise TimingViolation(module_id, pulse.time, "readout before the cycle finished")
            if module_id in self.memory:
                raise TimingViolation(module_id, pulse.time, "1-bit memory overwritten before drain")
            outcome = cycle.readout(self.rng)
            self.memory[module_id] = (cycle, outcome.value)
        else:
            raise ValueError(f"Unknown pulse kind {pulse.kind!r}")

    def _drain(self, pulse: Pulse) -> None:
        """Empty the 1-bit memories of a group into firing records."""
        self._log(pulse.time, pulse.stage, pulse.layer, "pulse", detail=f"drain group {pulse.group}")
        for module_id in pulse.modules:
            latched = self.memory.pop(module_id, None)
            if latched is None:
                raise TimingViolation(module_id, pulse.time, "drain with an empty memory")
            cycle, value = latched
            self._complete(self.modules_by_id[module_id], cycle, value, pulse.time, STAGE_DRAIN)

    def _push_pulses(self) -> None:
        self.pulses = pulse_schedule(self.layout)
        for pulse in self.pulses:
            if pulse.kind == "drain":
                self._push(
                    pulse.time, pulse.stage, pulse.layer, pulse.group, _PULSE_ORDER[pulse.kind], 0,
                    lambda p=pulse: self._drain(p),
                )
                continue
            side = 0 if pulse.kind in ("init", "h1") else 1
            for module_id in pulse.modules:
                rail = self.modules_by_id[module_id].rails[side]
                self._push(
                    pulse.time, STAGE_ARRIVAL, pulse.layer, rail, _PULSE_SLOT[pulse.kind], 0,
                    lambda p=pulse, m=module_id: self._pulse_module(p, m),
                )

    # ── main loop ──

    def run(self) -> SimulationResult:
        transit = self.layout.layer_transit
        for layer in self.layout.layers:
            for photon in self.schedule:
                module = self.module_at.get((layer.index, photon.rail))
                if module is None:
                    continue
                self._push(
                    photon.arrival + layer.index * transit, STAGE_ARRIVAL, layer.index, photon.rail,
                    SLOT_PHOTON, photon.id,
                    lambda m=module, p=photon, l=layer.index: self._arrive(m, p, p.arrival + l * transit),
                )
        if self.global_control:
            self._push_pulses()

        while self._queue:
            heapq.heappop(self._queue).action()

        if self.cycles:
            raise SchedulingError(f"Cycles left open at the end of the run: {sorted(self.cycles)}")

        result = SimulationResult(
            tableau=self.t,
            frame=self.frame,
            events=self.events,
            records=self.records,
            resources=self._resources(),
            photons=self.schedule,
            ancillas=list(self.ancillas.allocated),
            pulses=self.pulses,
            visit_counts=dict(sorted(self.visits.items())),
        )
        logger.info(
            "Simulation done: %d photons, %d firings, %d switch events, %d pulses",
            len(self.schedule), len(self.records), result.resources.switch_event_count,
            result.resources.pulse_count,
        )
        return result

    def _resources(self) -> ResourceReport:
        m1 = _count(self.layout, ModuleKind.M1)
        m2 = _count(self.layout, ModuleKind.M2)
        return ResourceReport(
            m1_count=m1,
            m2_count=m2,
            measurement_count=len(self.records),
            switch_event_count=sum(f.toggles for f in self.flipflops.values()),
            switched_arrivals=sum(f.arrivals for f in self.flipflops.values()),
            pulse_count=sum(1 for p in self.pulses if p.kind != "drain"),
            photon_count=len(self.schedule),
            ancilla_count=len(self.ancillas),
            feed_forward_count=sum(r.outcome.value for r in self.records),
            tag_violations=self.tag_violations,
            per_layer_firings={layer.name: self.firings[layer.name] for layer in self.layout.layers},
            module_total=m1 + m2,
            parity_baseline_modules=5 * self.layout.shape[0] if self.layout.dimension == 2 else None,
        )


def simulate(
    layout: NetworkLayout,
    schedule: list[Photon],
    seed: int,
    mode: CorrectionMode = CorrectionMode.DEFERRED,
) -> SimulationResult:
    """
    Run the chip; layouts in global control mode go through global_control_run.

    Args:
        layout: Chip description.
        schedule: Photons to inject, usually injection_schedule(layout).
        seed: Seed of the single random source used for every readout.
        mode: Immediate or deferred Z^a corrections.

    Returns:
        Final tableau, unapplied frame, event log, records and resource counts.

    Raises:
        ValueError: Schedule and layout disagree.
        SchedulingError: The run broke a construction invariant.
    """
    if layout.control == Control.GLOBAL:
        return global_control_run(layout, schedule, seed, mode)
    return _NetworkRun(layout, schedule, seed, mode, global_control=False).run()


def global_control_run(
    layout: NetworkLayout,
    schedule: list[Photon],
    seed: int,
    mode: CorrectionMode = CorrectionMode.DEFERRED,
) -> SimulationResult:
    """
    Run the chip with M2 cavities driven by shared pulses instead of per-photon control.

    Readouts latch into one-bit memories that are drained into firing records.

    Raises:
        ValueError: The layout is not in global control mode.
        TimingViolation: A pulse found a module whose photon pair was incomplete.
    """
    if layout.control != Control.GLOBAL:
        raise ValueError("global_control_run needs a layout with control=global")
    return _NetworkRun(layout, schedule, seed, mode, global_control=True).run()


# ── Blue-vertex removal by measurement ────────────────────────────────────────

def measure_out_blue(
    result: SimulationResult,
    layout: NetworkLayout,
    rng: np.random.Generator,
    mode: CorrectionMode = CorrectionMode.DEFERRED,
) -> list[EventRecord]:
    """
    Turn a plain cubic cluster into the topological one.

    Each blue photon is measured in Z; outcome 1 calls for Z on each of its
    cubic-lattice neighbours. Updates the result in place.

    Raises:
        ValueError: Not a 3D layout.
    """
    if layout.dimension != 3:
        raise ValueError("Blue-vertex removal only applies to 3D layouts")
    rails = {rail.index: rail for rail in layout.rails}
    by_coords: dict[tuple[int, int, int], Photon] = {}
    for photon in result.photons:
        y, z = rails[photon.rail].coords
        by_coords[(photon.time_bin, y, z)] = photon

    measured: list[EventRecord] = []
    feed_forward = 0
    time = max((e.time for e in result.events), default=0) + 1
    for coords in sorted(by_coords, key=lambda c: by_coords[c].id):
        if not is_blue(coords):
            continue
        photon = by_coords[coords]
        outcome = measure_z(result.tableau, photon.id, rng=rng)
        targets = []
        if outcome.value:
            x, y, z = coords
            for dx, dy, dz in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
                neighbour = by_coords.get((x + dx, y + dy, z + dz))
                if neighbour is None or is_blue((x + dx, y + dy, z + dz)):
                    continue
                if mode == CorrectionMode.IMMEDIATE:
                    apply_pauli(result.tableau, neighbour.id, "Z")
                else:
                    result.frame.flip_z(neighbour.id)
                targets.append(neighbour.id)
        feed_forward += len(targets)
        result.measured_out.append(photon.id)
        event = EventRecord(
            time=time, stage=STAGE_DRAIN, layer=len(layout.layers), kind="measure_blue",
            photon=photon.id, outcome=outcome.value,
            detail=f"feed-forward to {targets}" if targets else None,
        )
        measured.append(event)
        result.events.append(event)

    result.resources.measurement_count += len(measured)
    result.resources.feed_forward_count += feed_forward
    logger.info("Measured out %d blue photons, %d feed-forward corrections", len(measured), feed_forward)
    return measured


def visit_counts_by_rail(layout: NetworkLayout) -> dict[int, int]:
    """Modules on the path of each rail (fired or passed)."""
    counts: Counter = Counter()
    for module in layout.modules:
        for rail in module.rails:
            counts[rail] += 1
    return {rail.index: counts[rail.index] for rail in layout.rails}


def layout_summary(layout: NetworkLayout) -> str:
    """Compact JSON summary of module counts per layer, for logs."""
    return json.dumps({layer.name: len(layer.modules) for layer in layout.layers})
