"""
Verifier Agent — checks a produced state against its target cluster state.

Checks:
- the photon-only stabilizer subgroup equals the target generator group,
- every target generator K_i is in the produced group (misses are named),
- structural properties of the target (colours, degrees, module visits).
"""

import logging
from collections import Counter
from typing import Optional

from agents.network_agent import SimulationResult
from models.schema import (
    Color,
    CorrectionMode,
    Mismatch,
    NetworkLayout,
    ResourceReport,
    RunReport,
    StructureReport,
    Switching,
    TargetSpec,
    VerificationReport,
)
from tools.lattice import (
    TargetGraph,
    cluster_generators,
    grid_graph,
    pruned_cubic_graph,
    raussendorf_graph,
)
from tools.tableau import (
    PauliString,
    StabilizerTableau,
    canonical_generators,
    group_contains,
    reduced_generators,
    stabilizer_group_equals,
)

logger = logging.getLogger(__name__)


class VerificationStats:
    """Tracks verification outcomes for reporting."""

    def __init__(self) -> None:
        self.generators_checked: int = 0
        self.generators_missing: int = 0
        self.produced_rank: int = 0
        self.target_rank: int = 0

    def summary(self) -> str:
        return (
            f"Verification: {self.generators_checked - self.generators_missing}/"
            f"{self.generators_checked} generators found | "
            f"rank produced={self.produced_rank}, target={self.target_rank}"
        )


# ── Targets ───────────────────────────────────────────────────────────────────

def target_spec_for(layout: NetworkLayout) -> TargetSpec:
    if layout.dimension == 2:
        return TargetSpec(dimension=2, dims=[layout.shape[0], layout.time_steps], kind="grid")
    my, mz = layout.shape
    return TargetSpec(dimension=3, dims=[layout.time_steps, my, mz], kind="topological")


def target_graph(spec: TargetSpec) -> TargetGraph:
    """
    Regenerate the target graph of a run.

    Raises:
        ValueError: Unknown kind or bad dimensions.
    """
    if spec.kind == "grid":
        if len(spec.dims) != 2:
            raise ValueError(f"Grid target needs 2 dims, got {spec.dims}")
        return grid_graph(*spec.dims)
    if spec.kind == "topological":
        if len(spec.dims) != 3:
            raise ValueError(f"Topological target needs 3 dims, got {spec.dims}")
        if min(spec.dims) >= 2:
            return raussendorf_graph(*spec.dims)
        # degenerate slabs keep the same blue-vertex rule
        return pruned_cubic_graph(*spec.dims)
    raise ValueError(f"Unknown target kind {spec.kind!r}")


# ── Verification ──────────────────────────────────────────────────────────────

def _mismatches(
    produced: list[PauliString],
    target: TargetGraph,
    stats: VerificationStats,
) -> list[Mismatch]:
    expected = cluster_generators(target)
    missing: list[Mismatch] = []
    for vid, generator in zip(expected.vertex_ids, expected.generators):
        stats.generators_checked += 1
        if not produced or not group_contains(produced, generator):
            stats.generators_missing += 1
            missing.append(Mismatch(vertex=vid, generator=generator.to_label()))
    stats.target_rank = len(expected)
    return missing


def verify_state(
    t: StabilizerTableau,
    photon_qubits: list[int],
    target: TargetGraph,
    spec: TargetSpec,
    resources: Optional[ResourceReport] = None,
    seed: Optional[int] = None,
    corrections: Optional[CorrectionMode] = None,
    switching: Optional[Switching] = None,
) -> VerificationReport:
    """
    Compare the photons of a finished run with the target cluster state.

    Ancillas and measured-out photons are masked out first; the remaining
    qubits, in increasing order, stand for the target vertices in increasing
    id order.

    Args:
        t: Final tableau (frame already applied).
        photon_qubits: Qubits that should hold the cluster.
        target: Target graph.
        spec: Target description written into the report.

    Returns:
        A VerificationReport; passed is True iff no generator is missing.

    Raises:
        ValueError: Photon count differs from the target vertex count.
    """
    if len(photon_qubits) != len(target):
        raise ValueError(f"{len(photon_qubits)} photons for a target of {len(target)} vertices")
    stats = VerificationStats()
    produced = reduced_generators(t, photon_qubits)
    stats.produced_rank = len(produced)
    missing = _mismatches(produced, target, stats)
    passed = not missing
    if passed and not stabilizer_group_equals(produced, cluster_generators(target).generators):
        raise RuntimeError("Target generators found but the groups differ")

    logger.info(stats.summary())
    for mismatch in missing[:10]:
        logger.warning("Missing generator at vertex %d: %s", mismatch.vertex, mismatch.generator)

    return VerificationReport(
        target=spec,
        passed=passed,
        mismatched_generators=missing,
        canonical_stabilizers=[g.to_label() for g in produced],
        resources=resources,
        seed=seed,
        corrections=corrections,
        switching=switching,
    )


def verify_result(
    result: SimulationResult,
    layout: NetworkLayout,
    seed: int,
    corrections: CorrectionMode,
) -> tuple[VerificationReport, TargetGraph]:
    """Verify a simulation result whose frame has been applied."""
    spec = target_spec_for(layout)
    target = target_graph(spec)
    report = verify_state(
        result.tableau,
        result.kept_photons,
        target,
        spec,
        resources=result.resources,
        seed=seed,
        corrections=corrections,
        switching=layout.switching,
    )
    return report, target


def verify_report(report: RunReport) -> VerificationReport:
    """
    Re-verify a stored run report against a freshly generated target.

    Raises:
        ValueError: Stored stabilizers are malformed (bad labels, widths, or
            a non-commuting / inconsistent set).
    """
    stats = VerificationStats()
    target = target_graph(report.target)
    stored = [PauliString.from_label(label) for label in report.canonical_stabilizers]
    if stored:
        if any(p.n != len(target) for p in stored):
            raise ValueError(f"Stored stabilizers do not act on {len(target)} qubits")
        canonical_generators(stored)
    stats.produced_rank = len(stored)
    missing = _mismatches(stored, target, stats)
    logger.info(stats.summary())
    return VerificationReport(
        target=report.target,
        passed=not missing,
        mismatched_generators=missing,
        canonical_stabilizers=list(report.canonical_stabilizers),
        resources=report.resources,
        seed=report.seed,
        corrections=report.modes.corrections,
        switching=report.modes.switching,
    )


# ── Structure ─────────────────────────────────────────────────────────────────

def structure_report(result: SimulationResult, layout: NetworkLayout, target: TargetGraph) -> StructureReport:
    """Per-colour photon counts, per-vertex degrees and module visits."""
    kept = set(result.kept_photons)
    photons = [p for p in result.photons if p.id in kept]
    colors = Counter(p.color.value for p in photons)
    rail_counts = Counter(p.rail for p in photons)
    degrees = {str(vid): target.degree(vid) for vid in target.vertex_ids}
    interior_ok: Optional[bool] = None
    if layout.dimension == 3:
        interior = [vid for vid in target.vertex_ids if target.is_interior(vid)]
        interior_ok = all(target.degree(vid) == 4 for vid in interior)
    return StructureReport(
        color_counts={c.value: colors.get(c.value, 0) for c in Color},
        rail_photon_counts={str(rail.index): rail_counts.get(rail.index, 0) for rail in layout.rails},
        degrees=degrees,
        interior_degrees_ok=interior_ok,
        visit_counts={str(result.photons[pid].vertex): n for pid, n in result.visit_counts.items()},
    )
