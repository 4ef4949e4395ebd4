"""
LangGraph workflow — multi-node pipeline for one cluster-state build.

Orchestrates the full run:
  layout → schedule → simulate → prune (3D, by measurement) → correct
         → verify → export_dot (optional) → output

An aborted simulation skips straight to the end with its error recorded.
"""

import asyncio
import json
import logging
import time
from pathlib import Path
from typing import Any, Optional

import numpy as np
from langgraph.graph import END, StateGraph
from pydantic import BaseModel, ConfigDict, Field

from agents.module_agent import apply_frame
from agents.network_agent import (
    build_2d_layout,
    build_3d_layout,
    injection_schedule,
    layout_summary,
    measure_out_blue,
    simulate,
)
from agents.verifier_agent import structure_report, target_graph, target_spec_for, verify_result
from config import REPORT_WALL_TIME
from models.schema import (
    CavityVariant,
    Control,
    CorrectionMode,
    NetworkLayout,
    Photon,
    RunModes,
    RunReport,
    Switching,
    VerificationReport,
)
from tools.dot_export import export_dot

logger = logging.getLogger(__name__)

PRUNE_AT_INJECTION = "injection"
PRUNE_BY_MEASUREMENT = "measurement"


# ── State ─────────────────────────────────────────────────────────────────────

class BuildState(BaseModel):
    """Shared state flowing through the LangGraph nodes."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    dimension: int = Field(..., ge=2, le=3)
    rows: int = Field(default=1, description="2D rails.")
    cols: int = Field(default=1, description="Time bins.")
    ny: int = Field(default=1, description="3D rails along y.")
    nz: int = Field(default=1, description="3D rails along z.")
    seed: int = Field(default=0)
    switching: Switching = Field(default=Switching.ACTIVE)
    control: Control = Field(default=Control.INDIVIDUAL)
    corrections: CorrectionMode = Field(default=CorrectionMode.DEFERRED)
    pruning: str = Field(default=PRUNE_AT_INJECTION)
    cavity: CavityVariant = Field(default=CavityVariant.Q_SWITCHED)
    include_events: bool = Field(default=False)
    out_path: Optional[str] = Field(default=None)
    dot_path: Optional[str] = Field(default=None)

    layout: Optional[NetworkLayout] = Field(default=None)
    schedule: list[Photon] = Field(default_factory=list)
    result: Optional[Any] = Field(default=None, description="SimulationResult of the run.")
    target: Optional[Any] = Field(default=None, description="TargetGraph of the run.")
    verification: Optional[VerificationReport] = Field(default=None)
    report: Optional[dict] = Field(default=None)
    output_path: Optional[str] = Field(default=None)
    started: float = Field(default_factory=time.perf_counter)
    errors: list[str] = Field(default_factory=list)


# ── Report helpers ────────────────────────────────────────────────────────────

def render_report(report: RunReport) -> str:
    """Serialise a run report; parsing and re-rendering gives the same text."""
    payload = report.model_dump(mode="json", by_alias=True, exclude_none=True)
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def build_report(state: BuildState) -> RunReport:
    result = state.result
    verification = state.verification
    return RunReport(
        target=verification.target,
        layout=state.layout,
        seed=state.seed,
        modes=RunModes(
            switching=state.switching,
            control=state.control,
            corrections=state.corrections,
            pruning=state.pruning,
            cavity=state.cavity,
        ),
        resources=result.resources,
        structure=structure_report(result, state.layout, state.target),
        events=result.events if state.include_events else None,
        module_records=result.records if state.include_events else None,
        canonical_stabilizers=verification.canonical_stabilizers,
        mismatched_generators=verification.mismatched_generators,
        passed=verification.passed,
        wall_time=round(time.perf_counter() - state.started, 6) if REPORT_WALL_TIME else None,
    )


# ── Node functions ────────────────────────────────────────────────────────────

async def layout_node(state: BuildState) -> dict:
    """Build the chip layout for the requested target."""
    logger.info("═══ LAYOUT NODE ═══")
    try:
        if state.dimension == 2:
            layout = build_2d_layout(state.rows, state.cols, state.switching, state.control, cavity=state.cavity)
        else:
            layout = build_3d_layout(
                state.ny,
                state.nz,
                state.cols,
                state.switching,
                state.control,
                cavity=state.cavity,
                prune_at_injection=state.pruning == PRUNE_AT_INJECTION,
            )
        if not len(target_graph(target_spec_for(layout))):
            raise ValueError(
                f"target lattice for cols={state.cols}, ny={state.ny}, nz={state.nz} has no vertices "
                "once blue sites are removed"
            )
        logger.info("Modules per layer: %s", layout_summary(layout))
        return {"layout": layout}
    except Exception as exc:
        error_msg = f"Layout failed: {exc}"
        logger.error(error_msg)
        return {"errors": state.errors + [error_msg]}


async def schedule_node(state: BuildState) -> dict:
    """Derive the photon injection schedule."""
    logger.info("═══ SCHEDULE NODE ═══")
    if state.layout is None:
        return {}
    schedule = injection_schedule(state.layout)
    logger.info("Injection schedule: %d photons on %d rails", len(schedule), len(state.layout.rails))
    return {"schedule": schedule}


async def simulate_node(state: BuildState) -> dict:
    """Run the discrete-event network simulation off the event loop."""
    logger.info("═══ SIMULATE NODE ═══ (seed %d)", state.seed)
    if state.layout is None:
        return {}
    try:
        result = await asyncio.to_thread(
            simulate, state.layout, state.schedule, state.seed, state.corrections
        )
        logger.info(
            "Resources: M1=%d, M2=%d, measurements=%d",
            result.resources.m1_count, result.resources.m2_count, result.resources.measurement_count,
        )
        return {"result": result}
    except Exception as exc:
        error_msg = f"Simulation failed: {exc}"
        logger.error(error_msg)
        return {"errors": state.errors + [error_msg]}


async def abort_node(state: BuildState) -> dict:
    """Terminal node for runs that could not be simulated."""
    logger.info("═══ ABORT NODE ═══")
    for error in state.errors:
        logger.error("Run aborted: %s", error)
    return {}


async def prune_node(state: BuildState) -> dict:
    """Measure out blue photons of a plain cubic cluster."""
    logger.info("═══ PRUNE NODE ═══")
    # a separate stream so pruning never shifts the module readouts
    rng = np.random.default_rng([state.seed, 1])
    try:
        await asyncio.to_thread(measure_out_blue, state.result, state.layout, rng, state.corrections)
        return {"result": state.result}
    except Exception as exc:
        error_msg = f"Pruning failed: {exc}"
        logger.error(error_msg)
        return {"errors": state.errors + [error_msg]}


async def correct_node(state: BuildState) -> dict:
    """Apply the deferred Pauli frame."""
    logger.info("═══ CORRECT NODE ═══")
    applied = apply_frame(state.result.tableau, state.result.frame)
    logger.info("Frame applied: %d corrections (%s mode)", applied, state.corrections.value)
    return {"result": state.result}


async def verify_node(state: BuildState) -> dict:
    """Compare the photons with the target cluster state."""
    logger.info("═══ VERIFY NODE ═══")
    try:
        verification, target = await asyncio.to_thread(
            verify_result, state.result, state.layout, state.seed, state.corrections
        )
        logger.info(verification.summary())
        if not verification.passed:
            logger.warning("%d target generators missing", len(verification.mismatched_generators))
        return {"verification": verification, "target": target}
    except Exception as exc:
        error_msg = f"Verification failed: {exc}"
        logger.error(error_msg)
        return {"errors": state.errors + [error_msg]}


async def export_dot_node(state: BuildState) -> dict:
    """Write the target graph in DOT format."""
    logger.info("═══ EXPORT DOT NODE ═══")
    try:
        export_dot(state.target, Path(state.dot_path))
        return {}
    except OSError as exc:
        error_msg = f"DOT export failed: {exc}"
        logger.error(error_msg)
        return {"errors": state.errors + [error_msg]}


async def output_node(state: BuildState) -> dict:
    """Assemble the run report and write it as JSON."""
    logger.info("═══ OUTPUT NODE ═══")
    if state.verification is None:
        return {}
    report = build_report(state)
    payload = report.model_dump(mode="json", by_alias=True, exclude_none=True)
    if not state.out_path:
        return {"report": payload}
    output_path = Path(state.out_path)
    try:
        output_path.parent.mkdir(parents=True, exist_ok=True)
        output_path.write_text(render_report(report), encoding="utf-8")
        logger.info("Report saved to: %s", output_path)
        return {"report": payload, "output_path": str(output_path)}
    except OSError as exc:
        error_msg = f"Writing report failed: {exc}"
        logger.error(error_msg)
        return {"report": payload, "errors": state.errors + [error_msg]}


# ── Conditional edges ─────────────────────────────────────────────────────────

def after_simulate_decision(state: BuildState) -> str:
    """Abort on errors, prune blue photons when asked, else correct."""
    if state.errors or state.result is None:
        return "abort"
    if state.dimension == 3 and state.pruning == PRUNE_BY_MEASUREMENT:
        return "prune"
    return "correct"


def after_prune_decision(state: BuildState) -> str:
    return "abort" if state.errors else "correct"


def after_verify_decision(state: BuildState) -> str:
    if state.errors:
        return "abort"
    return "export_dot" if state.dot_path else "output"


# ── Build the graph ───────────────────────────────────────────────────────────

def build_cluster_graph() -> StateGraph:
    """
    Construct the LangGraph StateGraph for one build.

    Graph topology:
        layout → schedule → simulate → [conditional]
                                          ├─ abort → END
                                          ├─ prune → [conditional] ─ correct | abort
                                          └─ correct → verify → [conditional]
                                                                  ├─ export_dot → output → END
                                                                  ├─ output → END
                                                                  └─ abort → END
    """
    graph = StateGraph(BuildState)

    graph.add_node("layout", layout_node)
    graph.add_node("schedule", schedule_node)
    graph.add_node("simulate", simulate_node)
    graph.add_node("abort", abort_node)
    graph.add_node("prune", prune_node)
    graph.add_node("correct", correct_node)
    graph.add_node("verify", verify_node)
    graph.add_node("export_dot", export_dot_node)
    graph.add_node("output", output_node)

    graph.add_edge("layout", "schedule")
    graph.add_edge("schedule", "simulate")

    graph.add_conditional_edges(
        "simulate",
        after_simulate_decision,
        {"abort": "abort", "prune": "prune", "correct": "correct"},
    )
    graph.add_conditional_edges(
        "prune",
        after_prune_decision,
        {"abort": "abort", "correct": "correct"},
    )
    graph.add_edge("correct", "verify")
    graph.add_conditional_edges(
        "verify",
        after_verify_decision,
        {"abort": "abort", "export_dot": "export_dot", "output": "output"},
    )
    graph.add_edge("export_dot", "output")
    graph.add_edge("output", END)
    graph.add_edge("abort", END)

    graph.set_entry_point("layout")
    return graph


def compile_builder():
    """Compile and return the runnable build graph."""
    return build_cluster_graph().compile()


async def run_build(state: BuildState) -> dict:
    """Run one build to completion and return the final state values."""
    builder = compile_builder()
    return await builder.ainvoke(state.model_dump())
