"""
Unit tests for the Verifier Agent.

Tests cover:
- Produced states that match or miss the target generators
- Re-verification of stored run reports, tampered and malformed ones included
- Structure summaries of 3D builds
"""

import asyncio

import pytest

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from agents.module_agent import apply_frame
from agents.network_agent import build_3d_layout, injection_schedule, simulate
from agents.verifier_agent import (
    structure_report,
    target_graph,
    target_spec_for,
    verify_report,
    verify_state,
)
from graph import BuildState, run_build
from models.schema import RunReport, TargetSpec
from tools.lattice import grid_graph
from tools.tableau import apply_cz, apply_h, new_tableau


# ── Helpers ───────────────────────────────────────────────────────────────────

def _stored_report(rows: int = 2, cols: int = 3, seed: int = 0) -> RunReport:
    """Run the full pipeline in memory and parse its report."""
    final = asyncio.run(run_build(BuildState(dimension=2, rows=rows, cols=cols, seed=seed)))
    return RunReport.model_validate(final["report"])


def _flip_sign(label: str) -> str:
    return ("+" if label[0] == "-" else "-") + label[1:]


# ── Tests ─────────────────────────────────────────────────────────────────────

class TestVerifyState:
    """Direct comparison of a tableau with a target graph."""

    def test_graph_state_passes(self):
        target = grid_graph(2, 2)
        t = new_tableau(4)
        for q in range(4):
            apply_h(t, q)
        for a, b in target.edges:
            apply_cz(t, a, b)
        report = verify_state(t, [0, 1, 2, 3], target, TargetSpec(dimension=2, dims=[2, 2], kind="grid"))
        assert report.passed
        assert report.mismatched_generators == []
        assert report.canonical_stabilizers == ["+XZZI", "+ZXIZ", "+ZIXZ", "+IZZX"]

    def test_missing_edge_named(self):
        t = new_tableau(3)
        for q in range(3):
            apply_h(t, q)
        apply_cz(t, 0, 1)
        report = verify_state(t, [0, 1, 2], grid_graph(1, 3), TargetSpec(dimension=2, dims=[1, 3], kind="grid"))
        assert not report.passed
        assert [m.vertex for m in report.mismatched_generators] == [1, 2]
        assert [m.generator for m in report.mismatched_generators] == ["+ZXZ", "+IZX"]

    def test_photon_count_must_match(self):
        with pytest.raises(ValueError):
            verify_state(new_tableau(2), [0, 1], grid_graph(1, 3), TargetSpec(dimension=2, dims=[1, 3], kind="grid"))

    def test_unknown_target_kind(self):
        with pytest.raises(ValueError):
            target_graph(TargetSpec(dimension=2, dims=[2, 2], kind="hexagonal"))


class TestVerifyReport:
    """Stored reports are re-checked against a regenerated target."""

    def test_fresh_report_passes(self):
        verification = verify_report(_stored_report())
        assert verification.passed
        assert "PASS" in verification.summary()

    def test_seed_does_not_change_the_state(self):
        stabilizers = {tuple(_stored_report(seed=s).canonical_stabilizers) for s in range(4)}
        assert len(stabilizers) == 1

    def test_flipped_sign_fails(self):
        report = _stored_report()
        labels = list(report.canonical_stabilizers)
        labels[0] = _flip_sign(labels[0])
        tampered = report.model_copy(update={"canonical_stabilizers": labels})
        verification = verify_report(tampered)
        assert not verification.passed
        assert verification.mismatched_generators

    def test_wrong_width_rejected(self):
        report = _stored_report()
        labels = [label[:-1] for label in report.canonical_stabilizers]
        with pytest.raises(ValueError):
            verify_report(report.model_copy(update={"canonical_stabilizers": labels}))

    def test_non_commuting_rejected(self):
        report = _stored_report(rows=1, cols=2)
        with pytest.raises(ValueError):
            verify_report(report.model_copy(update={"canonical_stabilizers": ["+XI", "+ZI"]}))

    def test_bad_label_rejected(self):
        report = _stored_report(rows=1, cols=2)
        with pytest.raises(ValueError):
            verify_report(report.model_copy(update={"canonical_stabilizers": ["+XQ"]}))

    def test_empty_group_misses_everything(self):
        report = _stored_report(rows=1, cols=2)
        verification = verify_report(report.model_copy(update={"canonical_stabilizers": []}))
        assert [m.vertex for m in verification.mismatched_generators] == [0, 1]


class TestStructure:
    """Colour counts, degrees and module visits of a 3D build."""

    @pytest.fixture
    def three_cube(self):
        layout = build_3d_layout(3, 3, 3)
        result = simulate(layout, injection_schedule(layout), 0)
        apply_frame(result.tableau, result.frame)
        target = target_graph(target_spec_for(layout))
        return result, layout, target

    def test_colour_counts(self, three_cube):
        report = structure_report(*three_cube)
        assert report.color_counts == {"red": 12, "green": 6}
        assert report.interior_degrees_ok is True

    def test_rail_counts(self, three_cube):
        report = structure_report(*three_cube)
        assert report.rail_photon_counts["0"] == 1  # (0, 0)
        assert report.rail_photon_counts["4"] == 2  # (1, 1)
        assert report.rail_photon_counts["1"] == 3  # (1, 0), red

    def test_visit_counts(self, three_cube):
        report = structure_report(*three_cube)
        assert report.visit_counts["3"] == 5  # red (1, 0): two M1, three M2
        assert report.visit_counts["12"] == 4  # green (1, 1): four M2

    def test_degrees_cover_every_vertex(self, three_cube):
        report = structure_report(*three_cube)
        assert len(report.degrees) == 18
