"""
DOT export of target cluster graphs.

Output is deterministic: nodes sorted by id, edges sorted lexicographically,
so the same graph always produces byte-identical files.
"""

import logging
from pathlib import Path

from tools.lattice import TargetGraph

logger = logging.getLogger(__name__)


def to_dot(g: TargetGraph) -> str:
    """Render the graph as an undirected DOT document."""
    lines = ["graph cluster {"]
    for v in g.vertices:
        coords = ",".join(str(c) for c in v.coords)
        lines.append(f'  {v.id} [coords="{coords}", color="{v.color.value}"];')
    for a, b in g.edges:
        lines.append(f"  {a} -- {b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_dot(g: TargetGraph, path: Path) -> None:
    """
    Write the DOT rendering of `g` to `path`.

    Raises:
        OSError: The file could not be written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_dot(g), encoding="utf-8")
    logger.info("Graph exported to DOT: %s (%d nodes, %d edges)", path, len(g), len(g.edges))
