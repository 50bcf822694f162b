"""Run artifacts: metrics CSV, event log, field snapshots and PPM images.

Metrics CSV (version 1). Lines starting with ``#`` carry run metadata as
``# key: json-value``; then a header row and one row per sample:

  t                 slot of the sample
  size_<i>          region size of agent i
  covered_fraction  share of vertices that lie in some region
  unvisited         vertices owned by nobody
  isolated          owned vertices outside their owner's region
  class_label       CL1..CL4
  spread            max minus min region size
  conquests, rejoins, losses   events since the previous sample
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

from .agent import AgentState
from .analysis import ISOLATED, SERIES_VERSION, UNVISITED, extract_regions
from .field import MarkField
from .graph import Graph

EVENT_COLUMNS = ("conquests", "rejoins", "losses")


def _meta_lines(meta: dict) -> list[str]:
    return [f"# {key}: {json.dumps(meta[key], sort_keys=True)}" for key in sorted(meta)]


def metrics_csv(trace) -> str:
    k = trace.world.k
    out = io.StringIO()
    out.write(f"# antpap metrics v{SERIES_VERSION}\n")
    for line in _meta_lines(trace.metadata):
        out.write(line + "\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["t", *[f"size_{i}" for i in range(k)], "covered_fraction", "unvisited", "isolated",
         "class_label", "spread", *EVENT_COLUMNS]
    )
    for row in trace.samples:
        writer.writerow(
            [row["t"], *row["sizes"], repr(row["covered_fraction"]), row["unvisited"],
             row["isolated"], row["class_label"], row["spread"], *(row[c] for c in EVENT_COLUMNS)]
        )
    return out.getvalue()


def read_metrics_csv(path: str | Path) -> tuple[dict, list[dict]]:
    """Parse a metrics file back into ``(metadata, rows)``."""
    meta: dict = {}
    body = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# ") and ": " in line:
            key, value = line[2:].split(": ", 1)
            meta[key] = json.loads(value)
        elif not line.startswith("#"):
            body.append(line)
    rows = list(csv.DictReader(body))
    return meta, rows


def events_jsonl(trace) -> str:
    lines = [json.dumps({"meta": trace.metadata}, sort_keys=True)]
    lines.extend(json.dumps(e, sort_keys=True) for e in trace.events)
    return "\n".join(lines) + "\n"


def summary(trace) -> dict:
    snap = extract_regions(trace.world)
    return {
        "status": trace.status,
        "converged": trace.converged,
        "t_end": trace.t_end,
        "t_converged": trace.t_converged,
        "t_detected": trace.t_detected,
        "t_close_to_balanced": trace.t_close_to_balanced,
        "final_sizes": snap.sizes,
        "final_spread": snap.spread,
        "final_class": snap.class_label,
        "meta": trace.metadata,
    }


@dataclass
class Snapshot:
    graph: Graph
    field: MarkField
    agents: list[AgentState]
    t: int
    assignment: list[int]
    meta: dict


def snapshot_dict(world, meta: dict | None = None) -> dict:
    snap = extract_regions(world)
    return {
        "meta": meta or {},
        "t": world.clock.t,
        "graph": world.graph.to_dict(),
        "field": world.field.to_dict(),
        "agents": [[a.color, a.position] for a in world.agents],
        "assignment": snap.assignment,
    }


def load_snapshot(path: str | Path) -> Snapshot:
    data = json.loads(Path(path).read_text())
    graph = Graph.from_dict(data["graph"])
    field = MarkField.from_dict(graph, data["field"])
    agents = [AgentState(int(c), int(p)) for c, p in data["agents"]]
    return Snapshot(graph, field, agents, int(data["t"]), list(data["assignment"]), data.get("meta", {}))


def write_run_outputs(trace, out_dir: str | Path, stem: str = "run") -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "metrics": out / f"{stem}_metrics.csv",
        "events": out / f"{stem}_events.jsonl",
        "snapshot": out / f"{stem}_snapshot.json",
        "summary": out / f"{stem}_summary.json",
    }
    paths["metrics"].write_text(metrics_csv(trace))
    paths["events"].write_text(events_jsonl(trace))
    paths["snapshot"].write_text(json.dumps(snapshot_dict(trace.world, trace.metadata), sort_keys=True))
    paths["summary"].write_text(json.dumps(summary(trace), sort_keys=True, indent=2) + "\n")
    return paths


# -- images ----------------------------------------------------------------

BACKGROUND = (0, 0, 0)
UNVISITED_RGB = (235, 235, 235)
ISOLATED_RGB = (110, 110, 110)


def region_color(i: int) -> tuple[int, int, int]:
    """Distinct-ish colours by walking the hue circle with the golden angle."""
    import colorsys

    h = (i * 0.618033988749895) % 1.0
    r, g, b = colorsys.hsv_to_rgb(h, 0.65, 0.95)
    return int(r * 255), int(g * 255), int(b * 255)


def render_ppm(
    graph: Graph, assignment: list[int], agents=(), cell: int = 4, meta: dict | None = None
) -> bytes:
    """Binary PPM (P6) with one ``cell``-pixel block per lattice vertex.

    Agent positions are drawn in a darker shade of their region colour.
    """
    if graph.layout is None:
        raise ValueError("graph has no layout; only lattice graphs can be rendered")
    if cell < 1:
        raise ValueError("cell must be positive")
    xs = [x for x, _ in graph.layout]
    ys = [y for _, y in graph.layout]
    x0, y0 = min(xs), min(ys)
    width = (max(xs) - x0 + 1) * cell
    height = (max(ys) - y0 + 1) * cell
    pixels = bytearray(bytes(BACKGROUND) * (width * height))
    occupied = {a.position for a in agents}
    for v, (x, y) in enumerate(graph.layout):
        a = assignment[v]
        if a == UNVISITED:
            rgb = UNVISITED_RGB
        elif a == ISOLATED:
            rgb = ISOLATED_RGB
        else:
            rgb = region_color(a)
        if v in occupied:
            rgb = tuple(c // 2 for c in rgb)
        block = bytes(rgb) * cell
        px, py = (x - x0) * cell, (y - y0) * cell
        for row in range(py, py + cell):
            start = (row * width + px) * 3
            pixels[start : start + 3 * cell] = block
    comment = f"# antpap {json.dumps(meta, sort_keys=True)}\n" if meta else ""
    return f"P6\n{comment}{width} {height}\n255\n".encode() + bytes(pixels)


def export_image(snapshot_path: str | Path, out_path: str | Path, cell: int = 4) -> Path:
    snap = load_snapshot(snapshot_path)
    out = Path(out_path)
    out.write_bytes(render_ppm(snap.graph, snap.assignment, snap.agents, cell, snap.meta))
    return out
