"""Graph recipes, run configs and experiment presets."""

from __future__ import annotations

import copy
import json
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .graph import (
    Graph,
    build_cross,
    build_grid,
    build_path,
    build_rooms,
    build_star,
    paw_graph,
    load_graph,
)
from .scheduler import NOT_CONVERGED, SimConfig, init_world, run

# recipe type -> (builder, parameter names in call order)
RECIPES = {
    "grid": (build_grid, ("width", "height")),
    "square": (lambda side: build_grid(side, side), ("side",)),
    "path": (build_path, ("n",)),
    "star": (build_star, ("branches", "length")),
    "cross": (build_cross, ("thickness", "arm")),
    "rooms": (build_rooms, ("room", "door", "corridor")),
    "paw": (paw_graph, ()),
}

CONFIG_KEYS = ("rho_c", "rho_l", "seed", "max_steps", "stagnation_variant", "sample_interval", "placement")


class ConfigError(ValueError):
    """Invalid run config or preset; ``errors`` lists field-level messages."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def build_graph(recipe: dict | str, base_dir: Path | None = None) -> Graph:
    """Graph from a recipe such as ``{"type": "grid", "width": 20, "height": 20}``.

    A string, or ``{"type": "file", "path": ...}``, loads an edge-list file.
    """
    if isinstance(recipe, str):
        recipe = {"type": "file", "path": recipe}
    kind = recipe.get("type")
    if kind == "file":
        path = Path(recipe["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return load_graph(path)
    if kind not in RECIPES:
        raise ConfigError([f"graph.type: unknown graph type {kind!r}"])
    builder, names = RECIPES[kind]
    missing = [n for n in names if n not in recipe]
    extra = sorted(set(recipe) - set(names) - {"type"})
    errors = [f"graph.{n}: missing" for n in missing] + [f"graph.{n}: unknown key" for n in extra]
    if errors:
        raise ConfigError(errors)
    try:
        return builder(*(recipe[n] for n in names))
    except (TypeError, ValueError) as exc:
        raise ConfigError([f"graph: {exc}"]) from exc


@dataclass
class RunSpec:
    graph: dict | str
    k: int
    config: SimConfig

    def to_dict(self) -> dict:
        return {"graph": self.graph, "k": self.k, **self.config.to_dict()}


def parse_run_config(data: dict) -> RunSpec:
    """Validate a run config mapping, collecting every field-level problem."""
    errors = []
    allowed = {"graph", "k", *CONFIG_KEYS}
    errors += [f"{key}: unknown key" for key in sorted(set(data) - allowed)]
    if "graph" not in data:
        errors.append("graph: missing")
    k = data.get("k")
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        errors.append(f"k: must be a positive integer, got {k!r}")
    params = {key: data[key] for key in CONFIG_KEYS if key in data}
    cfg = None
    try:
        cfg = SimConfig(**params)
    except ValueError as exc:
        errors += [f"config: {e}" for e in str(exc).split("; ")]
    except TypeError as exc:
        errors.append(f"config: {exc}")
    if errors:
        raise ConfigError(errors)
    return RunSpec(data["graph"], k, cfg)


def load_run_config(path: str | Path) -> RunSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: not valid JSON ({exc})"]) from exc
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be an object"])
    return parse_run_config(data)


@dataclass
class ExperimentPreset:
    """A grid of runs: one parameter swept over ``values``, each with every seed.

    ``parameter`` is ``"k"`` or ``"graph.<key>"``; with no sweep ``values``
    holds just the preset's own ``k``.
    """

    name: str
    graph: dict
    k: int
    seeds: list[int]
    config: dict = field(default_factory=dict)
    parameter: str = "k"
    values: list[int] = field(default_factory=list)
    stop: str = "convergence"
    outputs: list[str] = field(default_factory=lambda: ["cells", "aggregate"])
    description: str = ""

    def __post_init__(self) -> None:
        if not self.values:
            self.values = [self.k] if self.parameter == "k" else [self.graph[self.parameter[6:]]]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentPreset":
        return cls(**data)

    def cells(self) -> list[tuple[int, int]]:
        return [(value, seed) for value in self.values for seed in self.seeds]

    def cell_spec(self, value: int, seed: int) -> RunSpec:
        graph = copy.deepcopy(self.graph)
        k = self.k
        if self.parameter == "k":
            k = value
        elif self.parameter.startswith("graph."):
            graph[self.parameter[6:]] = value
        else:
            raise ConfigError([f"parameter: cannot sweep {self.parameter!r}"])
        return parse_run_config({"graph": graph, "k": k, **self.config, "seed": seed})


PRESETS: dict[str, ExperimentPreset] = {
    p.name: p
    for p in [
        ExperimentPreset(
            "grid20-4", {"type": "grid", "width": 20, "height": 20}, 4, list(range(20)),
            description="20x20 grid, 4 agents",
        ),
        ExperimentPreset(
            "grid30-8", {"type": "grid", "width": 30, "height": 30}, 8, list(range(20)),
            description="30x30 grid, 8 agents",
        ),
        ExperimentPreset(
            "rooms-10", {"type": "rooms", "room": 14, "door": 3, "corridor": 3}, 10, list(range(20)),
            config={"max_steps": 2_000_000},
            description="six 14x14 rooms joined by 3-wide corridors (1239 vertices), 10 agents",
        ),
        ExperimentPreset(
            "cross-agents", {"type": "cross", "thickness": 5, "arm": 10}, 5, list(range(10)),
            values=[5, 10, 20, 40],
            description="cross with a 5x5 centre and 5x10 arms (225 vertices), agent-count sweep",
        ),
        ExperimentPreset(
            "grid-sizes", {"type": "square", "side": 8}, 5, list(range(10)),
            parameter="graph.side", values=[8, 12, 16],
            description="square grids of side 8, 12, 16 with 5 agents",
        ),
        ExperimentPreset(
            "star-2", {"type": "star", "branches": 3, "length": 2}, 2, list(range(20)),
            description="three-branch star of length 2 with 2 agents (no balanced partition)",
        ),
        ExperimentPreset(
            "star-3", {"type": "star", "branches": 3, "length": 2}, 3, list(range(20)),
            description="three-branch star of length 2 with 3 agents",
        ),
    ]
}


def get_preset(name_or_path: str) -> ExperimentPreset:
    if name_or_path in PRESETS:
        return copy.deepcopy(PRESETS[name_or_path])
    path = Path(name_or_path)
    if path.exists():
        return ExperimentPreset.from_dict(json.loads(path.read_text()))
    raise ConfigError([f"preset: unknown preset {name_or_path!r} (known: {', '.join(PRESETS)})"])


@dataclass
class CellResult:
    value: int
    seed: int
    status: str
    t_converged: int | None
    t_close_to_balanced: int | None
    t_end: int
    final_spread: int

    def to_row(self) -> dict:
        return asdict(self)


def run_cell(preset: ExperimentPreset, value: int, seed: int, **run_kwargs) -> tuple[CellResult, object]:
    spec = preset.cell_spec(value, seed)
    world = init_world(build_graph(spec.graph), spec.k, spec.config)
    meta = {"preset": preset.name, "parameter": preset.parameter, "value": value, "seed": seed,
            "graph": spec.graph}
    trace = run(world, stop=preset.stop, metadata=meta, **run_kwargs)
    from .analysis import extract_regions

    snap = extract_regions(trace.world)
    return (
        CellResult(value, seed, trace.status, trace.t_converged, trace.t_close_to_balanced,
                   trace.t_end, snap.spread),
        trace,
    )


def aggregate(cells: list[CellResult]) -> list[dict]:
    """Per parameter value: median and mean convergence time.

    A non-converged cell counts as infinitely slow in the median; the mean
    is over converged cells only.
    """
    rows = []
    for value in sorted({c.value for c in cells}):
        group = [c for c in cells if c.value == value]
        times = [c.t_converged if c.status != NOT_CONVERGED and c.t_converged is not None
                 else float("inf") for c in group]
        done = [x for x in times if x != float("inf")]
        rows.append({
            "value": value,
            "runs": len(group),
            "converged": len(done),
            "median_t_converged": statistics.median(times),
            "mean_t_converged": statistics.fmean(done) if done else float("inf"),
        })
    return rows


def median_is_monotone(rows: list[dict], increasing: bool) -> bool:
    meds = [r["median_t_converged"] for r in sorted(rows, key=lambda r: r["value"])]
    pairs = list(zip(meds, meds[1:]))
    return all(b > a for a, b in pairs) if increasing else all(b < a for a, b in pairs)
