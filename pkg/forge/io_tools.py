"""
File Formats for coxeter-forge

Deterministic JSON for geometries, diagrams, embedding maps and the two
construction states, plus DOT export. Every written file carries
"version": 1 and is dumped with sorted keys, so equal values give equal
bytes.
"""

import json
import logging
from pathlib import Path
from typing import Optional, Union

from .cn_construction import CnState
from .diagram import CoxeterDiagram, parse_diagram, serialize_diagram
from .errors import DiagramError, FormatError, GeometryError
from .fraisse import Embedding
from .free_construction import ConstructionState, ProgressMetrics, RoundSummary, TaskRecord
from .geometry import Geometry

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

PathLike = Union[str, Path]

# Graphviz shapes by type position
SHAPES = ('circle', 'box', 'diamond', 'triangle', 'hexagon', 'octagon', 'pentagon', 'house')
COLORS = ('#e41a1c', '#377eb8', '#4daf4a', '#984ea3', '#ff7f00', '#a65628', '#f781bf', '#999999')


def dumps(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _versioned(data: dict) -> dict:
    return {'version': FORMAT_VERSION, **data}


def read_json(path: PathLike) -> dict:
    """Parse a JSON object and check its version; a missing version reads as 1"""
    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON: {e}") from e
    except OSError as e:
        raise FormatError(f"{path}: cannot read: {e}") from e
    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected a JSON object")
    version = data.get('version', FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version!r}")
    return data


def write_json(path: PathLike, data: dict) -> None:
    Path(path).write_text(dumps(_versioned(data)), encoding='utf-8')
    logger.info(f"wrote {path}")


# -- geometry ---------------------------------------------------------------

def geometry_from_dict(data: dict) -> Geometry:
    try:
        return Geometry.from_dict(data)
    except GeometryError as e:
        raise FormatError(f"invalid geometry: {e}") from e


def load_geometry(path: PathLike) -> Geometry:
    return geometry_from_dict(read_json(path))


def save_geometry(g: Geometry, path: PathLike) -> None:
    write_json(path, g.to_dict())


# -- diagram ----------------------------------------------------------------

def load_diagram(path: PathLike) -> CoxeterDiagram:
    data = read_json(path)
    try:
        return parse_diagram(data)
    except DiagramError as e:
        raise FormatError(f"{path}: invalid diagram: {e}") from e


def save_diagram(d: CoxeterDiagram, path: PathLike) -> None:
    write_json(path, serialize_diagram(d))


# -- embedding maps -----------------------------------------------------------

def load_map(path: PathLike) -> Embedding:
    """Embedding map as {"map": [[a, b], ...]} or a plain {"a": b} object"""
    data = read_json(path)
    try:
        if 'map' in data:
            return Embedding({int(a): int(b) for a, b in data['map']})
        return Embedding({int(a): int(b) for a, b in data.items() if a != 'version'})
    except (TypeError, ValueError) as e:
        raise FormatError(f"{path}: malformed embedding map: {e}") from e


def save_map(emb: Embedding, path: PathLike) -> None:
    write_json(path, emb.to_dict())


# -- construction states ------------------------------------------------------

def free_state_to_dict(s: ConstructionState, metrics: Optional[ProgressMetrics] = None) -> dict:
    return {
        'kind': 'free',
        'diagram': serialize_diagram(s.diagram),
        'geometry': s.geometry.to_dict(),
        'stage': s.stage,
        'task_log': [r.model_dump() for r in s.task_log],
        'rounds': [r.model_dump() for r in s.rounds],
        'metrics': None if metrics is None else metrics.model_dump(),
    }


def free_state_from_dict(data: dict) -> ConstructionState:
    try:
        return ConstructionState(
            geometry=geometry_from_dict(data['geometry']),
            diagram=parse_diagram(data['diagram']),
            stage=int(data['stage']),
            task_log=[TaskRecord(**r) for r in data.get('task_log', [])],
            rounds=[RoundSummary(**r) for r in data.get('rounds', [])],
        )
    except (KeyError, TypeError, ValueError, DiagramError) as e:
        raise FormatError(f"malformed construction state: {e}") from e


def save_state(s: Union[ConstructionState, CnState], path: PathLike, metrics: Optional[ProgressMetrics] = None) -> None:
    if isinstance(s, CnState):
        write_json(path, {'kind': 'cn', **s.to_dict()})
    else:
        write_json(path, free_state_to_dict(s, metrics))


def load_state(path: PathLike) -> Union[ConstructionState, CnState]:
    data = read_json(path)
    kind = data.get('kind')
    if kind == 'free':
        return free_state_from_dict(data)
    if kind == 'cn':
        try:
            return CnState.from_dict(data)
        except GeometryError as e:
            raise FormatError(f"{path}: invalid geometry in C_n state: {e}") from e
    raise FormatError(f"{path}: unknown state kind {kind!r}")


# -- DOT export ---------------------------------------------------------------

def export_dot(g: Geometry) -> str:
    """Undirected DOT text; node shape and colour follow the type position"""
    lines = ['graph geometry {']
    for v in g.vertices():
        t = g.type_of(v)
        k = g.types.index(t) % len(SHAPES)
        lines.append(f'  {v} [label="{v}:{t}", shape={SHAPES[k]}, color="{COLORS[k]}"];')
    for a, b in g.incidences():
        lines.append(f'  {a} -- {b};')
    lines.append('}')
    return "\n".join(lines) + "\n"
