"""
Space files for ghlab
JSON schema for finite metric spaces and graph length spaces
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..core.covers import CoverGraph
from ..core.errors import InputError
from ..core.metric_core import DiscretizedLengthSpace, FiniteMetricSpace, MetricSpace, length_metric

logger = logging.getLogger(__name__)


class MatrixMetric(BaseModel):
    model_config = ConfigDict(extra="forbid")
    type: Literal["matrix"] = "matrix"
    data: List[List[float]]


class GraphMetric(BaseModel):
    model_config = ConfigDict(extra="forbid")
    type: Literal["graph"] = "graph"
    edges: List[Tuple[str, str, float]]


class SpaceFile(BaseModel):
    """On-disk form of a space"""
    model_config = ConfigDict(extra="forbid")
    id: str
    points: List[str]
    metric: Union[MatrixMetric, GraphMetric] = Field(discriminator="type")
    basepoint: Optional[str] = None
    measure: Optional[Dict[str, float]] = None
    boundary: List[str] = Field(default_factory=list)
    fibers: Optional[Dict[str, List[str]]] = None


def to_model(space: MetricSpace) -> SpaceFile:
    if isinstance(space, DiscretizedLengthSpace):
        metric = GraphMetric(edges=[(u, v, float(w)) for u, v, w in space.edges])
    else:
        metric = MatrixMetric(data=np.asarray(space.matrix).tolist())
    return SpaceFile(
        id=space.id,
        points=list(space.points),
        metric=metric,
        basepoint=space.basepoint,
        measure=space.measure,
        boundary=sorted(space.boundary),
    )


def from_model(model: SpaceFile) -> MetricSpace:
    if isinstance(model.metric, GraphMetric):
        space = length_metric(model.metric.edges, id=model.id, vertices=model.points,
                              basepoint=model.basepoint, measure=model.measure, boundary=model.boundary)
        if len(space.points) != len(model.points):
            raise InputError(f"space {model.id!r}: edges mention vertices outside the point list")
        return space
    return FiniteMetricSpace(model.id, tuple(model.points), np.array(model.metric.data, dtype=float),
                             model.basepoint, model.measure, frozenset(model.boundary))


def load_space(path: Union[str, Path]) -> MetricSpace:
    """Read and validate a space file"""
    path = Path(path)
    if not path.exists():
        raise InputError(f"space file not found: {path}")
    try:
        with open(path, "r") as f:
            model = SpaceFile.model_validate(json.load(f))
    except json.JSONDecodeError as e:
        raise InputError(f"{path} is not valid JSON: {e}") from None
    except ValidationError as e:
        raise InputError(f"{path} does not match the space schema: {e.errors()[0]['msg']} "
                         f"at {'.'.join(str(p) for p in e.errors()[0]['loc'])}") from None
    return from_model(model)


def load_space_dir(directory: Union[str, Path]) -> List[MetricSpace]:
    """All *.json spaces in a directory, in file-name order"""
    directory = Path(directory)
    if not directory.is_dir():
        raise InputError(f"space directory not found: {directory}")
    files = sorted(directory.glob("*.json"))
    if not files:
        raise InputError(f"no space files in {directory}")
    return [load_space(f) for f in files]


def space_to_dict(space: MetricSpace) -> dict:
    return to_model(space).model_dump(exclude_none=True)


def dump_space(space: MetricSpace, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(space_to_dict(space), f, indent=2, sort_keys=True)
    logger.info("wrote space %s to %s", space.id, path)
    return path


def dump_cover(cover: CoverGraph, path: Union[str, Path]) -> Path:
    """Write a cover graph as a space file with its fiber map"""
    model = to_model(cover.space)
    model.fibers = cover.fibers
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(model.model_dump(exclude_none=True), f, indent=2, sort_keys=True)
    logger.info("wrote cover of %s (%d lifted vertices) to %s", cover.complex.name, len(cover.lifted), path)
    return path
