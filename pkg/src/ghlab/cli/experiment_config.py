"""
Experiment configuration for ghlab
Validated, fully serializable run descriptions
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Type, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..config_loader import settings
from ..core.errors import InputError


class Params(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SandwichParams(Params):
    """Sandwich inequality over bundled spaces, a space directory or seeded random spaces"""
    source: Literal["bundled", "random", "dir"] = "bundled"
    dir: Optional[str] = None
    eps_grid: List[float] = Field(default_factory=lambda: [0.5])
    mode: Literal["exact", "greedy"] = "exact"
    count: int = Field(200, ge=1)
    max_points: int = Field(15, ge=1)

    @model_validator(mode="after")
    def _needs_dir(self):
        if self.source == "dir" and not self.dir:
            raise ValueError("source 'dir' needs a dir parameter")
        return self


class SwPackingParams(Params):
    k_min: int = Field(3, ge=2)
    k_max: int = Field(10, ge=2)
    mesh_h: float = Field(0.02, gt=0)

    @model_validator(mode="after")
    def _ordered(self):
        if self.k_max < self.k_min:
            raise ValueError(f"k_max {self.k_max} is below k_min {self.k_min}")
        return self


class PetersenParams(Params):
    mesh_h: float = Field(0.05, gt=0)
    detour: float = Field(0.05, gt=0, lt=0.5)
    R_trunc: Optional[float] = None


class PetersenSweepParams(Params):
    mesh_h: float = Field(0.05, gt=0)
    detours: List[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05])
    R_trunc: Optional[float] = None


class TorusParams(Params):
    radii: List[float] = Field(default_factory=lambda: [0.3, 0.45, 0.6, 0.7])
    a: float = Field(1.0, gt=0)
    b: float = Field(1.0, gt=0)
    mesh_h: float = Field(0.05, gt=0)
    R: float = Field(1.5, gt=0)
    eps: float = Field(0.5, gt=0)


class ContrastParams(SwPackingParams):
    eps_grid: List[float] = Field(default_factory=lambda: [1.0, 0.5])
    radius: float = Field(4.0, gt=0)
    r1: float = Field(0.5, gt=0)


class GHFamilyParams(Params):
    dir: str
    eps_grid: List[float] = Field(default_factory=lambda: [1.0, 0.5, 0.25])
    pointed: bool = False
    radius: Optional[float] = None


class GHAxiomsParams(Params):
    """Symmetry, identity and triangle checks of the exact distance on random triples"""
    spaces: int = Field(30, ge=3)
    max_points: int = Field(5, ge=1)
    two_point_pairs: int = Field(50, ge=0)


PARAMS: Dict[str, Type[Params]] = {
    "sandwich": SandwichParams,
    "sw-packing": SwPackingParams,
    "petersen": PetersenParams,
    "petersen-sweep": PetersenSweepParams,
    "torus-covers": TorusParams,
    "cover-contrast": ContrastParams,
    "gh-family": GHFamilyParams,
    "gh-axioms": GHAxiomsParams,
}

ExperimentName = Literal[
    "sandwich", "sw-packing", "petersen", "petersen-sweep",
    "torus-covers", "cover-contrast", "gh-family", "gh-axioms",
]


class ExperimentConfig(BaseModel):
    """One experiment run: same config and seed give the same report"""
    model_config = ConfigDict(extra="forbid")

    name: ExperimentName
    params: Dict[str, Any] = Field(default_factory=dict)
    output: Optional[str] = None
    format: Literal["json", "csv"] = "json"
    plot: bool = False
    seed: int = Field(default_factory=lambda: settings.default_seed)
    threads: int = Field(default_factory=lambda: settings.threads, ge=1)

    @model_validator(mode="after")
    def _normalize_params(self):
        # store the params with defaults filled in so the report embeds the full run
        self.params = PARAMS[self.name].model_validate(self.params).model_dump()
        return self

    @field_validator("output")
    @classmethod
    def _strip(cls, value: Optional[str]) -> Optional[str]:
        return value.strip() if value else value

    def typed_params(self) -> Params:
        return PARAMS[self.name].model_validate(self.params)


def _first_error(e: ValidationError) -> str:
    err = e.errors()[0]
    where = ".".join(str(p) for p in err["loc"]) or "config"
    return f"{where}: {err['msg']}"


def build_config(data: Union[Dict, str, Path], **overrides) -> ExperimentConfig:
    """Validate a config dict or JSON file; overrides with value None are ignored"""
    if isinstance(data, (str, Path)):
        path = Path(data)
        if not path.exists():
            raise InputError(f"config file not found: {path}")
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise InputError(f"{path} is not valid JSON: {e}") from None
    merged = dict(data)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig.model_validate(merged)
    except ValidationError as e:
        raise InputError(f"invalid experiment config ({_first_error(e)})") from None
