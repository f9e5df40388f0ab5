from enum import Enum
from typing import Annotated, Dict, List, Optional

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator

from .config import Config
from .formula import Connective


class Algorithm(str, Enum):
    BRUTE = "brute"
    SAT = "sat"
    QBF_FAST = "qbf-fast"
    QBF_EXACT = "qbf-exact"

    @classmethod
    def parse(cls, name: str, default_qbf_mode: "QbfMode | None" = None) -> "Algorithm":
        key = name.strip().lower()
        if key == "qbf":
            mode = default_qbf_mode or QbfMode.FAST
            return cls.QBF_FAST if mode is QbfMode.FAST else cls.QBF_EXACT
        return cls(key)


# Records of one instance are emitted in this order
ALGORITHM_ORDER = {algo: i for i, algo in enumerate(Algorithm)}


class QbfMode(str, Enum):
    FAST = "fast"
    EXACT = "exact"


class RunStatus(str, Enum):
    OK = "ok"
    TIMEOUT = "timeout"


def normalize_connectives(v):
    if isinstance(v, str):
        v = [part for part in v.split(",") if part.strip()]
    return [c if isinstance(c, Connective) else Connective.from_name(c) for c in v]


def normalize_sizes(v):
    if isinstance(v, str):
        sizes = []
        for part in v.split(","):
            part = part.strip()
            if ".." in part:
                low, high = part.split("..", 1)
                sizes.extend(range(int(low), int(high) + 1))
            elif part:
                sizes.append(int(part))
        return sizes
    return v


Connectives = Annotated[List[Connective], BeforeValidator(normalize_connectives)]


class MinimizeConfig(BaseModel):
    output_connectives: Connectives = Field(
        default=[Connective.AND, Connective.OR, Connective.IMPLIES], alias="connectives")
    allow_not: bool = True
    allow_false_leaf: bool = True
    qbf_mode: QbfMode = Field(default=QbfMode.EXACT, alias="mode")
    sat_solver: str = Field(default_factory=Config.default_sat_backend)
    qbf_solver: str = Field(default_factory=Config.default_qbf_backend)
    timeout: Optional[float] = Field(default=None, gt=0)
    expansion_cap: int = Field(default_factory=lambda: Config.EXPANSION_CAP, ge=0)
    depth_cap: int = Field(default_factory=lambda: Config.SCHEME_DEPTH_CAP, ge=0)
    truth_table_cap: int = Field(default_factory=lambda: Config.TRUTH_TABLE_CAP, ge=1)
    verify_models: bool = False
    seed: int = Field(default=0, ge=0)
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    @model_validator(mode="after")
    def _check_space(self):
        if not self.output_connectives and not self.allow_not:
            raise ValueError("Output connectives must be nonempty unless Not is allowed")
        return self


class BenchPlan(BaseModel):
    sizes: Annotated[List[int], BeforeValidator(normalize_sizes)] = Field(
        default_factory=lambda: list(range(1, 21)))
    count: int = Field(default=100, ge=1)
    seed: int = Field(default=42, ge=0, lt=2 ** 64)
    algorithms: List[Algorithm] = Field(
        default=[Algorithm.BRUTE, Algorithm.SAT, Algorithm.QBF_FAST], alias="algos")
    timeout: float = Field(default_factory=lambda: Config.DEFAULT_TIMEOUT, gt=0)
    num_vars: Optional[int] = Field(default=None, ge=1, alias="vars")
    input_connectives: Connectives = Field(default=[Connective.AND, Connective.OR])
    input_not: bool = True
    minimize: MinimizeConfig = Field(default_factory=MinimizeConfig)
    jobs: int = Field(default=1, ge=1)
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    @model_validator(mode="after")
    def _check_sizes(self):
        if not self.sizes or min(self.sizes) < 1:
            raise ValueError("Sizes must be a nonempty list of positive integers")
        if not self.algorithms:
            raise ValueError("At least one algorithm is required")
        return self


CSV_FIELDS = ["seed", "size", "instance", "algo", "status", "time_ms", "input_formula",
              "output_formula", "output_size", "solver_calls", "candidates_tested"]


def _blank_to_none(v):
    return None if v == "" else v


class BenchRecord(BaseModel):
    seed: int
    size: int
    instance: int = Field(alias="instance_index")
    algo: Algorithm = Field(alias="algorithm")
    status: RunStatus
    time_ms: float
    input_formula: str
    output_formula: Annotated[Optional[str], BeforeValidator(_blank_to_none)] = None
    output_size: Annotated[Optional[int], BeforeValidator(_blank_to_none)] = None
    solver_calls: int = 0
    candidates_tested: int = 0
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    @model_validator(mode="after")
    def _check_outputs(self):
        if self.status is RunStatus.TIMEOUT and (self.output_formula or self.output_size):
            raise ValueError("Timeout records carry empty output fields")
        if self.status is RunStatus.OK and (self.output_formula is None or self.output_size is None):
            raise ValueError("Completed records need an output formula and size")
        return self

    def sort_key(self):
        return (self.size, self.instance, ALGORITHM_ORDER[self.algo])

    def to_row(self) -> Dict[str, str]:
        return {
            "seed": str(self.seed),
            "size": str(self.size),
            "instance": str(self.instance),
            "algo": self.algo.value,
            "status": self.status.value,
            "time_ms": f"{self.time_ms:.3f}",
            "input_formula": self.input_formula,
            "output_formula": self.output_formula or "",
            "output_size": "" if self.output_size is None else str(self.output_size),
            "solver_calls": str(self.solver_calls),
            "candidates_tested": str(self.candidates_tested),
        }


class StatsRow(BaseModel):
    group: Dict[str, str]
    n: int
    n_timeout: int
    mean_ms: Optional[float] = None
    median_ms: Optional[float] = None
    mean_output_size: Optional[float] = None
    output_size_histogram: Dict[int, int] = Field(default_factory=dict)

    @property
    def n_ok(self) -> int:
        return self.n - self.n_timeout
