"""Request/response models for the query service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

ReasoningMode = Literal["brave", "cautious", "enumerate"]
MagicSetting = Literal["auto", "on", "off", "on_subsume"]


class StatsModel(BaseModel):
    choices: int = 0
    ground_rules: int = 0
    time_ground_ms: float = 0.0
    time_search_ms: float = 0.0


class QueryRequest(BaseModel):
    program: str = Field(description="program text, optionally with an inline query")
    query: str | None = Field(default=None, description="overrides the in-file query")
    mode: ReasoningMode = "brave"
    magic: MagicSetting = "auto"
    print_model: bool = False
    timeout_secs: float | None = None


class QueryResponse(BaseModel):
    mode: ReasoningMode
    ground_query: bool
    answer: bool
    substitutions: list[dict[str, str]] = []
    answers: list[str] = Field(default=[], description="substituted query atoms, one per answer")
    models: list[str] | None = Field(default=None, description="stable models (enumerate mode)")
    witness: str | None = None
    stats: StatsModel = StatsModel()


class RewriteRequest(BaseModel):
    program: str
    query: str | None = None
    subsumption: bool = False


class RewriteResponse(BaseModel):
    program: str
    seed: str
    magic_rules: int
    modified_rules: int


class RepairRequest(BaseModel):
    schema_text: str
    mapping: str
    facts: str = Field(default="", description="source facts in program syntax")
    csv_facts: dict[str, str] = Field(
        default={}, description="source predicate -> CSV text (positional, no header)"
    )
    query: str
    mode: Literal["brave", "cautious"] = "cautious"
    magic: MagicSetting = "auto"
    timeout_secs: float | None = None


class RepairResponse(BaseModel):
    program: str
    answer: QueryResponse


class BenchRequest(BaseModel):
    families: list[str] = ["simple_path", "related", "strategic", "conformant"]
    sizes: dict[str, list[int]] | list[int]
    configs: list[str] = ["off", "dms"]
    timeout_secs: float | None = 30.0
    seed: int = 0


class BenchRowModel(BaseModel):
    family: str
    size: int
    seed: int
    config: str
    answer: str
    choices: int
    ground_rules: int
    time_ground_ms: float
    time_search_ms: float
    timeout: bool


class BenchResponse(BaseModel):
    rows: list[BenchRowModel]


class ErrorDetail(BaseModel):
    message: str
    kind: str
    line: int | None = None
    column: int | None = None
    length: int | None = None
