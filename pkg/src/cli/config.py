from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings

from src.symbolic_image.image import InputStrategy

Mode = Literal["centralized", "decentralized", "distributed", "full"]


class RunSettings(BaseSettings):
    """Defaults for command-line runs, overridable through CIS_RUN_* variables or a .env file."""

    divisions: int = 32
    workers: int = 1
    out: str = "artifacts"
    seed: int = 0
    log_level: str = "INFO"
    log_dir: Optional[str] = None
    mode: Mode = "centralized"

    class Config:
        env_prefix = "CIS_RUN_"
        case_sensitive = False


RUN_SETTINGS = RunSettings()


class RunConfig(BaseModel):
    model: str = Field(description="Registry name or path to a model definition file")
    divisions: tuple[int, ...] = Field(description="Cells per state dimension; one value applies to all")
    mode: Mode = "centralized"
    grouping: Optional[list[list[int]]] = Field(default=None, description="Cascade blocks per subsystem, 0-based")
    inputs_split: Optional[int] = Field(default=None, description="Sub-boxes per input dimension; None for the model default")
    out: Path = Path("artifacts")
    workers: int = Field(default=1, ge=1)
    seed: int = 0
    seeded: bool = Field(default=True, description="Restrict the distributed pass to the decentralized cells")
    validation_mode: Literal["synchronous", "sequential"] = "synchronous"
    export_graphs: bool = False
    cstr_variant: Literal["verbatim", "consumption"] = "verbatim"
    step: float = Field(default=1.0, gt=0)
    scheme: Literal["euler", "heun"] = "euler"

    @field_validator("divisions", mode="before")
    @classmethod
    def _as_tuple(cls, value: Union[int, str, list, tuple]) -> tuple:
        if isinstance(value, int):
            return (value,)
        if isinstance(value, str):
            return tuple(int(v) for v in value.split(",") if v.strip())
        return tuple(value)

    @model_validator(mode="after")
    def _check_mode(self) -> "RunConfig":
        if not self.divisions or any(d < 1 for d in self.divisions):
            raise ValueError(f"Divisions must be >= 1, got {self.divisions}")
        if self.mode != "centralized" and not self.grouping:
            raise ValueError(f"Mode '{self.mode}' needs a grouping of cascade blocks")
        if self.inputs_split is not None and self.inputs_split < 1:
            raise ValueError(f"Input split must be >= 1, got {self.inputs_split}")
        return self

    def input_strategy(self) -> Optional[InputStrategy]:
        return None if self.inputs_split is None else InputStrategy.split(self.inputs_split)

    def model_options(self) -> dict:
        return {"cstr_variant": self.cstr_variant, "step": self.step, "scheme": self.scheme}


def parse_grouping(text: str) -> list[list[int]]:
    """'1,2:2,3' -> [[0, 1], [1, 2]] (1-based blocks on the command line)."""
    groups = []
    for part in text.split(":"):
        blocks = [int(v) - 1 for v in part.split(",") if v.strip()]
        if not blocks:
            raise ValueError(f"Empty group in grouping '{text}'")
        groups.append(blocks)
    return groups
