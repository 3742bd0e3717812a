from enum import Enum
from importlib import resources
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from szmk import constants
from szmk.protocol import GridSpec
from szmk.utils.config import OutputFormat, load_config_from_file

# default verification grids ship inside the szmk package
PACKAGED_VERIFY_CONFIG = str(resources.files("szmk") / "verify_config.json")


class Command(Enum):
    EVAL = "eval"
    MOMENTS = "moments"
    VERIFY = "verify"
    BOUNDS = "bounds"
    VORONOVSKAYA = "voronovskaya"
    GRUSS = "gruss"
    FIGURE = "figure"
    CONVERGENCE = "convergence"
    REGISTRY = "registry"


class RunSettings(BaseSettings):
    """
    Everything a run can be configured with. Read from SZMK_* environment variables,
    overridden by a --config file, overridden by command-line flags.
    """
    model_config = SettingsConfigDict(env_prefix="SZMK_", extra="ignore")

    # == What to evaluate ==
    function: str = "x2expx"
    nu: str = "e1"  # second function of the Grüss quantity
    m: str = ",".join(str(m) for m in constants.FIGURE_M)
    a: float = constants.FIGURE_A
    x_lo: float = constants.FIGURE_X_LO
    x_hi: float = constants.FIGURE_X_HI
    points: int = constants.FIGURE_POINTS

    # == Numerics ==
    tail_tol: float = constants.DEFAULT_TAIL_TOL
    quad_order: int = constants.DEFAULT_QUAD_ORDER
    bv_constant: float = constants.BV_CONSTANT
    majorant_m: float = constants.MAJORANT_M
    alpha: float = 1.0
    window_hi: float = constants.WINDOW_HI
    refine_levels: int = constants.REFINE_LEVELS

    # == Output / execution ==
    format: OutputFormat = OutputFormat.CSV
    workers: int = 8
    log_level: str = "INFO"
    verify_config: str = PACKAGED_VERIFY_CONFIG

    @field_validator("m", mode="before")
    @classmethod
    def _join_m(cls, value: Any) -> Any:
        # config files may list m as an array
        if isinstance(value, (list, tuple)):
            return ",".join(str(item) for item in value)
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return str(int(value)) if float(value).is_integer() else str(value)
        return value


def parse_m_list(value: str) -> List[int]:
    items = [item.strip() for item in str(value).split(",") if item.strip()]
    if not items:
        raise ValueError("m list is empty")
    m_list = [int(item) for item in items]
    if any(m < 1 for m in m_list):
        raise ValueError(f"every m must be >= 1, got {value}")
    return m_list


def resolve_settings(config_file: Optional[str] = None, **flags: Any) -> RunSettings:
    """
    Precedence: flags > config file > environment > defaults. Flags left as None are unset.
    """
    values: Dict[str, Any] = {}
    if config_file is not None:
        file_values = load_config_from_file(config_file).to_dict()
        values.update({key: value for key, value in file_values.items() if key in RunSettings.model_fields})
    values.update({key: value for key, value in flags.items() if value is not None})
    return RunSettings(**values)


class RunConfig(BaseModel):
    command: Command
    function: str
    m_list: List[int]
    a: float
    x_grid: GridSpec
    output_path: Optional[str] = None
    format: OutputFormat = OutputFormat.CSV

    @field_validator("m_list")
    @classmethod
    def _check_m_list(cls, value: List[int]) -> List[int]:
        if not value or any(m < 1 for m in value):
            raise ValueError("m_list must be nonempty with every m >= 1")
        return value

    @field_validator("a")
    @classmethod
    def _check_a(cls, value: float) -> float:
        if not value > 1.0:
            raise ValueError(f"a must be > 1, got {value}")
        return value

    @classmethod
    def from_settings(cls, command: Command, settings: RunSettings, output_path: Optional[str] = None) -> "RunConfig":
        return cls(
            command=command,
            function=settings.function,
            m_list=parse_m_list(settings.m),
            a=settings.a,
            x_grid=GridSpec(
                lo=settings.x_lo,
                hi=settings.x_hi,
                points=settings.points,
                refine_levels=settings.refine_levels,
            ),
            output_path=output_path,
            format=settings.format,
        )
