"""Experiment configuration: YAML presets validated into pydantic models."""
import copy
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Sequence, Union

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from uwsvd.channels import ArrayKind, ChannelModelId, Geometry, LosFieldParams, PropagationParams, build_geometry
from uwsvd.detection import DetectorMode
from uwsvd.errors import ConfigError
from uwsvd.solvers import Algorithm, SolverSpec

CoordsChoice = Literal["orig", "uwsvd", "both"]


class ExperimentType(str, Enum):
    COND_CDF = "cond_cdf"
    SER_CURVE = "ser_curve"
    EST_ERROR = "est_error"
    THEORY_CHECK = "theory_check"
    FLOPS = "flops"


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", use_enum_values=False)


class ArraySettings(StrictModel):
    kind: ArrayKind = Field(ArrayKind.ULA, description="Service array layout")
    rows: Optional[int] = Field(None, ge=1, description="UPA rows")
    cols: Optional[int] = Field(None, ge=1, description="UPA columns")


class SystemSettings(StrictModel):
    m: int = Field(..., ge=1, description="Service antennas")
    k_users: int = Field(8, ge=1, description="Number of users")
    n_ue: int = Field(4, ge=1, description="Antennas per user")
    array: ArraySettings = Field(default_factory=ArraySettings)
    frequency_hz: float = Field(3.5e9, gt=0, description="Carrier frequency")
    user_line_length_m: float = Field(30.0, ge=0, description="Length of the user line")
    perpendicular_distance_m: float = Field(15.0, gt=0, description="Distance from array to user line")

    @model_validator(mode="after")
    def _check_dimensions(self) -> "SystemSettings":
        if self.m < self.k_users * self.n_ue:
            raise ValueError(f"m={self.m} is smaller than k_users*n_ue={self.k_users * self.n_ue}")
        if self.array.kind is ArrayKind.UPA:
            if self.array.rows is None or self.array.cols is None:
                raise ValueError("UPA arrays need array.rows and array.cols")
            if self.array.rows * self.array.cols != self.m:
                raise ValueError(f"array.rows*array.cols must equal m={self.m}")
        return self

    @property
    def n(self) -> int:
        return self.k_users * self.n_ue

    def build_geometry(self) -> Geometry:
        shape = (self.array.rows, self.array.cols) if self.array.kind is ArrayKind.UPA else None
        return build_geometry(
            self.array.kind,
            self.m,
            self.k_users,
            self.n_ue,
            self.frequency_hz,
            user_line_length=self.user_line_length_m,
            perpendicular_distance=self.perpendicular_distance_m,
            upa_shape=shape,
        )


class PropagationSettings(StrictModel):
    beta_nlos: float = Field(0.020, ge=0)
    gamma_nlos: float = Field(1.765, ge=0)
    beta_los: float = Field(0.007, ge=0)
    gamma_los: float = Field(1.050, ge=0)
    kappa_db: float = Field(9.0, description="Rician K-factor for Model 3")


class LosFieldSettings(StrictModel):
    los_probability: float = Field(0.7, ge=0, le=1)
    persistence_length: float = Field(10.0, gt=0, description="LoS/shadowing correlation length in antennas")
    shadowing_sigma_db: float = Field(4.0, ge=0)
    kappa_mean_db: float = Field(9.0)
    kappa_sigma_db: float = Field(10.0, ge=0)


class ChannelSettings(StrictModel):
    model: ChannelModelId = Field(ChannelModelId.MODEL3, description="Fading model 1-4")
    corr_rho: float = Field(0.0, ge=0, lt=1, description="Correlation between the two closest antennas")
    propagation: PropagationSettings = Field(default_factory=PropagationSettings)
    los_field: LosFieldSettings = Field(default_factory=LosFieldSettings)

    def propagation_params(self) -> PropagationParams:
        return PropagationParams(corr_rho=self.corr_rho, **self.propagation.model_dump())

    def los_field_params(self) -> LosFieldParams:
        return LosFieldParams(**self.los_field.model_dump())


class ModemSettings(StrictModel):
    qam_order: Literal[4, 16, 64] = Field(16)
    snr_db: List[float] = Field(default_factory=lambda: [16.0], min_length=1)


class DetectionSettings(StrictModel):
    mode: DetectorMode = Field(DetectorMode.LMMSE)


class SolverSettings(StrictModel):
    algorithm: Algorithm
    iterations: int = Field(20, ge=1)
    coords: CoordsChoice = Field("both")
    omega: float = Field(1.0, gt=0, lt=2, description="SSOR relaxation")
    lbfgs_textbook: bool = False
    cg_preconditioned: bool = False

    @property
    def coordinate_list(self) -> List[str]:
        return ["orig", "uwsvd"] if self.coords == "both" else [self.coords]

    def to_spec(self) -> SolverSpec:
        return SolverSpec(
            algorithm=self.algorithm,
            max_iterations=self.iterations,
            omega=self.omega,
            lbfgs_textbook=self.lbfgs_textbook,
            cg_preconditioned=self.cg_preconditioned,
        )


class EstimationSettings(StrictModel):
    varpi_db: List[float] = Field(default_factory=list, description="Channel-to-estimation-noise ratios; empty = perfect CSI")


class TheorySettings(StrictModel):
    asymptotic_m: List[int] = Field(default_factory=lambda: [256, 1024, 4096])
    asymptotic_draws: int = Field(100, ge=1)
    correlated_draws: int = Field(500, ge=1)
    correlated_rho: List[float] = Field(default_factory=lambda: [0.5, 0.8])
    equivalence_instances: int = Field(200, ge=1)
    threshold_tolerance_db: float = Field(0.1, gt=0)


class OutputSettings(StrictModel):
    directory: Path = Field(Path("results"))
    convergence_factor: float = Field(1.05, ge=1.0)
    write_traces: bool = Field(False, description="Write per-solver residual traces of trial 0")
    channel_dumps: int = Field(0, ge=0, description="Number of leading trials whose channel is dumped")


def _default_solvers() -> List[SolverSettings]:
    return [SolverSettings(algorithm=Algorithm.SSOR), SolverSettings(algorithm=Algorithm.LBFGS)]


class SimConfig(StrictModel):
    experiment: ExperimentType
    seed: int = Field(0, ge=0)
    trials: int = Field(100, ge=1)
    workers: int = Field(1, ge=1)
    system: SystemSettings
    channel: ChannelSettings = Field(default_factory=ChannelSettings)
    modem: ModemSettings = Field(default_factory=ModemSettings)
    detection: DetectionSettings = Field(default_factory=DetectionSettings)
    solvers: List[SolverSettings] = Field(default_factory=_default_solvers, min_length=1)
    estimation: EstimationSettings = Field(default_factory=EstimationSettings)
    theory: TheorySettings = Field(default_factory=TheorySettings)
    output: OutputSettings = Field(default_factory=OutputSettings)

    @field_validator("experiment", mode="before")
    @classmethod
    def _known_experiment(cls, value: Any) -> Any:
        name = str(getattr(value, "value", value)).replace("-", "_")
        valid = [e.value for e in ExperimentType]
        if name not in valid:
            raise ValueError(f"unknown experiment '{value}'; valid names: {', '.join(valid)}")
        return name


def _field_path(loc: Sequence[Union[str, int]]) -> str:
    return ".".join(str(part) for part in loc)


def validate_config(raw: Mapping[str, Any]) -> SimConfig:
    if not isinstance(raw, Mapping):
        raise ConfigError("configuration must be a mapping")
    try:
        return SimConfig.model_validate(dict(raw))
    except ValidationError as exc:
        problems = [(_field_path(err["loc"]), err["msg"]) for err in exc.errors()]
        fields = [path for path, _ in problems]
        message = "; ".join(f"{path or '<root>'}: {msg}" for path, msg in problems)
        raise ConfigError(f"invalid configuration: {message}", fields=fields) from exc


def read_raw_config(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        with open(path) as handle:
            raw = yaml.safe_load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a mapping at top level")
    return raw


def load_config(path: Union[str, Path]) -> SimConfig:
    return validate_config(read_raw_config(path))


def apply_overrides(
    raw: Mapping[str, Any],
    experiment: Optional[str] = None,
    model: Optional[int] = None,
    rho_corr: Optional[float] = None,
    snr: Optional[List[float]] = None,
    qam_order: Optional[int] = None,
    solvers: Optional[List[str]] = None,
    coords: Optional[str] = None,
    mode: Optional[str] = None,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    out: Optional[Union[str, Path]] = None,
    varpi: Optional[List[float]] = None,
) -> Dict[str, Any]:
    """Merge CLI overrides into a raw config mapping; validation happens afterwards."""
    merged = copy.deepcopy(dict(raw))

    def section(name: str) -> Dict[str, Any]:
        value = merged.setdefault(name, {})
        if not isinstance(value, dict):
            raise ConfigError(f"{name} must be a mapping", fields=[name])
        return value

    if experiment is not None:
        merged["experiment"] = experiment
    if model is not None:
        section("channel")["model"] = model
    if rho_corr is not None:
        section("channel")["corr_rho"] = rho_corr
    if snr is not None:
        section("modem")["snr_db"] = list(snr)
    if qam_order is not None:
        section("modem")["qam_order"] = qam_order
    if mode is not None:
        section("detection")["mode"] = mode
    if varpi is not None:
        section("estimation")["varpi_db"] = list(varpi)
    if trials is not None:
        merged["trials"] = trials
    if seed is not None:
        merged["seed"] = seed
    if out is not None:
        section("output")["directory"] = str(out)

    if solvers is not None:
        existing = {entry.get("algorithm"): entry for entry in merged.get("solvers", []) if isinstance(entry, dict)}
        merged["solvers"] = [dict(existing.get(name, {"algorithm": name})) for name in solvers]
    if coords is not None:
        entries = merged.get("solvers") or [s.model_dump(mode="json") for s in _default_solvers()]
        merged["solvers"] = [{**entry, "coords": coords} for entry in entries]
    return merged


class RuntimeEnvironment(BaseModel):
    log_level: str = "INFO"
    log_json: bool = False


def load_environment(dotenv_path: Optional[Union[str, Path]] = None) -> RuntimeEnvironment:
    """Read UWSVD_* variables, after loading a .env file if one exists."""
    load_dotenv(dotenv_path=dotenv_path, override=False)
    return RuntimeEnvironment(
        log_level=os.getenv("UWSVD_LOG_LEVEL", "INFO").upper(),
        log_json=os.getenv("UWSVD_LOG_JSON", "false").lower() == "true",
    )
