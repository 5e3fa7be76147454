"""Validated experiment configuration with a stable digest."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .fiber import FiberSpanConfig, LinkConfig, SsfmSettings
from .ldpc import PRESETS, DegreeDistribution

SCHEMA_VERSION = 1
EQUALIZERS = ("LE", "DNN-NB", "DNN-BCE", "DNN-TEQ")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class FiberModel(_Strict):
    length_km: float = Field(80.0, gt=0, le=500)
    D_ps_nm_km: float = Field(3.9, ge=-30, le=30)
    gamma_per_W_km: float = Field(1.6, ge=0, le=20)
    alpha_dB_km: float = Field(0.2, ge=0, le=1)
    rdps_fraction: float = Field(0.05, ge=0, le=1)


class LinkModel(_Strict):
    spans: int = Field(4, ge=1, le=100)
    fiber: FiberModel = FiberModel()
    nf_dB: float | None = Field(5.0, ge=0, le=15)
    powers_dBm: list[float] = Field(default_factory=lambda: [4.0, 6.0, 8.0], min_length=1)
    step_km: float = Field(0.5, gt=0, le=10)

    @field_validator("powers_dBm")
    @classmethod
    def _physical_power(cls, v):
        if any(p < -20 or p > 25 for p in v):
            raise ValueError("launch powers must lie in [-20, 25] dBm")
        return v


class NetworkModel(_Strict):
    window: int = Field(3, ge=1, le=31)
    width: int = Field(128, ge=4, le=4096)
    n_hidden: int = Field(4, ge=1, le=16)
    dropout: float = Field(0.1, ge=0, lt=1)
    dropout_nonturbo: float = Field(0.1, ge=0, lt=1)
    batch_size: int = Field(1000, ge=2)
    batch_size_nonturbo: int = Field(1000, ge=2)
    max_epochs: int = Field(60, ge=1)
    patience: int = Field(13, ge=1)
    lr: float = Field(1e-3, gt=0)
    train_symbols: int = Field(65536, ge=64)
    float32: bool = True

    @field_validator("window")
    @classmethod
    def _odd(cls, v):
        if v % 2 == 0:
            raise ValueError("window must be odd")
        return v

    @model_validator(mode="after")
    def _patience(self):
        if self.patience > self.max_epochs:
            raise ValueError("patience exceeds max_epochs")
        return self


class CodeModel(_Strict):
    preset: str | None = "DVBS2_5_6"
    var_degrees: list[tuple[int, float]] | None = None
    chk_degrees: list[tuple[int, float]] | None = None
    block_length: int = Field(4800, ge=16, le=64800)
    code_seed: int = 0
    interleaver_seed: int = 0
    bp_iterations: int = Field(8, ge=1, le=200)
    outer_iterations: int = Field(3, ge=1, le=20)
    extrinsic_scale: float = Field(0.5, gt=0, le=1, description="damping of decoder extrinsics fed back to the detector")
    family_check_degrees: list[float] = Field(default_factory=list)
    optimized: bool = False

    @model_validator(mode="after")
    def _one_source(self):
        if (self.preset is None) == (self.var_degrees is None):
            raise ValueError("give exactly one of preset or var_degrees/chk_degrees")
        if self.preset is not None and self.preset not in PRESETS:
            raise ValueError(f"unknown code preset {self.preset!r}; choose from {sorted(PRESETS)}")
        if self.var_degrees is not None and self.chk_degrees is None:
            raise ValueError("chk_degrees required with var_degrees")
        return self

    def distribution(self) -> DegreeDistribution:
        if self.preset is not None:
            return PRESETS[self.preset]
        return DegreeDistribution(tuple(map(tuple, self.var_degrees)), tuple(map(tuple, self.chk_degrees)))


class MonteCarloModel(_Strict):
    min_errors: int = Field(100, ge=1)
    max_bits: int = Field(2_000_000, ge=1)
    burst_symbols: int = Field(16200, ge=16)


class ExitModel(_Strict):
    grid_points: int = Field(11, ge=3, le=201)
    seeds: list[int] = Field(default_factory=lambda: [0])
    power_dBm: float | None = None
    delta: float = Field(0.005, ge=0, lt=0.5)
    dc_range: tuple[float, float] = (3.0, 60.0)
    fraction_step: float = Field(0.025, gt=0, le=0.5)
    degree_triples: list[tuple[int, int, int]] | None = None


class ExperimentConfig(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    name: str = "desk"
    m: int = Field(4, ge=1, le=6, description="bits per polarization (16QAM: 4)")
    baud: float = Field(34e9, gt=0)
    channels: int = Field(1, ge=1, le=9)
    spacing_hz: float = Field(37.4e9, gt=0)
    rolloff: float = Field(0.1, ge=0, le=1)
    oversampling: int = Field(4, ge=2, le=32)
    noiseless: bool = False
    link: LinkModel = LinkModel()
    equalizers: list[Literal["LE", "DNN-NB", "DNN-BCE", "DNN-TEQ"]] = Field(
        default_factory=lambda: ["LE", "DNN-BCE", "DNN-TEQ"], min_length=1
    )
    le_taps: int = Field(31, ge=1)
    network: NetworkModel = NetworkModel()
    code: CodeModel = CodeModel()
    montecarlo: MonteCarloModel = MonteCarloModel()
    exit: ExitModel = ExitModel()
    seed: int = 0
    dataset_symbols: int = Field(65536, ge=16)

    @field_validator("channels")
    @classmethod
    def _odd_channels(cls, v):
        if v % 2 == 0:
            raise ValueError("channel count must be odd (centre channel under test)")
        return v

    @field_validator("m")
    @classmethod
    def _even_m(cls, v):
        if v > 1 and v % 2:
            raise ValueError("m must be 1 or even (square QAM per polarization)")
        return v

    @model_validator(mode="after")
    def _spacing(self):
        if self.channels > 1 and self.spacing_hz < self.baud * (1 + self.rolloff):
            raise ValueError("channel spacing smaller than the occupied bandwidth")
        return self

    # --- derived objects ---------------------------------------------------------------
    def link_config(self, power_dBm: float) -> LinkConfig:
        f = self.link.fiber
        span = FiberSpanConfig(f.length_km, f.D_ps_nm_km, f.gamma_per_W_km, f.alpha_dB_km, f.rdps_fraction)
        nf = None if self.noiseless else self.link.nf_dB
        return LinkConfig(spans=self.link.spans, span=span, edfa_nf_dB=nf, launch_power_dBm=power_dBm)

    def ssfm(self) -> SsfmSettings:
        return SsfmSettings(step_km=self.link.step_km)

    @property
    def bits_per_symbol(self) -> int:
        return 2 * self.m

    def digest(self) -> str:
        """First 16 hex digits of SHA-256 over the canonical JSON form."""
        canon = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return self.model_copy(update={"seed": seed})


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.model_validate_json(Path(path).read_text())


def json_schema() -> dict:
    schema = ExperimentConfig.model_json_schema()
    schema["$id"] = f"turboeq-experiment-config/v{SCHEMA_VERSION}"
    return schema
