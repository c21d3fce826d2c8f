"""Pipeline settings: per-stage model bindings and retrieval sizes."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .embedding import Embedder, HashedBagOfWords
from .gateway import CompletionParams, Demo, Gateway, TemplateId, load_demo_bank
from .types import Route


class VerifyMode(str, Enum):
    PER_INTERPRETATION = "per_interpretation"
    WHOLE_SET = "whole_set"


@dataclass(frozen=True)
class Stage:
    """A model binding for one pipeline stage."""

    gateway: Gateway
    params: CompletionParams = CompletionParams()


@dataclass(frozen=True)
class PipelineConfig:
    diversify: Stage
    verify: Stage
    generate: Stage
    embedder: Embedder = field(default_factory=HashedBagOfWords)
    k_per: int = 5
    k_final: int = 5
    max_interpretations: int = 6
    demos_k: int = 5
    rerank: bool = True
    demo_bank: dict[TemplateId, list[Demo]] = field(default_factory=load_demo_bank)
    force_route: Route | None = None
    verify_mode: VerifyMode = VerifyMode.PER_INTERPRETATION
    verify_workers: int = 1

    def __post_init__(self) -> None:
        for name in ("k_per", "k_final", "demos_k", "max_interpretations"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.verify_workers < 1:
            raise ValueError("verify_workers must be at least 1")

    @classmethod
    def single(cls, gateway: Gateway, params: CompletionParams = CompletionParams(), **kwargs) -> "PipelineConfig":
        """Use one gateway and one parameter set for every stage."""
        stage = Stage(gateway, params)
        return cls(diversify=stage, verify=stage, generate=stage, **kwargs)

    @property
    def gateways(self) -> list[Gateway]:
        seen: list[Gateway] = []
        for stage in (self.diversify, self.verify, self.generate):
            if all(stage.gateway is not g for g in seen):
                seen.append(stage.gateway)
        return seen
