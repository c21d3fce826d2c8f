"""Run configuration: an INI file plus command-line overrides.

Example::

    [DEFAULT]
    backend = HttpOpenAiCompatible
    base_url = https://api.openai.com
    api_key_env = OPENAI_API_KEY
    model = gpt-4
    max_tokens = 300
    top_p = 1.0
    temperature = 0.3

    [run]
    corpus = corpus.jsonl
    k_per = 5
    k_final = 5

    [generate]
    model = gpt-3.5-turbo

Each of ``[diversify]``, ``[verify]`` and ``[generate]`` may override any
model key; unset keys fall back to ``[DEFAULT]``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .config import PipelineConfig, Stage, VerifyMode
from .embedding import HashedBagOfWords
from .errors import ConfigError
from .gateway import (
    BackendKind,
    CompletionCache,
    CompletionParams,
    Gateway,
    HttpOpenAiCompatible,
    Pricing,
    ScriptedMock,
)
from .types import Route

STAGES = ("diversify", "verify", "generate")


@dataclass(frozen=True)
class StageSpec:
    backend: BackendKind = BackendKind.HTTP_OPENAI_COMPATIBLE
    params: CompletionParams = CompletionParams()
    base_url: str = "https://api.openai.com"
    api_key_env: str = "OPENAI_API_KEY"
    fixtures: str | None = None
    strict: bool = False

    @property
    def backend_identity(self) -> tuple:
        if self.backend is BackendKind.SCRIPTED_MOCK:
            return (self.backend, self.fixtures, self.strict)
        return (self.backend, self.base_url, self.api_key_env)


@dataclass(frozen=True)
class RunConfig:
    corpus_path: str | None = None
    dataset_path: str | None = None
    index_path: str | None = None
    k_per: int = 5
    k_final: int = 5
    max_interpretations: int = 6
    demos_k: int = 5
    rerank: bool = True
    embed_dimension: int = 256
    stages: dict[str, StageSpec] = field(default_factory=lambda: {s: StageSpec() for s in STAGES})
    cache_dir: str | None = None
    pricing: Pricing = Pricing()
    parallelism: int = 1
    call_budget: int = 32
    force_route: Route | None = None
    verify_mode: VerifyMode = VerifyMode.PER_INTERPRETATION

    def __post_init__(self) -> None:
        for name in ("k_per", "k_final", "demos_k", "max_interpretations"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.call_budget < 1:
            raise ConfigError("call_budget must be >= 1")

    def with_mock_fixtures(self, path: str) -> "RunConfig":
        stages = {
            name: replace(spec, backend=BackendKind.SCRIPTED_MOCK, fixtures=path)
            for name, spec in self.stages.items()
        }
        return replace(self, stages=stages)


def _stage_from_section(sec: configparser.SectionProxy) -> StageSpec:
    try:
        params = CompletionParams(
            max_tokens=sec.getint("max_tokens", 300),
            top_p=sec.getfloat("top_p", 1.0),
            temperature=sec.getfloat("temperature", 0.3),
            model_name=sec.get("model", "gpt-4"),
        )
        return StageSpec(
            backend=BackendKind(sec.get("backend", BackendKind.HTTP_OPENAI_COMPATIBLE.value)),
            params=params,
            base_url=sec.get("base_url", "https://api.openai.com"),
            api_key_env=sec.get("api_key_env", "OPENAI_API_KEY"),
            fixtures=sec.get("fixtures") or None,
            strict=sec.getboolean("strict", False),
        )
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}]: {exc}") from exc


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError(f"config file {path} not found")
    run = parser["run"] if parser.has_section("run") else parser[parser.default_section]
    base = Path(path).parent

    def rel(key):
        v = run.get(key)
        return str((base / v).resolve()) if v else None

    stages = {}
    for name in STAGES:
        sec = parser[name] if parser.has_section(name) else parser[parser.default_section]
        spec = _stage_from_section(sec)
        if spec.fixtures:
            spec = replace(spec, fixtures=str((base / spec.fixtures).resolve()))
        stages[name] = spec
    try:
        force = run.get("force_route")
        return RunConfig(
            corpus_path=rel("corpus"),
            dataset_path=rel("dataset"),
            index_path=rel("index"),
            k_per=run.getint("k_per", 5),
            k_final=run.getint("k_final", 5),
            max_interpretations=run.getint("max_interpretations", 6),
            demos_k=run.getint("demos_k", 5),
            rerank=run.getboolean("rerank", True),
            embed_dimension=run.getint("embed_dimension", 256),
            stages=stages,
            cache_dir=rel("cache_dir"),
            pricing=Pricing(run.getfloat("price_input_per_1k", 0.0), run.getfloat("price_output_per_1k", 0.0)),
            parallelism=run.getint("parallelism", 1),
            call_budget=run.getint("call_budget", 32),
            force_route=Route(force) if force else None,
            verify_mode=VerifyMode(run.get("verify_mode", VerifyMode.PER_INTERPRETATION.value)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_pipeline(rc: RunConfig) -> PipelineConfig:
    """Instantiate gateways (shared between stages with the same backend)."""
    cache = CompletionCache(rc.cache_dir) if rc.cache_dir else None
    gateways: dict[tuple, Gateway] = {}
    stages = {}
    for name in STAGES:
        spec = rc.stages[name]
        ident = spec.backend_identity
        if ident not in gateways:
            if spec.backend is BackendKind.SCRIPTED_MOCK:
                if not spec.fixtures:
                    raise ConfigError(f"stage {name!r} uses ScriptedMock but names no fixture script")
                if not Path(spec.fixtures).exists():
                    raise ConfigError(f"fixture script {spec.fixtures} not found")
                backend = ScriptedMock.from_file(spec.fixtures, strict=spec.strict)
            else:
                backend = HttpOpenAiCompatible(spec.base_url, spec.api_key_env)
            gateways[ident] = Gateway(backend, cache, rc.pricing, rc.call_budget)
        stages[name] = Stage(gateways[ident], spec.params)
    return PipelineConfig(
        diversify=stages["diversify"],
        verify=stages["verify"],
        generate=stages["generate"],
        embedder=HashedBagOfWords(rc.embed_dimension),
        k_per=rc.k_per,
        k_final=rc.k_final,
        max_interpretations=rc.max_interpretations,
        demos_k=rc.demos_k,
        rerank=rc.rerank,
        force_route=rc.force_route,
        verify_mode=rc.verify_mode,
    )
