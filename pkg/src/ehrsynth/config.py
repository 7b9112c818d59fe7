"""Pipeline configuration: documented defaults plus an INI-style config file.

Sections mirror the pipeline stages: [generation], [validation], [anomaly],
[diversity], [scoring], [load]. Every threshold and weight used by the stages
appears here with its default. Secrets (API tokens, database credentials)
come only from environment variables, never from config files.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .generation.bundles import DEFAULT_COUNTS
from .views import DEFAULT_CATEGORICAL_FEATURES, DEFAULT_NUMERIC_FEATURES

DATABASE_URL_ENV = "EHRSYNTH_DATABASE_URL"

# measured on template-generated clinical text: honest lexical-overlap
# averages cluster near 0.2, so the builtin flag line sits below that band
DEFAULT_COHERENCE_THRESHOLD_BUILTIN = 0.15
DEFAULT_COHERENCE_THRESHOLD_REMOTE = 0.99


class ConfigError(ValueError):
    """Missing or invalid configuration."""


@dataclass(frozen=True)
class GenerationConfig:
    patients: int = 42
    base_seed: int = 1
    backend: str = "grammar"  # grammar | remote
    workers: int = 1
    retry_limit: int = 3
    remote_url: str = ""
    remote_timeout: float = 30.0
    counts: dict[str, tuple[int, int]] = field(default_factory=lambda: dict(DEFAULT_COUNTS))


@dataclass(frozen=True)
class ValidationConfig:
    scorers: str = "builtin"  # builtin | remote
    coherence_threshold: Optional[float] = None  # None -> default per scorer kind
    perplexity_percentile: float = 95.0
    lm_order: int = 3
    lm_k: float = 1.0
    corpus_sentences: int = 10000
    nli_epsilon: float = 0.005
    remote_url: str = ""
    remote_timeout: float = 30.0
    batch_size: int = 128

    def effective_coherence_threshold(self) -> float:
        if self.coherence_threshold is not None:
            return self.coherence_threshold
        if self.scorers == "remote":
            return DEFAULT_COHERENCE_THRESHOLD_REMOTE
        return DEFAULT_COHERENCE_THRESHOLD_BUILTIN


@dataclass(frozen=True)
class AnomalyConfig:
    epochs: int = 200
    learning_rate: float = 1e-3
    batch_size: int = 32
    seed: int = 42
    numeric_features: tuple[str, ...] = DEFAULT_NUMERIC_FEATURES
    categorical_features: tuple[str, ...] = DEFAULT_CATEGORICAL_FEATURES
    widths: tuple[int, ...] = ()  # empty -> (d, ceil(d/2), ceil(d/4), ...) schedule


@dataclass(frozen=True)
class DiversityConfig:
    coverage_floor: float = 0.8
    age_cuts: tuple[int, int] = (18, 65)


@dataclass(frozen=True)
class ScoringConfig:
    w_c: float = 0.5
    w_n: float = 0.5
    w_a: float = 0.5
    histogram_bins: int = 20


@dataclass(frozen=True)
class LoadConfig:
    database_url: str = ""  # falls back to EHRSYNTH_DATABASE_URL
    batch_rows: int = 500


@dataclass(frozen=True)
class PipelineConfig:
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    anomaly: AnomalyConfig = field(default_factory=AnomalyConfig)
    diversity: DiversityConfig = field(default_factory=DiversityConfig)
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    load: LoadConfig = field(default_factory=LoadConfig)


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected integer, got {raw!r}") from None


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected number, got {raw!r}") from None


def _parse_choice(section: str, key: str, raw: str, choices: tuple[str, ...]) -> str:
    if raw not in choices:
        raise ConfigError(f"[{section}] {key}: expected one of {choices}, got {raw!r}")
    return raw


def _parse_pair(section: str, key: str, raw: str) -> tuple[int, int]:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"[{section}] {key}: expected 'lo,hi', got {raw!r}")
    lo, hi = (_parse_int(section, key, p) for p in parts)
    if lo < 0 or hi < lo:
        raise ConfigError(f"[{section}] {key}: need 0 <= lo <= hi, got {raw!r}")
    return lo, hi


def _parse_tuple(raw: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in raw.split(",") if p.strip())


def load_config(path: Optional[str | Path] = None) -> PipelineConfig:
    """Defaults overlaid with an optional INI file; unknown keys are errors."""
    config = PipelineConfig()
    if path is None:
        return config
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read_string(path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc

    known_sections = {"generation", "validation", "anomaly", "diversity", "scoring", "load"}
    unknown = set(parser.sections()) - known_sections
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    gen = config.generation
    if parser.has_section("generation"):
        counts = dict(gen.counts)
        for key, raw in parser.items("generation"):
            if key == "patients":
                gen = replace(gen, patients=_parse_int("generation", key, raw))
            elif key == "base_seed":
                gen = replace(gen, base_seed=_parse_int("generation", key, raw))
            elif key == "backend":
                gen = replace(gen, backend=_parse_choice("generation", key, raw,
                                                         ("grammar", "remote")))
            elif key == "workers":
                gen = replace(gen, workers=_parse_int("generation", key, raw))
            elif key == "retry_limit":
                gen = replace(gen, retry_limit=_parse_int("generation", key, raw))
            elif key == "remote_url":
                gen = replace(gen, remote_url=raw)
            elif key == "remote_timeout":
                gen = replace(gen, remote_timeout=_parse_float("generation", key, raw))
            elif key.startswith("count_"):
                table = key[len("count_"):]
                if table not in counts:
                    raise ConfigError(f"[generation] {key}: unknown table {table!r}")
                counts[table] = _parse_pair("generation", key, raw)
            else:
                raise ConfigError(f"[generation] unknown key {key!r}")
        gen = replace(gen, counts=counts)

    val = config.validation
    if parser.has_section("validation"):
        for key, raw in parser.items("validation"):
            if key == "scorers":
                val = replace(val, scorers=_parse_choice("validation", key, raw,
                                                         ("builtin", "remote")))
            elif key == "coherence_threshold":
                val = replace(val, coherence_threshold=_parse_float("validation", key, raw))
            elif key == "perplexity_percentile":
                val = replace(val, perplexity_percentile=_parse_float("validation", key, raw))
            elif key == "lm_order":
                val = replace(val, lm_order=_parse_int("validation", key, raw))
            elif key == "lm_k":
                val = replace(val, lm_k=_parse_float("validation", key, raw))
            elif key == "corpus_sentences":
                val = replace(val, corpus_sentences=_parse_int("validation", key, raw))
            elif key == "nli_epsilon":
                val = replace(val, nli_epsilon=_parse_float("validation", key, raw))
            elif key == "remote_url":
                val = replace(val, remote_url=raw)
            elif key == "remote_timeout":
                val = replace(val, remote_timeout=_parse_float("validation", key, raw))
            elif key == "batch_size":
                val = replace(val, batch_size=_parse_int("validation", key, raw))
            else:
                raise ConfigError(f"[validation] unknown key {key!r}")

    ano = config.anomaly
    if parser.has_section("anomaly"):
        for key, raw in parser.items("anomaly"):
            if key == "epochs":
                ano = replace(ano, epochs=_parse_int("anomaly", key, raw))
            elif key == "learning_rate":
                ano = replace(ano, learning_rate=_parse_float("anomaly", key, raw))
            elif key == "batch_size":
                ano = replace(ano, batch_size=_parse_int("anomaly", key, raw))
            elif key == "seed":
                ano = replace(ano, seed=_parse_int("anomaly", key, raw))
            elif key == "numeric_features":
                ano = replace(ano, numeric_features=_parse_tuple(raw))
            elif key == "categorical_features":
                ano = replace(ano, categorical_features=_parse_tuple(raw))
            elif key == "widths":
                ano = replace(ano, widths=tuple(
                    _parse_int("anomaly", key, p) for p in _parse_tuple(raw)))
            else:
                raise ConfigError(f"[anomaly] unknown key {key!r}")

    div = config.diversity
    if parser.has_section("diversity"):
        for key, raw in parser.items("diversity"):
            if key == "coverage_floor":
                div = replace(div, coverage_floor=_parse_float("diversity", key, raw))
            elif key == "age_cuts":
                pair = _parse_pair("diversity", key, raw)
                div = replace(div, age_cuts=pair)
            else:
                raise ConfigError(f"[diversity] unknown key {key!r}")

    sco = config.scoring
    if parser.has_section("scoring"):
        for key, raw in parser.items("scoring"):
            if key in ("w_c", "w_n", "w_a"):
                sco = replace(sco, **{key: _parse_float("scoring", key, raw)})
            elif key == "histogram_bins":
                sco = replace(sco, histogram_bins=_parse_int("scoring", key, raw))
            else:
                raise ConfigError(f"[scoring] unknown key {key!r}")

    lod = config.load
    if parser.has_section("load"):
        for key, raw in parser.items("load"):
            if key == "database_url":
                lod = replace(lod, database_url=raw)
            elif key == "batch_rows":
                lod = replace(lod, batch_rows=_parse_int("load", key, raw))
            else:
                raise ConfigError(f"[load] unknown key {key!r}")

    return PipelineConfig(generation=gen, validation=val, anomaly=ano,
                          diversity=div, scoring=sco, load=lod)
