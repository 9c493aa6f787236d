"""Pipeline configuration: one declarative YAML file, env overrides for
cache dir and rate limit."""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path

import yaml

from .analytics import FilterSpec, METHOD_PEARSON, METHOD_SPEARMAN
from .errors import ConfigError

ENV_CACHE_DIR = "WIKIALUMNI_CACHE_DIR"
ENV_RATE_LIMIT = "WIKIALUMNI_RATE_LIMIT"

MODE_LIVE = "live"
MODE_FIXTURE = "fixture"

PAGEVIEW_API_FLOOR_YEAR = 2015


@dataclass(frozen=True)
class LanguageConfig:
    code: str
    dump: Path
    dictionary: Path
    dump_date: str = ""


@dataclass(frozen=True)
class ExternalRankingConfig:
    name: str
    file: Path
    mapping: Path


@dataclass(frozen=True)
class NamedFilter:
    name: str
    spec: FilterSpec


@dataclass(frozen=True)
class PipelineConfig:
    languages: tuple[LanguageConfig, ...]
    universities_file: Path
    output_dir: Path
    cache_dir: Path
    analysis_year: int = 2017
    pageview_mode: str = MODE_FIXTURE
    fixture_views: Path | None = None
    fixture_langlinks: Path | None = None
    rate_limit: float = 1.0
    agent: str = "all-agents"
    correlation_method: str = METHOD_SPEARMAN
    filters: tuple[NamedFilter, ...] = ()
    external_rankings: tuple[ExternalRankingConfig, ...] = ()
    audit_rate: float = 0.05
    audit_seed: int = 0
    config_hash: str = ""

    @property
    def lang_codes(self) -> list[str]:
        return [lang.code for lang in self.languages]


def _filter_from_dict(raw: dict) -> NamedFilter:
    name = raw.get("name")
    if not name:
        raise ConfigError("every filter needs a name")
    try:
        spec = FilterSpec(
            min_birth_year=raw.get("min_birth_year"),
            max_birth_year=raw.get("max_birth_year"),
            min_views_exclusive=raw.get("min_views_exclusive"),
            require_birth_year=bool(raw.get("require_birth_year", False)),
        )
    except ValueError as exc:
        raise ConfigError(f"filter {name!r}: {exc}") from exc
    return NamedFilter(name=name, spec=spec)


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw_bytes = path.read_bytes()
    try:
        raw = yaml.safe_load(raw_bytes) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc

    base = path.parent

    def _resolve(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base / p

    languages = []
    for item in raw.get("languages", []):
        for key in ("code", "dump", "dictionary"):
            if key not in item:
                raise ConfigError(f"language entry missing {key!r}: {item}")
        languages.append(
            LanguageConfig(
                code=item["code"],
                dump=_resolve(item["dump"]),
                dictionary=_resolve(item["dictionary"]),
                dump_date=str(item.get("dump_date", "")),
            )
        )
    if not languages:
        raise ConfigError("no languages configured")

    if "universities_file" not in raw:
        raise ConfigError("universities_file is required")

    pv = raw.get("pageviews", {})
    mode = pv.get("mode", MODE_FIXTURE)
    if mode not in (MODE_LIVE, MODE_FIXTURE):
        raise ConfigError(f"pageviews.mode must be live or fixture, got {mode!r}")

    year = int(raw.get("analysis_year", 2017))
    if mode == MODE_LIVE and year < PAGEVIEW_API_FLOOR_YEAR:
        raise ConfigError(
            f"analysis_year {year} predates the pageview service "
            f"({PAGEVIEW_API_FLOOR_YEAR}); use fixture mode"
        )

    method = raw.get("correlation_method", METHOD_SPEARMAN)
    if method not in (METHOD_SPEARMAN, METHOD_PEARSON):
        raise ConfigError(f"unknown correlation_method {method!r}")

    cache_dir = os.environ.get(ENV_CACHE_DIR) or raw.get("cache_dir", "cache")
    rate_env = os.environ.get(ENV_RATE_LIMIT)
    rate_limit = float(rate_env) if rate_env else float(pv.get("rate_limit", 1.0))

    externals = tuple(
        ExternalRankingConfig(
            name=item["name"], file=_resolve(item["file"]), mapping=_resolve(item["mapping"])
        )
        for item in raw.get("external_rankings", [])
    )

    audit = raw.get("audit", {})

    config = PipelineConfig(
        languages=tuple(languages),
        universities_file=_resolve(raw["universities_file"]),
        output_dir=_resolve(raw.get("output_dir", "out")),
        cache_dir=_resolve(cache_dir),
        analysis_year=year,
        pageview_mode=mode,
        fixture_views=_resolve(pv["fixture_views"]) if "fixture_views" in pv else None,
        fixture_langlinks=(
            _resolve(pv["fixture_langlinks"]) if "fixture_langlinks" in pv else None
        ),
        rate_limit=rate_limit,
        agent=pv.get("agent", "all-agents"),
        correlation_method=method,
        filters=tuple(_filter_from_dict(f) for f in raw.get("filters", [])),
        external_rankings=externals,
        audit_rate=float(audit.get("rate", 0.05)),
        audit_seed=int(audit.get("seed", 0)),
        config_hash=hashlib.sha256(raw_bytes).hexdigest()[:16],
    )

    validate_preflight(config)
    return config


def validate_preflight(config: PipelineConfig) -> None:
    for lang in config.languages:
        if not lang.dump.exists():
            raise ConfigError(f"dump for {lang.code!r} not found: {lang.dump}")
        if not lang.dictionary.exists():
            raise ConfigError(
                f"dictionary for {lang.code!r} not found: {lang.dictionary}"
            )
    if not config.universities_file.exists():
        raise ConfigError(f"universities file not found: {config.universities_file}")
    if config.pageview_mode == MODE_FIXTURE and config.fixture_views is None:
        raise ConfigError("fixture mode requires pageviews.fixture_views")
