"""Versioned pipeline configuration and per-stage digests.

Every artifact records the digest of the configuration sections it depends
on.  A stage that reads an artifact recomputes that digest from the current
configuration and refuses to continue on a mismatch, so for instance a
corpus can never be mixed with a vocabulary trained under other settings.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Any

from .common import canonical_json, sha256_hex

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

CONFIG_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class IngestSection:
    min_stars: int = 10
    hash_algorithm: str = "md5"
    workers: int = 4
    test_repos_per_language: int = 500
    pinned_test_repos: tuple[str, ...] = ()


@dataclass(frozen=True)
class FilterSection:
    max_file_bytes: int = 1_048_576
    max_line_chars: int = 1000
    max_mean_line_chars: float = 100.0
    max_non_alnum_fraction: float = 0.25


@dataclass(frozen=True)
class AlignSection:
    fuzzy_threshold: float = 0.85


@dataclass(frozen=True)
class TokenizerSection:
    vocab_size: int = 64_000
    lines_per_file: int = 10
    byte_budget: int | None = None


@dataclass(frozen=True)
class CorpusSection:
    context_length: int = 8192


@dataclass(frozen=True)
class LMSection:
    order: int = 4
    discount: float = 0.75


@dataclass(frozen=True)
class SamplingSection:
    temperature: float = 0.2
    max_tokens: int = 256
    num_samples: int = 10
    stop: str = "method-end"


@dataclass(frozen=True)
class SignalSection:
    source: str = "synthetic"
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    context_length: int = 512
    order: int = 4


@dataclass(frozen=True)
class EvalSection:
    manifest_dir: str | None = None
    pairs_per_project: int | None = 10
    tasks: tuple[str, ...] = ("first", "last", "extra", "completion")
    context_modes: tuple[str, ...] = ("with-code", "without-code")
    workers: int = 4


@dataclass(frozen=True)
class PipelineConfig:
    version: int = CONFIG_VERSION
    seed: int = 0
    ingest: IngestSection = field(default_factory=IngestSection)
    filter: FilterSection = field(default_factory=FilterSection)
    align: AlignSection = field(default_factory=AlignSection)
    tokenizer: TokenizerSection = field(default_factory=TokenizerSection)
    corpus: CorpusSection = field(default_factory=CorpusSection)
    lm: LMSection = field(default_factory=LMSection)
    sampling: SamplingSection = field(default_factory=SamplingSection)
    signal: SignalSection = field(default_factory=SignalSection)
    eval: EvalSection = field(default_factory=EvalSection)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def digest(self) -> str:
        return sha256_hex(canonical_json(self.to_dict()))

    def stage_digest(self, stage: str) -> str:
        """Digest over the sections ``stage`` and everything upstream of it depend on."""
        try:
            sections = STAGE_SECTIONS[stage]
        except KeyError:
            raise ConfigError(f"unknown stage {stage!r}") from None
        d = self.to_dict()
        return sha256_hex(canonical_json({"version": self.version, **{s: d[s] for s in sections}}))

    def with_overrides(self, overrides: dict[str, Any]) -> "PipelineConfig":
        """Apply ``{"section.key": value}`` (or top-level ``key``) overrides."""
        cfg = self
        for dotted, value in overrides.items():
            parts = dotted.split(".")
            if len(parts) == 1:
                cfg = _set(cfg, parts[0], value)
            elif len(parts) == 2:
                section = getattr(cfg, parts[0], None)
                if not is_dataclass(section):
                    raise ConfigError(f"unknown config section {parts[0]!r}")
                cfg = replace(cfg, **{parts[0]: _set(section, parts[1], value)})
            else:
                raise ConfigError(f"bad config key {dotted!r}")
        return cfg


# ``seed`` feeds the split, vocabulary sampling, packing and prompt choice, so it is upstream of everything.
_CHAIN = ["seed", "ingest", "filter", "align", "tokenizer", "corpus"]
STAGE_SECTIONS: dict[str, list[str]] = {
    "ingest": _CHAIN[:2],
    "filter": _CHAIN[:3],
    "align": _CHAIN[:4],
    "tokenize": _CHAIN[:5],
    "corpus": _CHAIN[:6],
    "stats": _CHAIN[:6],
    "lm": _CHAIN + ["lm"],
    "signal": ["seed", "signal", "lm"],
    "prompts": _CHAIN[:4] + ["eval"],
    "sample": _CHAIN + ["lm", "eval", "sampling"],
    "evaluate": _CHAIN + ["lm", "eval", "sampling"],
}


def _coerce(value: Any, current: Any, name: str) -> Any:
    if isinstance(current, bool):
        if isinstance(value, str):
            return value.lower() in ("1", "true", "yes")
        return bool(value)
    if isinstance(current, tuple):
        if isinstance(value, str):
            value = [v for v in value.split(",") if v]
        items = list(value)
        if current and isinstance(current[0], int):
            items = [int(v) for v in items]
        return tuple(items)
    if isinstance(value, str) and value.lower() in ("none", "null"):
        return None
    if isinstance(current, int) and not isinstance(current, bool):
        return int(value)
    if isinstance(current, float):
        return float(value)
    if current is None and isinstance(value, str):
        try:
            return int(value)
        except ValueError:
            return value
    return value


def _set(obj, name: str, value: Any):
    names = {f.name for f in fields(obj)}
    if name not in names:
        raise ConfigError(f"unknown config key {name!r} in {type(obj).__name__}")
    current = getattr(obj, name)
    if is_dataclass(current):
        raise ConfigError(f"{name!r} is a section; set its keys instead")
    try:
        return replace(obj, **{name: _coerce(value, current, name)})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name!r}: {value!r} ({exc})") from exc


def _flatten(data: dict, prefix: str = "") -> dict[str, Any]:
    out = {}
    for k, v in data.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def load_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> PipelineConfig:
    """Defaults, then the TOML file, then ``overrides`` (flags win)."""
    cfg = PipelineConfig()
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        version = data.pop("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(f"{path}: unsupported config version {version}")
        cfg = cfg.with_overrides(_flatten(data))
    return cfg.with_overrides(overrides or {})


def dump_config(cfg: PipelineConfig) -> str:
    """TOML text for ``cfg`` (None values are omitted, which restores their defaults)."""
    lines = [f"version = {cfg.version}", f"seed = {cfg.seed}"]
    for f in fields(cfg):
        section = getattr(cfg, f.name)
        if not is_dataclass(section):
            continue
        lines += ["", f"[{f.name}]"]
        for sf in fields(section):
            v = getattr(section, sf.name)
            if v is None:
                continue
            lines.append(f"{sf.name} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"


def _toml_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return canonical_json(v)
    if isinstance(v, tuple):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot write {type(v).__name__} to TOML")
