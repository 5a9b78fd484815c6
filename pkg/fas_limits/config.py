"""
Experiment Configuration

Loads the TOML experiment document, applies overrides, renders the resolved
document back to TOML and hashes it for result metadata.
"""

import copy
import hashlib
import json
import logging
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

from pydantic import ValidationError

from .exceptions import ConfigError
from .models import ExperimentConfig

logger = logging.getLogger(__name__)

_TOML_POSITION = re.compile(r"line (\d+)")


def _locate_key(text: str, loc: Sequence[Any]) -> Optional[int]:
    """1-based line of a dotted key inside its [section], if it can be found."""
    if not loc:
        return None
    section = str(loc[0]) if len(loc) > 1 else None
    key = str(loc[1] if len(loc) > 1 else loc[0])
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line.strip("[]").strip()
            if section is not None and current == section and len(loc) == 1:
                return number
            continue
        if current == section and re.match(rf"{re.escape(key)}\s*=", line):
            return number
    return None


def _from_mapping(data: Dict[str, Any], text: str = "") -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        loc = [str(part) for part in first["loc"] if not isinstance(part, int)]
        key = ".".join(loc)
        raise ConfigError(first["msg"], key=key, line=_locate_key(text, loc)) from e


def load_config(path: Optional[Union[str, Path]] = None) -> ExperimentConfig:
    """
    Load and validate an experiment document.

    Args:
        path: TOML file; None gives the built-in defaults

    Returns:
        ExperimentConfig

    Raises:
        ConfigError: On unreadable files, TOML syntax errors (with line) or
            validation errors (with dotted key and line)
    """
    if path is None:
        return ExperimentConfig()

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e

    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = _TOML_POSITION.search(str(e))
        raise ConfigError(f"invalid TOML in {path}: {e}", line=int(match.group(1)) if match else None) from e

    config = _from_mapping(data, text)
    logger.info(f"Loaded experiment config from {path} (hash {config_hash(config)})")
    return config


def apply_overrides(config: ExperimentConfig, overrides: Dict[str, Any]) -> ExperimentConfig:
    """
    Return a new config with dotted-key overrides applied, e.g. {"mc.seed": 7}.

    Raises:
        ConfigError: If an override names an unknown key or an invalid value
    """
    data = copy.deepcopy(config.model_dump())
    for dotted, value in overrides.items():
        if value is None:
            continue
        section, _, key = dotted.partition(".")
        if section not in data or not key:
            raise ConfigError("unknown configuration key", key=dotted)
        data[section][key] = value
    return _from_mapping(data)


def config_hash(config: ExperimentConfig) -> str:
    """First 16 hex characters of SHA-256 over the canonical JSON of the config."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot render {type(value).__name__} as TOML")


def dump_config(config: ExperimentConfig) -> str:
    """Render the fully resolved document as TOML."""
    lines = []
    for section, values in config.model_dump(mode="json").items():
        if lines:
            lines.append("")
        lines.append(f"[{section}]")
        for key, value in values.items():
            lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"
