"""Flat ``section.key = value`` experiment files."""
from __future__ import annotations

import logging
import re
from enum import Enum
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from app.core.errors import ConfigNotFound, ConfigSyntaxError, ConfigValidationError
from app.schemas.experiment import ExperimentParams

logger = logging.getLogger(__name__)

KEY_PATTERN = re.compile(r"^[a-z_][a-z0-9_]*(\.[a-z_][a-z0-9_]*)*$")


def _unquote(value: str) -> str:
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def _insert(tree: dict, key: str, value: str, line: int) -> None:
    node = tree
    parts = key.split(".")
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigSyntaxError(f"'{key}' nests under a plain value", line)
        node = child
    if isinstance(node.get(parts[-1]), dict):
        raise ConfigSyntaxError(f"'{key}' is a section and cannot take a value", line)
    node[parts[-1]] = value


def tokenize(text: str) -> tuple[dict[str, Any], dict[str, int]]:
    """Nested raw-string tree and the line number of every key."""
    tree: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigSyntaxError(f"expected 'key = value', got {raw.strip()!r}", number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not KEY_PATTERN.match(key):
            raise ConfigSyntaxError(f"invalid key {key!r}", number)
        if key in lines:
            raise ConfigSyntaxError(f"duplicate key {key!r} (first on line {lines[key]})", number)
        if not value:
            raise ConfigSyntaxError(f"missing value for {key!r}", number)
        _insert(tree, key, _unquote(value), number)
        lines[key] = number
    return tree, lines


def _line_of(loc: str, lines: dict[str, int]) -> int | None:
    if loc in lines:
        return lines[loc]
    nested = [n for key, n in lines.items() if key.startswith(loc + ".")]
    return min(nested) if nested else None


def _describe(error: dict, lines: dict[str, int]) -> str:
    loc = ".".join(str(part) for part in error["loc"] if not isinstance(part, int))
    line = _line_of(loc, lines)
    where = f"line {line}" if line is not None else "missing"
    return f"{loc or '<root>'}: {error['msg']} ({where})"


def parse_config_text(text: str, source: str = "<config>") -> ExperimentParams:
    tree, lines = tokenize(text)
    try:
        params = ExperimentParams.model_validate(tree)
    except ValidationError as exc:
        errors = [_describe(error, lines) for error in exc.errors()]
        raise ConfigValidationError(errors) from exc
    logger.debug("Parsed %d keys from %s", len(lines), source)
    return params


def parse_config(path: Path) -> ExperimentParams:
    path = Path(path)
    if not path.is_file():
        raise ConfigNotFound(f"config file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigNotFound(f"cannot read {path}: {exc}") from exc
    try:
        return parse_config_text(text, str(path))
    except ConfigSyntaxError as exc:
        exc.detail = f"{path}: {exc.detail}"
        raise


def render_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(render_value(v) for v in value)
    return str(value)


def flatten(params: ExperimentParams) -> dict[str, Any]:
    flat: dict[str, Any] = {}

    def walk(prefix: str, node: Any) -> None:
        if isinstance(node, dict):
            for key, value in node.items():
                walk(f"{prefix}.{key}" if prefix else key, value)
        elif node is not None:
            flat[prefix] = node

    walk("", params.model_dump(exclude_none=True))
    return flat


def serialize_config(params: ExperimentParams) -> str:
    """Sorted flat text that parses back to an equal ExperimentParams."""
    flat = flatten(params)
    return "".join(f"{key} = {render_value(flat[key])}\n" for key in sorted(flat))
