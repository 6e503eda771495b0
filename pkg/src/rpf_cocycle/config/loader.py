"""Configuration loader for RPF Cocycle."""

import json
from pathlib import Path
from typing import Any

import yaml
from pydantic import ValidationError

from rpf_cocycle.config.models import Config
from rpf_cocycle.core.errors import ConfigValidationError, ParseError


def _problems(error: ValidationError) -> list[str]:
    problems = []
    for item in error.errors():
        path = ".".join(str(part) for part in item["loc"])
        message = item["msg"].removeprefix("Value error, ")
        problems.append(f"{path}: {message}" if path else message)
    return problems


def parse_config(text: str, fmt: str = "json") -> Config:
    """
    Parse and validate configuration text.

    Args:
        text: Configuration document
        fmt: "json" or "yaml"

    Returns:
        Validated Config object

    Raises:
        ParseError: If the text is not well-formed or not a mapping
        ConfigValidationError: If the document violates the configuration invariants
    """
    data: Any
    if fmt == "json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    elif fmt in ("yaml", "yml"):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ParseError(
                str(getattr(exc, "problem", None) or exc),
                line=mark.line + 1 if mark is not None else None,
                column=mark.column + 1 if mark is not None else None,
            ) from exc
    else:
        raise ParseError(f"Unsupported config format {fmt!r}")

    if not isinstance(data, dict):
        raise ParseError("Configuration must be a mapping", field="<root>")
    try:
        return Config.model_validate(data)
    except ValidationError as exc:
        raise ConfigValidationError(_problems(exc)) from exc


class ConfigLoader:
    """Load configuration from YAML or JSON files."""

    def load(self, config_path: str) -> Config:
        """
        Load configuration from file.

        Args:
            config_path: Path to config file (YAML or JSON)

        Returns:
            Parsed Config object

        Raises:
            FileNotFoundError: If config file doesn't exist
            ParseError: If config format is unsupported or malformed
            ConfigValidationError: If the configuration is invalid
        """
        path = Path(config_path)

        if not path.exists():
            raise FileNotFoundError(f"Configuration file not found: {config_path}")

        suffix = path.suffix.lower()
        if suffix in (".yaml", ".yml"):
            fmt = "yaml"
        elif suffix == ".json":
            fmt = "json"
        else:
            raise ParseError("Unsupported config format. Use .yaml, .yml, or .json")

        raw = path.read_bytes()
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            line_start = raw.rfind(b"\n", 0, exc.start) + 1
            raise ParseError(
                f"Invalid UTF-8 byte 0x{raw[exc.start]:02x}",
                line=raw.count(b"\n", 0, exc.start) + 1,
                column=exc.start - line_start + 1,
            ) from exc

        config = parse_config(text, fmt)
        if "name" not in config.model_fields_set:
            config = config.model_copy(update={"name": path.stem})
        return config
