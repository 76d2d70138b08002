"""Flat key = value run-configuration files.

One option per line, ``key = value``; blank lines and ``#`` comments are
ignored.  Values are typed on read (bool, int, float, complex, then string)
and written back in a form that reparses to the same value, so configs
round-trip unchanged.  Command-line flags always win over file values.
"""

from __future__ import annotations

__all__ = ["parse_config", "serialize_config", "format_stamp"]

_BOOL = {"true": True, "false": False}


def _parse_value(text: str):
    raw = text.strip()
    low = raw.lower()
    if low in _BOOL:
        return _BOOL[low]
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    try:
        if raw.endswith("j") or "j" in raw:
            return complex(raw.replace(" ", ""))
    except ValueError:
        pass
    return raw


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, complex):
        return format(value, "").strip("()")
    return str(value)


def parse_config(text: str) -> dict:
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = body.split("=", 1)
        key = key.strip()
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        out[key] = _parse_value(value)
    return out


def serialize_config(config: dict) -> str:
    lines = [f"{key} = {_format_value(config[key])}" for key in sorted(config)]
    return "\n".join(lines) + "\n"


def format_stamp(config: dict) -> str:
    """Single-line rendering used to stamp outputs."""
    return " ".join(f"{k}={_format_value(config[k])}" for k in sorted(config))
