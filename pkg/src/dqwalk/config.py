"""Flat ``key = value`` configuration files.

One entry per line, ``#`` starts a comment, blank lines are ignored. Keys are
case-sensitive; later duplicates override earlier ones.
"""

from pathlib import Path

from dqwalk.errors import ConfigError


def parse_kv(text):
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        entries[key] = value
    return entries


def read_kv(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_kv(text)


def format_kv(entries):
    return "".join(f"{key} = {value}\n" for key, value in entries.items())


def get_int(entries, key, default=None):
    if key not in entries:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return int(entries[key])
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {entries[key]!r}") from None


def get_float(entries, key, default=None):
    if key not in entries:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(entries[key])
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {entries[key]!r}") from None


def get_bool(entries, key, default):
    if key not in entries:
        return default
    value = entries[key].lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {entries[key]!r}")


def get_float_list(entries, key, default=None):
    if key not in entries:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return [float(v) for v in entries[key].split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers") from None
