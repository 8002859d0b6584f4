"""Plain-text run configuration: one "key = value" per line, dotted keys.

Blank lines and lines starting with '#' are skipped.  Keys may not repeat;
values are raw strings interpreted by typed getters that name the offending
key in every diagnostic.  Example::

    matrix.m = 200
    matrix.n = 150
    matrix.seed = 7
    matrix.spectrum = flat
    solver.variant = det-flow
    solver.epsilon = 1e-6
    p = 15
    seeds = 0,1,2
    output.dir = out
"""

import re

from .errors import ConfigError

_KEY_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")
_BOOL = {"on": True, "true": True, "yes": True, "1": True,
         "off": False, "false": False, "no": False, "0": False}


class Config:
    """Parsed key/value configuration with typed, diagnosing accessors."""

    def __init__(self, pairs: dict, source: str = "<config>"):
        self.pairs = pairs
        self.source = source
        self._seen: set = set()

    def __contains__(self, key) -> bool:
        return key in self.pairs

    def _raw(self, key, default):
        self._seen.add(key)
        if key in self.pairs:
            return self.pairs[key]
        if default is _REQUIRED:
            raise ConfigError(f"{self.source}: missing required key '{key}'")
        return default

    def get_str(self, key, default=None) -> str:
        value = self._raw(key, default)
        return value if isinstance(value, str) else value

    def get_int(self, key, default=None) -> int:
        value = self._raw(key, default)
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                raise ConfigError(f"{self.source}: key '{key}' is not an integer: {value!r}") from None
        return value

    def get_float(self, key, default=None) -> float:
        value = self._raw(key, default)
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                raise ConfigError(f"{self.source}: key '{key}' is not a number: {value!r}") from None
        return value

    def get_bool(self, key, default=None) -> bool:
        value = self._raw(key, default)
        if isinstance(value, str):
            if value.lower() not in _BOOL:
                raise ConfigError(f"{self.source}: key '{key}' is not on/off: {value!r}")
            return _BOOL[value.lower()]
        return value

    def get_floats(self, key, default=None) -> tuple:
        value = self._raw(key, default)
        if isinstance(value, str):
            try:
                return tuple(float(v) for v in value.split(",") if v.strip() != "")
            except ValueError:
                raise ConfigError(f"{self.source}: key '{key}' is not a number list: {value!r}") from None
        return tuple(value)

    def get_ints(self, key, default=None) -> tuple:
        value = self._raw(key, default)
        if isinstance(value, str):
            try:
                return tuple(int(v) for v in value.split(",") if v.strip() != "")
            except ValueError:
                raise ConfigError(f"{self.source}: key '{key}' is not an integer list: {value!r}") from None
        return tuple(value)

    def get_choice(self, key, choices, default=None) -> str:
        value = self._raw(key, default)
        if value not in choices:
            raise ConfigError(
                f"{self.source}: key '{key}' must be one of {sorted(choices)}, got {value!r}"
            )
        return value

    def reject_unknown(self) -> None:
        """Raise for keys never consulted by the command; names the first."""
        unknown = sorted(set(self.pairs) - self._seen)
        if unknown:
            raise ConfigError(f"{self.source}: unknown key '{unknown[0]}'")


_REQUIRED = object()
REQUIRED = _REQUIRED


def parse_config_text(text: str, source: str = "<config>") -> Config:
    pairs: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not _KEY_RE.match(key):
            raise ConfigError(f"{source}:{lineno}: malformed line, expected 'key = value': {raw!r}")
        if key in pairs:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        pairs[key] = value.strip()
    return Config(pairs, source)


def load_config(path) -> Config:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))
