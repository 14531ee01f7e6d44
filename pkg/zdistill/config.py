#!/usr/bin/env python3
"""
zdistill.config - flat key = value run configuration

Example file::

    # qubit run at a solved point
    model = qubit
    x = 2.6
    y = 1.4023
    z = 4.1088
    n_iterations = 200
    output = "runs/qubit"

Values are type-inferred (int, float, bool, quoted or bare string); ``pi``
multiples such as ``pi/2`` or ``0.5*pi`` are accepted for numeric keys and
comma-separated values become tuples.

Author: Development Team
Version: 0.1.0
"""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple, Union
import logging
import math
import re

from .cavity import CavityParams, DEFAULT_K_MAX
from .errors import ConfigError, InvariantViolationError
from .qubit import DEFAULT_Y_MAX, QubitParams

logger = logging.getLogger(__name__)

MODELS = ("qubit", "cavity")
NAMED_STATES = ("maximally-mixed", "vacuum-prepared")
DEFAULT_SEED = 42
DEFAULT_OUTPUT = "zdistill"
DEFAULT_X_GRID = (2.6, 2.8, 3.0)

PARAM_KEYS = ("omega", "g_A", "g_B", "t_A", "t_B", "tau_A", "tau_B", "t_prep", "x", "y", "z", "y_max")
INT_KEYS = ("n_iterations", "seed", "k_max", "prep_reps")
KNOWN_KEYS = ("model", "protocol", "initial_state", "output", "x_grid") + PARAM_KEYS + INT_KEYS


# ============================================================================
# Value Parsing & Type Inference
# ============================================================================

PI_PATTERN = re.compile(
    r'^(?P<coef>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*pi'
    r'(?:\s*/\s*(?P<den>\d+(?:\.\d*)?))?$'
)


def parse_value(value_str: str) -> Union[int, float, str, bool, Tuple[Any, ...]]:
    """
    Parse value string with type inference.

    Args:
        value_str: Right-hand side of a config line

    Returns:
        Typed value (int, float, bool, str, or a tuple of those)

    Examples:
        >>> parse_value("42")
        42
        >>> parse_value("1e-3")
        0.001
        >>> parse_value("pi/2")
        1.5707963267948966
        >>> parse_value("2.6, 2.8")
        (2.6, 2.8)
        >>> parse_value('"runs/a"')
        'runs/a'
    """
    value_str = value_str.strip()

    if (value_str.startswith('"') and value_str.endswith('"') and len(value_str) >= 2) or \
       (value_str.startswith("'") and value_str.endswith("'") and len(value_str) >= 2):
        return value_str[1:-1]

    if ',' in value_str:
        return tuple(parse_value(part) for part in value_str.split(',') if part.strip())

    if value_str.lower() == 'true':
        return True
    if value_str.lower() == 'false':
        return False

    try:
        return int(value_str)
    except ValueError:
        pass
    try:
        return float(value_str)
    except ValueError:
        pass

    match = PI_PATTERN.match(value_str)
    if match:
        coef = float(match.group('coef')) if match.group('coef') else 1.0
        den = float(match.group('den')) if match.group('den') else 1.0
        return coef * math.pi / den

    return value_str


# ============================================================================
# Run configuration
# ============================================================================

@dataclass
class RunConfig:
    """A parsed run configuration."""
    model: str = "qubit"
    protocol: Optional[str] = None
    initial_state: Union[str, Tuple[float, ...]] = "maximally-mixed"
    n_iterations: int = 100
    output: str = DEFAULT_OUTPUT
    seed: int = DEFAULT_SEED
    k_max: int = DEFAULT_K_MAX
    prep_reps: int = 40
    x_grid: Tuple[float, ...] = DEFAULT_X_GRID
    params: Dict[str, float] = field(default_factory=dict)
    source: Optional[str] = None

    @property
    def protocol_name(self) -> str:
        """Protocol source, defaulting to the model's builtin cycle."""
        if self.protocol:
            return self.protocol
        return "wp" if self.model == "qubit" else "wp2"

    @property
    def y_max(self) -> float:
        return self.params.get("y_max", DEFAULT_Y_MAX)

    def qubit_params(self) -> QubitParams:
        """
        QubitParams from either the x, y, z shorthand or explicit fields.

        Raises:
            ConfigError: If required keys are missing or values are invalid
        """
        try:
            if all(key in self.params for key in ("x", "y", "z")):
                return QubitParams.from_dimensionless(self.params["x"], self.params["y"], self.params["z"])
            missing = [key for key in ("omega", "g_A", "t_A") if key not in self.params]
            if missing:
                raise ConfigError("qubit model needs x, y, z or omega, g_A, t_A",
                                  [f"missing key '{key}'" for key in missing])
            g_A, t_A, tau_A = self.params["g_A"], self.params["t_A"], self.params.get("tau_A", 0.0)
            return QubitParams(
                omega=self.params["omega"], g_A=g_A, t_A=t_A, tau_A=tau_A,
                g_B=self.params.get("g_B", g_A), t_B=self.params.get("t_B", t_A),
                tau_B=self.params.get("tau_B", tau_A),
            )
        except InvariantViolationError as e:
            raise ConfigError(f"invalid qubit parameters: {e}") from e

    def cavity_params(self) -> CavityParams:
        """
        CavityParams from explicit fields; tau_A and tau_B default to 0.

        Raises:
            ConfigError: If required keys are missing or values are invalid
        """
        missing = [key for key in ("omega", "g_A", "g_B", "t_A", "t_B") if key not in self.params]
        if missing:
            raise ConfigError("cavity model needs omega, g_A, g_B, t_A, t_B",
                              [f"missing key '{key}'" for key in missing])
        try:
            return CavityParams(
                omega=self.params["omega"],
                g_A=self.params["g_A"], g_B=self.params["g_B"],
                t_A=self.params["t_A"], t_B=self.params["t_B"],
                tau_A=self.params.get("tau_A", 0.0), tau_B=self.params.get("tau_B", 0.0),
                k_max=self.k_max, t_prep=self.params.get("t_prep"),
            )
        except InvariantViolationError as e:
            raise ConfigError(f"invalid cavity parameters: {e}") from e

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Copy with non-None overrides applied (CLI flags)."""
        return replace(self, **{key: value for key, value in overrides.items() if value is not None})

    def to_dict(self) -> Dict[str, Any]:
        state = self.initial_state if isinstance(self.initial_state, str) else list(self.initial_state)
        return {
            "model": self.model,
            "protocol": self.protocol_name,
            "initial_state": state,
            "n_iterations": self.n_iterations,
            "seed": self.seed,
            "k_max": self.k_max,
            "prep_reps": self.prep_reps,
            "params": dict(sorted(self.params.items())),
        }

    def __repr__(self):
        return f"RunConfig(model={self.model!r}, protocol={self.protocol_name!r}, N={self.n_iterations})"


class ConfigParser:
    """
    Parses flat ``key = value`` configuration text.

    Errors are collected with their line numbers and raised together.
    """

    LINE_PATTERN = re.compile(r'^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$')
    COMMENT_PATTERN = re.compile(r'\s+#.*$')

    def __init__(self):
        self.errors: List[str] = []

    def parse(self, text: str, source: Optional[str] = None) -> RunConfig:
        """
        Parse configuration text.

        Args:
            text: Configuration content
            source: File name, used in messages

        Returns:
            RunConfig

        Raises:
            ConfigError: Listing every problem found
        """
        self.errors = []
        config = RunConfig(source=source)
        seen: Dict[str, int] = {}

        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            match = self.LINE_PATTERN.match(self.COMMENT_PATTERN.sub('', line))
            if not match:
                self.errors.append(f"line {number}: expected 'key = value', got {line!r}")
                continue
            key, value_str = match.group(1), match.group(2)
            if key not in KNOWN_KEYS:
                self.errors.append(f"line {number}: unknown key '{key}'")
                continue
            if key in seen:
                self.errors.append(f"line {number}: duplicate key '{key}' (first on line {seen[key]})")
                continue
            seen[key] = number
            self._assign(config, key, parse_value(value_str), number)

        if config.model not in MODELS:
            self.errors.append(f"model must be one of {', '.join(MODELS)}, got '{config.model}'")
        if config.initial_state == "vacuum-prepared" and config.model != "cavity":
            self.errors.append("initial_state 'vacuum-prepared' needs model = cavity")

        if self.errors:
            label = source or "<config>"
            raise ConfigError(f"{label}: {len(self.errors)} configuration error(s)", list(self.errors))
        logger.debug("parsed %r", config)
        return config

    def _assign(self, config: RunConfig, key: str, value: Any, number: int) -> None:
        if key in INT_KEYS:
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                self.errors.append(f"line {number}: {key} must be a non-negative integer, got {value!r}")
                return
            setattr(config, key, value)
        elif key in PARAM_KEYS:
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                self.errors.append(f"line {number}: {key} must be a finite number, got {value!r}")
                return
            config.params[key] = float(value)
        elif key == "x_grid":
            values = value if isinstance(value, tuple) else (value,)
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
                self.errors.append(f"line {number}: x_grid must be a list of numbers, got {value!r}")
                return
            config.x_grid = tuple(float(v) for v in values)
        elif key == "initial_state":
            self._assign_state(config, value, number)
        else:
            if not isinstance(value, str) or not value:
                self.errors.append(f"line {number}: {key} must be a string, got {value!r}")
                return
            setattr(config, key, value)

    def _assign_state(self, config: RunConfig, value: Any, number: int) -> None:
        if isinstance(value, str):
            if value not in NAMED_STATES:
                self.errors.append(
                    f"line {number}: initial_state must be {' or '.join(NAMED_STATES)} or weights, got '{value}'")
                return
            config.initial_state = value
            return
        weights = value if isinstance(value, tuple) else (value,)
        if not all(isinstance(w, (int, float)) and not isinstance(w, bool) and w >= 0 for w in weights):
            self.errors.append(f"line {number}: initial_state weights must be non-negative numbers")
            return
        if sum(weights) <= 0:
            self.errors.append(f"line {number}: initial_state weights must not all vanish")
            return
        config.initial_state = tuple(float(w) for w in weights)


def parse_config(text: str, source: Optional[str] = None) -> RunConfig:
    """Convenience wrapper around ConfigParser."""
    return ConfigParser().parse(text, source)


def load_config(path: str) -> RunConfig:
    """
    Read and parse a configuration file.

    Raises:
        ConfigError: If the file cannot be read or does not parse
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except UnicodeDecodeError as e:
        raise ConfigError(f"config {path} is not valid UTF-8 ({e.reason} at byte {e.start})") from e
    return parse_config(text, source=path)
