"""Run configuration: INI-style text with flat sections and strict keys.

Example::

    [run]
    command = run-flow
    seed = 0

    [geometry]
    kind = sphere2

    [initial]
    selector = perturbed-latitude(0.8, 0.1, 8)

    [flow]
    alpha = 1
    beta = 1

    [stepper]
    m = 128
    t_end = 0.2

Comments start with ``#`` or ``;`` (inline comments need a space before
them).  Unknown sections or keys are rejected with the offending line number.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, replace

from .flow import FlowParams, StepperConfig
from .scalarpde import ScalarParams

COMMANDS = (
    "run-flow",
    "run-scalar",
    "run-filament",
    "hasimoto-compare",
    "epsilon-study",
    "identity-check",
    "convergence",
)


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# section -> key -> (type, default)
SCHEMA = {
    "run": {
        "command": (str, "run-flow"),
        "seed": (int, 0),
        "output": (str, "saflow-out"),
    },
    "geometry": {
        "kind": (str, "sphere2"),
        "n": (int, 1),
        "c": (float, 4.0),
    },
    "initial": {
        "selector": (str, "great-circle"),
    },
    "flow": {
        "alpha": (float, 1.0),
        "beta": (float, 1.0),
        "gamma": (float, 0.0),
        "epsilon": (float, 0.0),
    },
    "scalar": {
        "alpha": (float, 1.0),
        "beta": (float, 0.0),
        "gamma": (float, 0.0),
        "k": (float, None),
    },
    "stepper": {
        "m": (int, 128),
        "t_end": (float, 0.1),
        "dt": (float, None),
        "snapshot_stride": (int, 1000),
        "energy_stride": (int, 100),
        "allow_unstable_dt": (bool, False),
    },
    "study": {
        "samples": (int, 1000),
        "epsilons": (list, (1e-2, 1e-3, 1e-4)),
        "dt_factors": (list, (1.0, 0.5, 0.25)),
        "workers": (int, 1),
        "tolerance": (float, None),
    },
}


@dataclass(frozen=True)
class RunConfig:
    command: str = "run-flow"
    seed: int = 0
    output: str = "saflow-out"
    geometry: str = "sphere2"
    geometry_params: tuple = ()
    initial: str = "great-circle"
    flow: FlowParams = field(default_factory=lambda: FlowParams(1.0, 1.0))
    scalar: ScalarParams = field(default_factory=lambda: ScalarParams(1.0))
    scalar_k_given: bool = False
    m: int = 128
    stepper: StepperConfig = field(default_factory=lambda: StepperConfig(0.1))
    samples: int = 1000
    epsilons: tuple = (1e-2, 1e-3, 1e-4)
    dt_factors: tuple = (1.0, 0.5, 0.25)
    workers: int = 1
    tolerance: float | None = None

    def with_overrides(self, output=None, seed=None, command=None):
        kw = {}
        if output is not None:
            kw["output"] = output
        if seed is not None:
            kw["seed"] = int(seed)
        if command is not None:
            if command not in COMMANDS:
                raise ConfigError(f"unknown command {command!r}")
            kw["command"] = command
        return replace(self, **kw)

    def geometry_kwargs(self):
        return dict(self.geometry_params)

    def resolved_lines(self):
        """The full configuration, one ``section.key = value`` per line, in fixed order.

        The output directory is left out so that artifacts do not depend on
        where they were written.
        """
        st = self.stepper
        items = [
            ("run.command", self.command),
            ("run.seed", self.seed),
            ("geometry.kind", self.geometry),
        ]
        items += [(f"geometry.{k}", v) for k, v in self.geometry_params]
        items += [
            ("initial.selector", self.initial),
            ("flow.alpha", self.flow.alpha),
            ("flow.beta", self.flow.beta),
            ("flow.gamma", self.flow.gamma),
            ("flow.epsilon", self.flow.epsilon),
            ("scalar.alpha", self.scalar.alpha),
            ("scalar.beta", self.scalar.beta),
            ("scalar.gamma", self.scalar.gamma),
            ("scalar.k", self.scalar.K if self.scalar_k_given else "geometry"),
            ("stepper.m", self.m),
            ("stepper.t_end", st.t_end),
            ("stepper.dt", "stability" if st.dt is None else st.dt),
            ("stepper.snapshot_stride", st.snapshot_stride),
            ("stepper.energy_stride", st.energy_stride),
            ("stepper.allow_unstable_dt", st.allow_unstable_dt),
            ("study.samples", self.samples),
            ("study.epsilons", ", ".join(repr(e) for e in self.epsilons)),
            ("study.dt_factors", ", ".join(repr(f) for f in self.dt_factors)),
            ("study.workers", self.workers),
            ("study.tolerance", "default" if self.tolerance is None else self.tolerance),
        ]
        return [f"{k} = {v}" for k, v in items]

    def as_dict(self):
        out = {}
        for line in self.resolved_lines():
            k, v = line.split(" = ", 1)
            out[k] = v
        return out


_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_index(text):
    """(section, key) -> 1-based line number, plus section -> line."""
    keys, sections = {}, {}
    current = None
    for no, line in enumerate(text.splitlines(), start=1):
        if line.strip().startswith(("#", ";")) or not line.strip():
            continue
        ms = _SECTION_RE.match(line)
        if ms:
            current = ms.group(1).strip().lower()
            sections.setdefault(current, no)
            continue
        mk = _KEY_RE.match(line)
        if mk and current is not None and not line[:1].isspace():
            keys.setdefault((current, mk.group(1).strip().lower()), no)
    return keys, sections


def _convert(kind, raw, where, line):
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError(raw)
            return v
        if kind is list:
            return tuple(float(v) for v in raw.replace(";", ",").split(",") if v.strip())
        return raw
    except ValueError:
        raise ConfigError(f"{where}: cannot read {raw!r} as {kind.__name__}", line) from None


def parse_config(text):
    """Parse and validate configuration text into a :class:`RunConfig`."""
    parser = configparser.ConfigParser(
        interpolation=None, default_section="__none__", strict=True, inline_comment_prefixes=("#", ";")
    )
    parser.optionxform = str.lower
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any [section]", exc.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", line) from None

    key_lines, section_lines = _line_index(text)
    values = {}
    for section in parser.sections():
        sec = section.lower()
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", section_lines.get(sec))
        for key, raw in parser.items(section):
            line = key_lines.get((sec, key))
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line)
            values[(sec, key)] = (_convert(SCHEMA[sec][key][0], raw, f"{sec}.{key}", line), line)

    def get(sec, key):
        if (sec, key) in values:
            return values[(sec, key)][0]
        return SCHEMA[sec][key][1]

    def line_of(sec, key):
        return values.get((sec, key), (None, None))[1]

    command = get("run", "command").strip().lower()
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}", line_of("run", "command"))

    try:
        flow = FlowParams(get("flow", "alpha"), get("flow", "beta"), get("flow", "gamma"), get("flow", "epsilon"))
    except ValueError as exc:
        bad = "epsilon" if "epsilon" in str(exc) else "alpha"
        raise ConfigError(f"flow: {exc}", line_of("flow", bad)) from None

    kval = get("scalar", "k")
    scalar = ScalarParams(get("scalar", "alpha"), get("scalar", "beta"), get("scalar", "gamma"), kval or 0.0)

    t_end = get("stepper", "t_end")
    if t_end < 0:
        raise ConfigError("stepper.t_end must be >= 0", line_of("stepper", "t_end"))
    dt = get("stepper", "dt")
    if dt is not None and dt <= 0:
        raise ConfigError("stepper.dt must be > 0", line_of("stepper", "dt"))
    m = get("stepper", "m")
    if m < 16 or m & (m - 1):
        raise ConfigError("stepper.m must be a power of two >= 16", line_of("stepper", "m"))
    for key in ("snapshot_stride", "energy_stride"):
        if get("stepper", key) < 1:
            raise ConfigError(f"stepper.{key} must be a positive integer", line_of("stepper", key))
    stepper = StepperConfig(
        t_end=t_end,
        dt=dt,
        snapshot_stride=get("stepper", "snapshot_stride"),
        energy_stride=get("stepper", "energy_stride"),
        allow_unstable_dt=get("stepper", "allow_unstable_dt"),
    )

    geometry = get("geometry", "kind").strip().lower()
    gparams = ()
    if geometry.replace("-", "_") in ("holomorphic_space_form", "space_form"):
        n = get("geometry", "n")
        if n < 1:
            raise ConfigError("geometry.n must be >= 1", line_of("geometry", "n"))
        gparams = (("n", n), ("c", get("geometry", "c")))

    epsilons = get("study", "epsilons")
    if any(e < 0 for e in epsilons):
        raise ConfigError("study.epsilons must be >= 0", line_of("study", "epsilons"))
    factors = get("study", "dt_factors")
    if len(factors) < 2 or any(f <= 0 for f in factors):
        raise ConfigError("study.dt_factors needs at least two positive entries", line_of("study", "dt_factors"))
    if get("study", "samples") < 1:
        raise ConfigError("study.samples must be positive", line_of("study", "samples"))
    if get("study", "workers") < 1:
        raise ConfigError("study.workers must be positive", line_of("study", "workers"))

    return RunConfig(
        command=command,
        seed=get("run", "seed"),
        output=get("run", "output"),
        geometry=geometry,
        geometry_params=gparams,
        initial=get("initial", "selector"),
        flow=flow,
        scalar=scalar,
        scalar_k_given=kval is not None,
        m=m,
        stepper=stepper,
        samples=get("study", "samples"),
        epsilons=tuple(epsilons),
        dt_factors=tuple(factors),
        workers=get("study", "workers"),
        tolerance=get("study", "tolerance"),
    )


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())
