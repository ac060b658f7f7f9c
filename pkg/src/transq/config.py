"""Scenario and sweep configuration files.

Configs are INI-style text read with :mod:`configparser`. Numeric fields take
a scalar or a comma-separated list with one entry per interval. See
``configs/schema.txt`` for every section and key.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .distribution import EPS_MASS, QueueDistribution
from .errors import ConfigurationError
from .kernel import EPS_QUAD, EPS_TAIL
from .randomized import DurationDistribution, RandomInterval, RandomizedSchedule
from .schedule import Interval, RateSchedule, make_high_low, make_on_off, make_restless

MODELS = {
    "on_off": ("lambda_on", "t_on", "t_off", "mu"),
    "high_low": ("lambda_high", "lambda_low", "t_high", "t_low", "mu"),
    "restless": ("lambda", "mu", "t_interval"),
    "explicit": ("t_active", "t_inactive", "lambda_active", "lambda_inactive", "mu"),
}

_DELTA = re.compile(r"^delta\(\s*(\d+)\s*\)$")
_LAW = re.compile(r"(\w+)\(([^)]*)\)")


def _fmt(x):
    x = float(x)
    return repr(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)


def _fmt_values(values):
    return ", ".join(_fmt(v) for v in values)


def _parse_numbers(section, key, text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigurationError(f"[{section}] {key}: expected a number or comma list, got {text!r}") from None


def _parse_int(section, key, text):
    try:
        value = int(text)
    except ValueError:
        raise ConfigurationError(f"[{section}] {key}: expected an integer, got {text!r}") from None
    return value


def _parse_laws(section, key, text):
    found = _LAW.findall(text)
    if not found or _LAW.sub("", text).replace(",", "").strip():
        raise ConfigurationError(f"[{section}] {key}: expected laws like exponential(0.5), got {text!r}")
    try:
        return tuple(DurationDistribution(kind, tuple(float(p) for p in args.split(",") if p.strip()))
                     for kind, args in found)
    except (ValueError, ConfigurationError) as exc:
        raise ConfigurationError(f"[{section}] {key}: {exc}") from None


def _expand(values, K, section, key):
    if len(values) == 1:
        return values * K
    if len(values) != K:
        raise ConfigurationError(f"[{section}] {key}: {len(values)} entries, expected 1 or {K}")
    return values


@dataclass(frozen=True)
class ScenarioConfig:
    """A single scenario: traffic model, threshold, initial law and tolerances.

    ``params`` maps each key of the model's section to a tuple of values
    (length 1 or ``intervals``).
    """

    traffic_model: str
    intervals: int
    q_th: int
    params: tuple
    initial: tuple = ("delta", 0)
    durations_active: tuple = ()
    durations_inactive: tuple = ()
    eps_mass: float = EPS_MASS
    eps_tail: float = EPS_TAIL
    eps_quad: float = EPS_QUAD
    grid_density: int = 10

    def __post_init__(self):
        if self.traffic_model not in MODELS:
            raise ConfigurationError(f"[scenario] traffic_model: unknown model {self.traffic_model!r}")
        if self.intervals < 1:
            raise ConfigurationError("[scenario] intervals: must be positive")
        if self.q_th < 0:
            raise ConfigurationError("[scenario] q_th: must be nonnegative")
        if self.grid_density < 1:
            raise ConfigurationError("[grid] density: must be positive")
        keys = tuple(k for k, _ in self.params)
        if keys != MODELS[self.traffic_model]:
            raise ConfigurationError(f"[{self.traffic_model}] expected keys {MODELS[self.traffic_model]}")
        for key, values in self.params:
            _expand(values, self.intervals, self.traffic_model, key)
        for name in ("durations_active", "durations_inactive"):
            laws = getattr(self, name)
            if laws:
                _expand(laws, self.intervals, "durations", name.split("_")[1])
        if bool(self.durations_active) != bool(self.durations_inactive):
            raise ConfigurationError("[durations] give both active and inactive laws")

    @property
    def randomized(self):
        return bool(self.durations_active)

    def param(self, key):
        return _expand(dict(self.params)[key], self.intervals, self.traffic_model, key)

    def schedule(self):
        K = self.intervals
        p = {key: list(self.param(key)) for key in MODELS[self.traffic_model]}
        if self.traffic_model == "on_off":
            return make_on_off(K, p["lambda_on"], p["t_on"], p["t_off"], p["mu"])
        if self.traffic_model == "high_low":
            return make_high_low(K, p["lambda_high"], p["lambda_low"], p["t_high"], p["t_low"], p["mu"])
        if self.traffic_model == "restless":
            return make_restless(K, p["lambda"], p["mu"], p["t_interval"])
        return RateSchedule(Interval(*(p[key][i] for key in MODELS["explicit"])) for i in range(K))

    def randomized_schedule(self):
        """Schedule with the configured duration laws replacing the fixed lengths."""
        sched = self.schedule()
        act = _expand(self.durations_active, self.intervals, "durations", "active")
        ina = _expand(self.durations_inactive, self.intervals, "durations", "inactive")
        return RandomizedSchedule(
            RandomInterval(act[i], ina[i], iv.lambda_active, iv.lambda_inactive, iv.mu)
            for i, iv in enumerate(sched.intervals))

    def initial_distribution(self):
        if self.initial[0] == "delta":
            return QueueDistribution.delta(self.initial[1])
        return QueueDistribution.from_probs(self.initial[1])

    def to_ini(self):
        """Serialize to config text that parses back to an equal object."""
        lines = ["[scenario]", f"traffic_model = {self.traffic_model}",
                 f"intervals = {self.intervals}", f"q_th = {self.q_th}", "",
                 f"[{self.traffic_model}]"]
        lines += [f"{key} = {_fmt_values(values)}" for key, values in self.params]
        lines += ["", "[initial]"]
        if self.initial[0] == "delta":
            lines.append(f"distribution = delta({self.initial[1]})")
        else:
            lines.append(f"distribution = {_fmt_values(self.initial[1])}")
        if self.randomized:
            lines += ["", "[durations]",
                      f"active = {', '.join(str(d) for d in self.durations_active)}",
                      f"inactive = {', '.join(str(d) for d in self.durations_inactive)}"]
        lines += ["", "[tolerances]", f"eps_mass = {self.eps_mass!r}",
                  f"eps_tail = {self.eps_tail!r}", f"eps_quad = {self.eps_quad!r}",
                  "", "[grid]", f"density = {self.grid_density}", ""]
        return "\n".join(lines)


@dataclass(frozen=True)
class SweepSpec:
    """Grid over ``lambda_on`` x ``t_on`` for the on-off model.

    ``mu`` holds one value or one value per interval of the longest run.
    """

    lambda_on: tuple
    t_on: tuple
    t_off: float
    mu: tuple
    q_th: tuple
    intervals: tuple
    initial: tuple = ("delta", 0)
    eps_mass: float = EPS_MASS
    eps_tail: float = EPS_TAIL
    eps_quad: float = EPS_QUAD

    def __post_init__(self):
        for name in ("lambda_on", "t_on", "q_th", "intervals"):
            if not getattr(self, name):
                raise ConfigurationError(f"[sweep] {name}: axis is empty")
        if min(self.intervals) < 1 or min(self.q_th) < 0:
            raise ConfigurationError("[sweep] intervals must be positive and q_th nonnegative")
        _expand(self.mu, max(self.intervals), "sweep", "mu")

    def cells(self):
        """Axis combinations in output row order."""
        return [(lam, t_on, q, K) for lam in self.lambda_on for t_on in self.t_on
                for q in self.q_th for K in self.intervals]

    def scenario(self, lambda_on, t_on, q_th, intervals):
        """Stand-alone scenario equivalent to one sweep cell."""
        mu = _expand(self.mu, max(self.intervals), "sweep", "mu")[:intervals]
        return ScenarioConfig(
            "on_off", int(intervals), int(q_th),
            (("lambda_on", (lambda_on,)), ("t_on", (t_on,)), ("t_off", (self.t_off,)),
             ("mu", tuple(mu) if len(set(mu)) > 1 else (mu[0],))),
            initial=self.initial, eps_mass=self.eps_mass, eps_tail=self.eps_tail,
            eps_quad=self.eps_quad)


def _read(text, source):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from None
    return parser


def _get(parser, section, key, default=None):
    if not parser.has_section(section):
        if default is None:
            raise ConfigurationError(f"missing section [{section}]")
        return default
    value = parser.get(section, key, fallback=None)
    if value is None:
        if default is None:
            raise ConfigurationError(f"[{section}] missing key {key!r}")
        return default
    return value.strip()


def _parse_initial(parser):
    text = _get(parser, "initial", "distribution", "delta(0)")
    m = _DELTA.match(text)
    if m:
        return ("delta", int(m.group(1)))
    return ("explicit", _parse_numbers("initial", "distribution", text))


def _parse_tolerances(parser):
    return {key: _parse_numbers("tolerances", key, _get(parser, "tolerances", key, repr(default)))[0]
            for key, default in (("eps_mass", EPS_MASS), ("eps_tail", EPS_TAIL), ("eps_quad", EPS_QUAD))}


def parse_scenario(text, source="<config>"):
    parser = _read(text, source)
    model = _get(parser, "scenario", "traffic_model")
    if model not in MODELS:
        raise ConfigurationError(f"[scenario] traffic_model: unknown model {model!r}")
    extra = [s for s in MODELS if s != model and parser.has_section(s)]
    if extra:
        raise ConfigurationError(f"[scenario] exactly one traffic model allowed, also found {extra}")
    intervals = _parse_int("scenario", "intervals", _get(parser, "scenario", "intervals"))
    q_th = _parse_int("scenario", "q_th", _get(parser, "scenario", "q_th"))
    params = tuple((key, _parse_numbers(model, key, _get(parser, model, key))) for key in MODELS[model])
    unknown = set(parser[model]) - set(MODELS[model])
    if unknown:
        raise ConfigurationError(f"[{model}] unknown keys {sorted(unknown)}")
    act = ina = ()
    if parser.has_section("durations"):
        act = _parse_laws("durations", "active", _get(parser, "durations", "active"))
        ina = _parse_laws("durations", "inactive", _get(parser, "durations", "inactive"))
    return ScenarioConfig(
        traffic_model=model,
        intervals=intervals, q_th=q_th,
        params=params, initial=_parse_initial(parser),
        durations_active=act, durations_inactive=ina,
        grid_density=_parse_int("grid", "density", _get(parser, "grid", "density", "10")),
        **_parse_tolerances(parser))


def parse_sweep(text, source="<config>"):
    parser = _read(text, source)
    nums = {key: _parse_numbers("sweep", key, _get(parser, "sweep", key))
            for key in ("lambda_on", "t_on", "t_off", "mu", "q_th", "intervals")}
    for key in ("q_th", "intervals"):
        if any(not v.is_integer() for v in nums[key]):
            raise ConfigurationError(f"[sweep] {key}: values must be integers")
    return SweepSpec(
        lambda_on=nums["lambda_on"], t_on=nums["t_on"], t_off=nums["t_off"][0], mu=nums["mu"],
        q_th=tuple(int(v) for v in nums["q_th"]), intervals=tuple(int(v) for v in nums["intervals"]),
        initial=_parse_initial(parser), **_parse_tolerances(parser))


def is_sweep(text):
    return _read(text, "<config>").has_section("sweep")


def bundled_configs():
    """Names of the example configs shipped with the package."""
    root = resources.files("transq") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def load_text(path_or_name):
    """Read a config from a path, or from the bundled set by bare name."""
    path = Path(path_or_name)
    if path.exists():
        return path.read_text(), str(path)
    name = str(path_or_name)
    bundled = resources.files("transq") / "configs" / f"{name}.ini"
    if bundled.is_file():
        return bundled.read_text(), f"{name}.ini"
    raise ConfigurationError(f"no config file {path_or_name!r} (bundled: {', '.join(bundled_configs())})")

