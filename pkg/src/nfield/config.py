"""Run configuration: line-oriented dotted-key files, fully validated.

Format: one ``key = value`` pair per line, ``#`` comments, blank lines
ignored. Keys are dotted paths (``model.kernel.spatial.M``). Unknown keys
are hard errors so typos cannot silently fall back to defaults. Every
effective value, defaults included, is echoed into the run summary, so a
summary alone reproduces its run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import delays, kernels, prehistory, rates
from .grids import symmetric_interval
from .model import FieldModel
from .solver import SolverConfig


class ConfigError(ValueError):
    """Configuration problem, carrying the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _parse_scalar(path, raw, kind):
    raw = raw.strip()
    try:
        if kind is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError("expected a boolean")
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(path, f"cannot parse {raw!r} as {kind.__name__}") from exc


# schema: dotted key -> (type, default, validator or None)
def _positive(path, v):
    if not v > 0:
        raise ConfigError(path, f"must be positive, got {v}")


def _nonnegative(path, v):
    if v < 0:
        raise ConfigError(path, f"must be nonnegative, got {v}")


def _fraction(path, v):
    if not 0.0 < v < 1.0:
        raise ConfigError(path, f"must lie strictly between 0 and 1, got {v}")


_SCHEMA: dict[str, tuple] = {
    "command": (str, "solve", None),
    "seed": (int, 0, _nonnegative),

    "model.populations": (int, 1, _positive),
    "model.kernel.type": (str, "separable", None),
    "model.kernel.temporal.type": (str, "exponential", None),
    "model.kernel.temporal.rate": (float, 1.0, _positive),
    "model.kernel.temporal.scale": (float, 1.0, None),
    "model.kernel.temporal.alpha": (float, 1.0, _positive),
    "model.kernel.spatial.type": (str, "mexican_hat", None),
    "model.kernel.spatial.M": (float, 2.0, _positive),
    "model.kernel.spatial.m": (float, 2.0, _positive),
    "model.kernel.spatial.K": (float, 1.0, _positive),
    "model.kernel.spatial.k": (float, 1.0, _positive),
    "model.kernel.spatial.sigma": (float, 1.0, _positive),
    "model.kernel.spatial.scale": (float, 1.0, None),
    "model.rate.type": (str, "logistic", None),
    "model.rate.steepness": (float, 4.0, _positive),
    "model.rate.threshold": (float, 0.3, _positive),
    "model.delay.type": (str, "zero", None),
    "model.delay.velocity": (float, 1.0, _positive),
    "model.delay.tau0": (float, 0.0, _nonnegative),
    "model.prehistory.type": (str, "gaussian_bump", None),
    "model.prehistory.amplitude": (float, 1.0, None),
    "model.prehistory.width": (float, 1.0, _positive),
    "model.prehistory.baseline": (float, 0.0, None),
    "model.prehistory.value": (float, 0.0, None),
    "model.grid.radius": (float, 3.0, _positive),
    "model.grid.points": (int, 101, lambda p, v: _positive(p, v - 1)),

    "solver.q_target": (float, 0.5, _fraction),
    "solver.tol": (float, 1e-8, _positive),
    "solver.max_iter": (int, 200, _positive),
    "solver.delta_max": (float, 1.0, _positive),
    "solver.delta_min": (float, 2.0 ** -20, _positive),
    "solver.blowup_norm_threshold": (float, 1e4, _positive),
    "solver.horizon": (float, 2.0, _positive),
    "solver.time_step": (float, 0.01, _positive),
    "solver.origin": (float, 0.0, None),

    "sweep.family": (str, "delay_velocity", None),
    "sweep.count": (int, 8, _positive),
    "sweep.gamma": (float, 1.0, _positive),

    "oracle.name": (str, "example21", None),
    "oracle.lambda": (float, 0.0, _nonnegative),
    "oracle.amplitude": (float, 1.0, _positive),

    "validate.samples": (int, 200, _positive),
    "validate.severity": (str, "warn", None),
    "validate.decay_tol": (float, 1e-6, _positive),

    "output.directory": (str, "out", None),
    "output.precision": (int, 12, _positive),
}

_COMMANDS = ("solve", "sweep", "oracle", "validate")
_ENUMS = {
    "command": _COMMANDS,
    "model.kernel.type": ("separable",),
    "model.kernel.temporal.type": ("exponential", "alpha", "past_decay", "constant"),
    "model.kernel.spatial.type": ("mexican_hat", "wizard_hat", "gaussian",
                                  "excitatory_inhibitory", "zero"),
    "model.rate.type": ("hill", "tanh_sigmoid", "logistic"),
    "model.delay.type": ("zero", "transmission", "constant"),
    "model.prehistory.type": ("gaussian_bump", "constant"),
    "sweep.family": ("delay_velocity", "firing_steepness", "firing_threshold",
                     "kernel_amplitude", "prehistory_shift"),
    "oracle.name": ("example21", "example31", "zero_field", "piecewise_example21"),
    "validate.severity": ("warn", "fatal"),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def echo_lines(self) -> list[str]:
        return [f"config.{k} = {_format_value(v)}" for k, v in sorted(self.values.items())]


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate; unknown keys and range violations are errors."""
    values = dict()
    seen = set()
    any_content = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        any_content = True
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}", f"expected 'key = value', got {stripped!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(key, f"unknown configuration key (line {lineno})")
        if key in seen:
            raise ConfigError(key, f"duplicate key (line {lineno})")
        seen.add(key)
        kind, _, validator = _SCHEMA[key]
        val = _parse_scalar(key, raw, kind)
        if validator is not None:
            validator(key, val)
        if key in _ENUMS and val not in _ENUMS[key]:
            raise ConfigError(key, f"must be one of {_ENUMS[key]}, got {val!r}")
        values[key] = val
    if not any_content:
        raise ConfigError(source, "empty configuration")
    for key, (kind, default, _) in _SCHEMA.items():
        values.setdefault(key, default)
    cfg = RunConfig(values=values)
    _cross_validate(cfg)
    return cfg


def parse_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=path)


def parse_summary_config(text: str) -> RunConfig:
    """Rebuild a RunConfig from the ``config.`` lines a summary echoes."""
    lines = []
    for line in text.splitlines():
        if line.startswith("config."):
            lines.append(line[len("config."):])
    return parse_config_text("\n".join(lines), source="<summary>")


def apply_overrides(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    values = dict(cfg.values)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must be key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(key, "unknown configuration key in override")
        kind, _, validator = _SCHEMA[key]
        val = _parse_scalar(key, raw, kind)
        if validator is not None:
            validator(key, val)
        if key in _ENUMS and val not in _ENUMS[key]:
            raise ConfigError(key, f"must be one of {_ENUMS[key]}, got {val!r}")
        values[key] = val
    out = RunConfig(values=values)
    _cross_validate(out)
    return out


def _cross_validate(cfg: RunConfig):
    v = cfg.values
    if v["model.kernel.spatial.type"] == "mexican_hat":
        if not v["model.kernel.spatial.M"] > v["model.kernel.spatial.K"]:
            raise ConfigError("model.kernel.spatial.M",
                              "Mexican hat requires M > K > 0")
        if not v["model.kernel.spatial.m"] > v["model.kernel.spatial.k"]:
            raise ConfigError("model.kernel.spatial.m",
                              "Mexican hat requires m > k > 0")
    if v["model.populations"] not in (1, 2):
        raise ConfigError("model.populations", "only 1 or 2 populations are configurable")
    if v["model.populations"] == 2 and v["model.kernel.spatial.type"] != "excitatory_inhibitory":
        raise ConfigError("model.kernel.spatial.type",
                          "two populations need the excitatory_inhibitory spatial type")
    if v["solver.delta_min"] >= v["solver.delta_max"]:
        raise ConfigError("solver.delta_min", "must be smaller than solver.delta_max")
    if v["solver.horizon"] <= v["solver.origin"]:
        raise ConfigError("solver.horizon", "must exceed solver.origin")


# ---------------------------------------------------------------------------
# model construction
# ---------------------------------------------------------------------------

def _spatial_from(cfg: RunConfig) -> kernels.SpatialKernel:
    v = cfg.values
    kind = v["model.kernel.spatial.type"]
    if kind == "mexican_hat":
        return kernels.MexicanHat(M=v["model.kernel.spatial.M"], m=v["model.kernel.spatial.m"],
                                  K=v["model.kernel.spatial.K"], k=v["model.kernel.spatial.k"],
                                  scale=v["model.kernel.spatial.scale"])
    if kind == "wizard_hat":
        return kernels.WizardHat(M=v["model.kernel.spatial.M"], m=v["model.kernel.spatial.m"],
                                 scale=v["model.kernel.spatial.scale"])
    if kind == "gaussian":
        return kernels.GaussianKernel(sigma=v["model.kernel.spatial.sigma"],
                                      scale=v["model.kernel.spatial.scale"])
    if kind == "zero":
        return kernels.ZeroSpatial()
    raise ConfigError("model.kernel.spatial.type", f"unsupported spatial type {kind!r}")


def _temporal_from(cfg: RunConfig) -> kernels.TemporalKernel:
    v = cfg.values
    kind = v["model.kernel.temporal.type"]
    rate = v["model.kernel.temporal.rate"]
    scale = v["model.kernel.temporal.scale"]
    if kind == "exponential":
        return kernels.ExponentialDecay(rate=rate, scale=scale)
    if kind == "alpha":
        return kernels.AlphaDecay(rate=rate, scale=scale)
    if kind == "past_decay":
        return kernels.PastDecay(rate=rate, scale=scale)
    if kind == "constant":
        return kernels.ConstantMemory(value=scale)
    raise ConfigError("model.kernel.temporal.type", f"unsupported temporal type {kind!r}")


def _rate_from(cfg: RunConfig) -> rates.FiringRate:
    v = cfg.values
    kind = v["model.rate.type"]
    kappa, theta = v["model.rate.steepness"], v["model.rate.threshold"]
    try:
        if kind == "hill":
            return rates.Hill(steepness=kappa, threshold=theta)
        if kind == "tanh_sigmoid":
            return rates.TanhSigmoid(steepness=kappa, threshold=theta)
        if kind == "logistic":
            return rates.Logistic(steepness=kappa, threshold=theta)
    except ValueError as exc:
        raise ConfigError("model.rate", str(exc)) from exc
    raise ConfigError("model.rate.type", f"unsupported rate type {kind!r}")


def _delay_from(cfg: RunConfig) -> delays.DelayField:
    v = cfg.values
    kind = v["model.delay.type"]
    if kind == "zero":
        return delays.ZeroDelay()
    if kind == "transmission":
        return delays.TransmissionDelay(velocity=v["model.delay.velocity"])
    if kind == "constant":
        return delays.ConstantDelay(tau0=v["model.delay.tau0"])
    raise ConfigError("model.delay.type", f"unsupported delay type {kind!r}")


def _prehistory_from(cfg: RunConfig, populations: int) -> prehistory.Prehistory:
    v = cfg.values
    kind = v["model.prehistory.type"]
    if kind == "gaussian_bump":
        return prehistory.gaussian_bump(amplitude=v["model.prehistory.amplitude"],
                                        width=v["model.prehistory.width"],
                                        baseline=v["model.prehistory.baseline"],
                                        populations=populations)
    if kind == "constant":
        return prehistory.constant_profile(v["model.prehistory.value"],
                                           populations=populations)
    raise ConfigError("model.prehistory.type", f"unsupported prehistory type {kind!r}")


def build_model(cfg: RunConfig) -> FieldModel:
    v = cfg.values
    n = v["model.populations"]
    grid = symmetric_interval(v["model.grid.radius"], v["model.grid.points"])
    if n == 1:
        kernel = kernels.SeparableKernel(_temporal_from(cfg), _spatial_from(cfg))
    else:
        base = kernels.MexicanHat(M=v["model.kernel.spatial.M"], m=v["model.kernel.spatial.m"],
                                  K=v["model.kernel.spatial.K"], k=v["model.kernel.spatial.k"],
                                  scale=v["model.kernel.spatial.scale"])
        kernel = kernels.two_population_kernel(
            omega_ee=base, omega_ei=base, omega_ie=base, omega_ii=base,
            alpha=v["model.kernel.temporal.alpha"])
    rate = _rate_from(cfg)
    return FieldModel(kernel=kernel, rates=(rate,) * n, delay=_delay_from(cfg),
                      prehistory=_prehistory_from(cfg, n), grid=grid,
                      name="configured-model")


def build_solver_config(cfg: RunConfig) -> SolverConfig:
    v = cfg.values
    return SolverConfig(q_target=v["solver.q_target"], tol=v["solver.tol"],
                        max_iter=v["solver.max_iter"], delta_max=v["solver.delta_max"],
                        delta_min=v["solver.delta_min"],
                        blowup_norm_threshold=v["solver.blowup_norm_threshold"],
                        time_step=v["solver.time_step"])
