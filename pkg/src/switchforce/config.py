"""Scenario files: YAML sections mirroring the parameter types.

Every value is re-validated through the domain constructors on load, and
errors carry the file name and line of the offending entry.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError, SwitchforceError
from .model import (ControllerGains, Environment, EnvEstimates, RigidPlant, WristParams,
                    reduced_env)
from .sim import SimConfig
from .trajectory import ContactSchedule, TrajectorySpec, profile_from_dict

SIM_MODELS = ("rigid", "compliant", "reduced", "worst_case", "error")
COMMAND_SECTIONS = {
    "certify": ("plant", "environment", "gains"),
    "simulate": ("plant", "environment", "gains", "sim"),
    "design": ("plant", "environment", "gains", "design"),
    "traj": ("trajectory",),
}


@dataclass(frozen=True)
class SimSection:
    model: str
    config: SimConfig
    ic: tuple | None = None
    z0: object = None  # tuple or "random"
    disturbance: tuple | None = None  # (w1, w2) profiles
    output_every: int = 1


@dataclass(frozen=True)
class DesignSection:
    parameter: str
    lo: float
    hi: float
    tol: float
    sweep_points: int = 64


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    plant: RigidPlant | None = None
    environment: Environment | None = None
    gains: ControllerGains | None = None
    estimates: EnvEstimates | None = None
    wrist: WristParams | None = None
    trajectory: TrajectorySpec | None = None
    sim: SimSection | None = None
    design: DesignSection | None = None

    def require(self, command):
        missing = [s for s in COMMAND_SECTIONS[command] if getattr(self, s) is None]
        if command == "simulate" and self.sim is not None:
            if self.sim.model in ("compliant", "reduced") and self.wrist is None:
                missing.append("wrist")
            if self.sim.model in ("rigid", "compliant", "reduced", "error") and self.trajectory is None:
                missing.append("trajectory")
        if command == "design" and self.design is not None:
            if self.design.parameter == "b_t" and self.wrist is None:
                missing.append("wrist")
        if missing:
            raise ConfigError(f"scenario {self.name!r}: command {command!r} needs missing "
                              f"section(s): {', '.join(missing)}")

    def contact_env(self):
        """Environment seen by the arm: through the wrist when one is fitted."""
        return self.environment if self.wrist is None else reduced_env(self.wrist, self.environment)

    def to_dict(self):
        d = {"name": self.name}
        for key in ("plant", "environment", "gains", "estimates", "wrist"):
            v = getattr(self, key)
            if v is not None:
                d[key] = dataclasses.asdict(v)
        if self.trajectory is not None:
            tr = self.trajectory
            d["trajectory"] = {
                "t_start": tr.t_start, "t_end": tr.t_end,
                "gamma1": tr.gamma1, "gamma2": tr.gamma2,
                "x0": tr.x0, "v0": tr.v0, "step": tr.step,
                "contact": [list(iv) for iv in tr.schedule.intervals],
                "x_free": tr.x_free.as_dict(),
                "F_contact": tr.F_contact.as_dict(),
            }
        if self.sim is not None:
            s = self.sim
            c = s.config
            d["sim"] = {"model": s.model, "step": c.step, "event_tol": c.event_tol,
                        "min_event_sep": c.min_event_sep, "horizon": c.horizon, "t0": c.t0,
                        "output_every": s.output_every,
                        "ic": None if s.ic is None else list(s.ic),
                        "z0": s.z0 if s.z0 is None or isinstance(s.z0, str) else list(s.z0)}
            if s.disturbance is not None:
                d["sim"]["disturbance"] = {"w1": s.disturbance[0].as_dict(),
                                           "w2": s.disturbance[1].as_dict()}
        if self.design is not None:
            d["design"] = dataclasses.asdict(self.design)
        return d

    def dump(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


# ---------------------------------------------------------------- loading

def _marks(node, path=(), out=None):
    """Map key paths to 1-based source lines."""
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            _marks(v, path + (k.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _marks(v, path + (i,), out)
    return out


class _Reader:
    def __init__(self, data, marks, source):
        self.data = data
        self.marks = marks
        self.source = source

    def where(self, path):
        p = tuple(path)
        while p and p not in self.marks:
            p = p[:-1]
        return f"{self.source}:{self.marks.get(p, 1)}"

    def fail(self, path, msg):
        raise ConfigError(f"{self.where(path)}: {'.'.join(map(str, path)) or '<root>'}: {msg}")

    def section(self, key, required=False):
        v = self.data.get(key)
        if v is None:
            if required:
                raise ConfigError(f"{self.source}:1: missing section '{key}'")
            return None
        if not isinstance(v, dict):
            self.fail((key,), "expected a mapping")
        return v

    def number(self, sec, key, path, default=None, required=True):
        if key not in sec or sec[key] is None:
            if default is not None or not required:
                return default
            self.fail(path, f"missing key '{key}'")
        v = sec[key]
        if isinstance(v, str):
            # YAML 1.1 reads exponents without a dot or sign (1.0e6) as strings
            try:
                v = float(v)
            except ValueError:
                pass
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(path + (key,), f"expected a number, got {v!r}")
        if not math.isfinite(v):
            self.fail(path + (key,), "must be finite")
        return float(v)

    def build(self, cls, key, fields, defaults=None):
        sec = self.section(key)
        if sec is None:
            return None
        defaults = defaults or {}
        unknown = set(sec) - set(fields)
        if unknown:
            self.fail((key, sorted(unknown)[0]), f"unknown key; expected one of {list(fields)}")
        kw = {f: self.number(sec, f, (key,), defaults.get(f)) for f in fields}
        try:
            return cls(**kw)
        except (SwitchforceError, ValueError) as e:
            self.fail((key,), str(e))


def parse(text, source="<config>"):
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else 1
        raise ConfigError(f"{source}:{line}: YAML syntax error: {getattr(e, 'problem', e)}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}:1: top level must be a mapping of sections")
    r = _Reader(data, _marks(node), source)

    known = {"name", "plant", "environment", "gains", "estimates", "wrist", "trajectory", "sim",
             "design"}
    for k in data:
        if k not in known:
            r.fail((k,), f"unknown section; expected one of {sorted(known)}")

    name = str(data.get("name") or Path(source).stem)
    plant = r.build(RigidPlant, "plant", ("M", "b"), {"b": 0.0})
    env = r.build(Environment, "environment", ("k_e", "b_e"))
    gains = r.build(ControllerGains, "gains", ("M_a", "k_p", "k_d", "k_f", "b_f"))
    wrist = r.build(WristParams, "wrist", ("M_t", "k_t", "b_t"))
    est = r.build(EnvEstimates, "estimates", ("k_e", "b_e"))
    if est is None and env is not None:
        perceived = env if wrist is None else reduced_env(wrist, env)
        if perceived.b_e > 0:
            est = EnvEstimates.exact(perceived)

    traj = _trajectory(r, est)
    sim = _sim(r)
    design = _design(r)
    return ScenarioConfig(name, plant, env, gains, est, wrist, traj, sim, design)


def _profile(r, sec, key, path):
    if key not in sec:
        r.fail(path, f"missing key '{key}'")
    try:
        return profile_from_dict(sec[key])
    except (SwitchforceError, ValueError, KeyError, TypeError, AttributeError) as e:
        r.fail(path + (key,), f"bad profile: {e}")


def _trajectory(r, est):
    sec = r.section("trajectory")
    if sec is None:
        return None
    p = ("trajectory",)
    if est is None:
        r.fail(p, "needs 'estimates' (or an environment to derive them from)")
    contact = sec.get("contact", [])
    if not isinstance(contact, list) or not all(
            isinstance(iv, list) and len(iv) == 2 for iv in contact):
        r.fail(p + ("contact",), "expected a list of [t_c, t_b] pairs")
    try:
        sched = ContactSchedule(tuple(tuple(iv) for iv in contact))
        return TrajectorySpec(
            x_free=_profile(r, sec, "x_free", p),
            F_contact=_profile(r, sec, "F_contact", p),
            schedule=sched,
            estimates=est,
            t_start=r.number(sec, "t_start", p, 0.0),
            t_end=r.number(sec, "t_end", p),
            gamma1=r.number(sec, "gamma1", p, required=False),
            gamma2=r.number(sec, "gamma2", p, required=False),
            x0=r.number(sec, "x0", p, required=False),
            v0=r.number(sec, "v0", p, required=False),
            step=r.number(sec, "step", p, required=False),
        )
    except (SwitchforceError, ValueError, TypeError) as e:
        if isinstance(e, ConfigError):
            raise
        r.fail(p, str(e))


def _vector(r, sec, key, path, n):
    v = sec.get(key)
    if v is None:
        return None
    if not isinstance(v, list) or len(v) != n or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        r.fail(path + (key,), f"expected a list of {n} numbers")
    return tuple(float(x) for x in v)


def _sim(r):
    sec = r.section("sim")
    if sec is None:
        return None
    p = ("sim",)
    model = sec.get("model")
    if model not in SIM_MODELS:
        r.fail(p + ("model",), f"expected one of {list(SIM_MODELS)}, got {model!r}")
    try:
        cfg = SimConfig(step=r.number(sec, "step", p, 1e-6),
                        event_tol=r.number(sec, "event_tol", p, 1e-10),
                        min_event_sep=r.number(sec, "min_event_sep", p, required=False),
                        horizon=r.number(sec, "horizon", p, 0.4),
                        t0=r.number(sec, "t0", p, 0.0))
    except (SwitchforceError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        r.fail(p, str(e))
    every = sec.get("output_every", 1)
    if not isinstance(every, int) or isinstance(every, bool) or every < 1:
        r.fail(p + ("output_every",), "expected a positive integer")
    n_ic = 4 if model == "compliant" else 2
    ic = _vector(r, sec, "ic", p, n_ic)
    z0 = sec.get("z0")
    if z0 != "random":
        z0 = _vector(r, sec, "z0", p, 2)
    if model in ("worst_case", "error") and z0 is None:
        r.fail(p, f"model {model!r} needs 'z0' (two numbers or 'random')")
    dist = None
    if "disturbance" in sec:
        d = sec["disturbance"]
        if not isinstance(d, dict):
            r.fail(p + ("disturbance",), "expected a mapping with w1 and w2")
        dist = (_profile(r, d, "w1", p + ("disturbance",)),
                _profile(r, d, "w2", p + ("disturbance",)))
    return SimSection(model, cfg, ic, z0, dist, every)


def _design(r):
    sec = r.section("design")
    if sec is None:
        return None
    p = ("design",)
    param = sec.get("parameter")
    if param not in ("b_f", "b_t"):
        r.fail(p + ("parameter",), f"expected 'b_f' or 'b_t', got {param!r}")
    lo = r.number(sec, "lo", p)
    hi = r.number(sec, "hi", p)
    if not lo < hi:
        r.fail(p + ("hi",), f"bracket needs lo < hi, got [{lo:g}, {hi:g}]")
    if not lo > 0:
        r.fail(p + ("lo",), "bracket must be positive")
    tol = r.number(sec, "tol", p, 1e-2)
    if not tol > 0:
        r.fail(p + ("tol",), "must be > 0")
    pts = sec.get("sweep_points", 64)
    if not isinstance(pts, int) or isinstance(pts, bool) or pts < 1:
        r.fail(p + ("sweep_points",), "expected a positive integer")
    return DesignSection(param, lo, hi, tol, pts)


def shipped_scenarios():
    root = resources.files("switchforce") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load(path_or_name):
    """Load a scenario from a file path, or by the name of a shipped scenario."""
    p = Path(path_or_name)
    if p.exists():
        return parse(p.read_text(), str(p))
    name = str(path_or_name)
    if name in shipped_scenarios():
        res = resources.files("switchforce") / "scenarios" / f"{name}.yaml"
        return parse(res.read_text(), f"{name}.yaml")
    raise ConfigError(f"{path_or_name}: no such file or shipped scenario "
                      f"(shipped: {', '.join(shipped_scenarios())})")
