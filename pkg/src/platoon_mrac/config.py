"""Scenario files and the bundled preset library.

Scenarios are TOML documents with a ``schema`` version field::

    schema = 1
    name = "fig2"

    [graph]
    edges = [[0, 1], [1, 2]]          # (source, target); 0 is the reference

    [reference]                        # a1/a2/b1 or A0/b0
    a1 = -0.25
    a2 = -0.5
    b1 = 1.0
    x0 = [1.0, -1.0]
    r_breaks = [0.0]                   # piecewise-constant r(t)
    r_levels = [1.0]

    [[agents]]                         # one block per follower, ids 1..N in order
    a1 = -1.25                         # or A = [[..], [..]] and b = [..]
    a2 = 1.0
    b1 = 0.5
    x0 = [1.0, 0.0]
    uncertainty = { kind = "sinusoidal", c1 = 0.2, c2 = 0.1 }

    [controller]     # gamma, gamma_r, Q, m, slope, seed, init_scale, mode,
                     # sign_kr, kmij_state, V, adapt_nn, adapt_gains,
                     # nn_init, gain_init
    [integration]    # dt, t_end, method
    [diagnostics]    # eps0, record_stride, tolerance, max_state_norm

Every section except ``graph``, ``reference`` and ``agents`` is optional and
falls back to the defaults of the corresponding settings class.
"""

from __future__ import annotations

import dataclasses
from importlib import resources
from pathlib import Path

import numpy as np
import tomli

from .graph import GraphError, GraphTopology
from .plants import AgentPlant, ReferenceModel, UncertaintySpec, vehicle_plant, vehicle_reference
from .simulation import (ControllerSettings, DiagnosticSettings, IntegrationSettings,
                         ScenarioConfig)

SCHEMA_VERSION = 1
PRESETS = ("fig2", "fig3", "single-agent-prop1", "homogeneous-sanity", "open-loop-check")

_TOP_KEYS = {"schema", "name", "graph", "reference", "agents", "controller", "integration",
             "diagnostics"}
_SECTIONS = {"controller": ControllerSettings, "integration": IntegrationSettings,
             "diagnostics": DiagnosticSettings}


class ConfigError(ValueError):
    """Parse or validation failure.

    ``kind`` is ``"parse-error"`` or ``"validation-error"``; ``problems``
    lists every violation found.
    """

    def __init__(self, kind: str, problems: list[str], source: str = "<config>"):
        self.kind = kind
        self.problems = list(problems)
        self.source = source
        lines = "\n".join(f"  - {p}" for p in self.problems)
        super().__init__(f"{source}: {kind}\n{lines}")


def _reference(block: dict) -> ReferenceModel:
    extra = {k: block[k] for k in ("r_breaks", "r_levels") if k in block}
    if "A0" in block:
        return ReferenceModel(block["A0"], block["b0"], block.get("x0"), **extra)
    return vehicle_reference(block["a1"], block["a2"], block["b1"], block.get("x0"), **extra)


def _agent(block: dict) -> AgentPlant:
    unc = UncertaintySpec(**block.get("uncertainty", {}))
    if "A" in block:
        return AgentPlant(block["A"], block["b"], unc, block.get("x0"))
    return vehicle_plant(block["a1"], block["a2"], block["b1"], unc, block.get("x0"))


def _settings(cls, block: dict, where: str, problems: list):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(block) - names)
    if unknown:
        problems.append(f"[{where}] unknown key(s): {', '.join(unknown)}")
    kw = {}
    for k, v in block.items():
        if k not in names:
            continue
        if isinstance(v, list):
            v = tuple(tuple(row) if isinstance(row, list) else row for row in v)
        kw[k] = v
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        problems.append(f"[{where}] {exc}")
        return cls()


def config_from_dict(doc: dict, source: str = "<config>") -> ScenarioConfig:
    """Build and validate a scenario; raise :class:`ConfigError` listing all problems."""
    problems = []
    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        problems.append(f"unknown top-level key(s): {', '.join(unknown)}")
    schema = doc.get("schema")
    if schema != SCHEMA_VERSION:
        problems.append(f"schema must be {SCHEMA_VERSION}, got {schema!r}")

    reference = None
    try:
        reference = _reference(doc["reference"])
    except KeyError as exc:
        problems.append(f"[reference] missing {exc}")
    except (TypeError, ValueError) as exc:
        problems.append(f"[reference] {exc}")

    plants = []
    agents = doc.get("agents", [])
    if not isinstance(agents, list):
        problems.append("agents must be an array of tables")
        agents = []
    for k, block in enumerate(agents, start=1):
        try:
            plants.append(_agent(block))
        except KeyError as exc:
            problems.append(f"agent {k}: missing {exc}")
        except (TypeError, ValueError) as exc:
            problems.append(f"agent {k}: {exc}")

    topology = None
    try:
        edges = doc["graph"]["edges"]
        topology = GraphTopology.from_edges(len(agents), edges)
    except KeyError:
        problems.append("[graph] missing edges")
    except GraphError as exc:
        problems.append(f"graph invalid ({exc.kind}): {exc}")
    except (TypeError, ValueError) as exc:
        problems.append(f"[graph] bad edge list: {exc}")

    settings = {name: _settings(cls, doc.get(name, {}), name, problems)
                for name, cls in _SECTIONS.items()}

    if reference is not None and topology is not None and len(plants) == len(agents):
        cfg = ScenarioConfig(topology, reference, plants, name=str(doc.get("name", "scenario")),
                             **settings)
        try:
            problems.extend(cfg.problems())
        except (TypeError, ValueError) as exc:
            problems.append(str(exc))
    if problems:
        raise ConfigError("validation-error", problems, source)
    return cfg


def parse_config_text(text: str, source: str = "<config>") -> ScenarioConfig:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        # the message carries "(at line L, column C)"
        raise ConfigError("parse-error", [str(exc)], source) from exc
    return config_from_dict(doc, source)


def load_config(path) -> ScenarioConfig:
    """Read, parse and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("parse-error", [f"cannot read file: {exc.strerror}"], str(path)) from exc
    return parse_config_text(text, str(path))


def preset_path(preset: str):
    if preset not in PRESETS:
        raise KeyError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    return resources.files(__package__).joinpath("presets", f"{preset}.toml")


def load_preset(preset: str) -> ScenarioConfig:
    return parse_config_text(preset_path(preset).read_text(encoding="utf-8"), f"preset:{preset}")


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Inverse of :func:`config_from_dict` using the general ``A``/``b`` form."""
    def plain(v):
        if isinstance(v, np.ndarray):
            return v.tolist()
        if isinstance(v, tuple):
            return [plain(x) for x in v]
        return v

    def section(obj):
        return {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if getattr(obj, f.name) is not None}

    ref = cfg.reference
    return {
        "schema": SCHEMA_VERSION,
        "name": cfg.name,
        "graph": {"edges": [list(e) for e in cfg.topology.edges()]},
        "reference": {"A0": plain(ref.A0), "b0": plain(ref.b0), "x0": plain(ref.x0),
                      "r_breaks": list(ref.r_breaks), "r_levels": list(ref.r_levels)},
        "agents": [{"A": plain(p.A), "b": plain(p.b), "x0": plain(p.x0),
                    "uncertainty": dataclasses.asdict(p.uncertainty)} for p in cfg.plants],
        **{name: section(getattr(cfg, name)) for name in _SECTIONS},
    }
