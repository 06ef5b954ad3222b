"""Experiment configuration: a single JSON document validated against ``config.schema.json``."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Union

import jsonschema
import numpy as np

from .displacement import FiniteDiscrete, Gaussian, PointMass, UniformBox
from .env import (Constant, DisplacementSpec, Explicit, Exponential, IidFiniteSupport, Initial, Periodic,
                  PowerLaw, StepSpec, TwoStateMarkov, materialize)


class ConfigError(ValueError):
    """Invalid configuration; ``where`` is a JSON path to the offending entry."""

    def __init__(self, message: str, where: str = "$"):
        super().__init__(f"{where}: {message}")
        self.message = message
        self.where = where

    def as_dict(self) -> dict:
        return {"error": "config", "where": self.where, "message": self.message}


def schema() -> dict:
    return json.loads(resources.files("contagion").joinpath("config.schema.json").read_text())


def _generator(g, where: str):
    if isinstance(g, (int, float)):
        return Constant(float(g))
    kind = g["type"]
    try:
        if kind == "constant":
            return Constant(float(g["value"]))
        if kind == "iid":
            return IidFiniteSupport(tuple(g["values"]), tuple(g["probs"]))
        if kind == "periodic":
            return Periodic(tuple(g["cycle"]), int(g.get("phase", 0)))
        return TwoStateMarkov(tuple(g["switch"]), tuple(g["emit"]))
    except ValueError as exc:
        raise ConfigError(str(exc), where) from None


def _law(spec: dict, where: str):
    kind = spec["type"]
    try:
        if kind == "point":
            return PointMass(spec["c"])
        if kind == "discrete":
            return FiniteDiscrete(spec["support"], spec["probs"])
        if kind == "gaussian":
            return Gaussian(spec["mean"], spec["cov"])
        return UniformBox(spec["lo"], spec["hi"])
    except ValueError as exc:
        raise ConfigError(str(exc), where) from None


@dataclass
class ExperimentConfig:
    d: int
    initial: Initial
    regime: Any
    displacement: DisplacementSpec
    steps: int
    replicates: int = 1
    seed: int = 0
    offspring: Any = 1
    resource: Union[float, str] = 1.0
    options: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def regime_tag(self) -> str:
        return self.raw["regime"]["type"]

    def environment(self, n_steps: int = None, seed: int = None):
        return materialize(self.regime, n_steps or self.steps, seed=self.seed if seed is None else seed, d=self.d,
                           displacement=self.displacement, offspring=self.offspring, resource=self.resource)


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate ``doc`` against the schema, check cross-references and build the objects."""
    validator = jsonschema.Draft202012Validator(schema())
    e = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if e is not None:
        where = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in e.absolute_path)
        raise ConfigError(e.message, where)
    d = doc["d"]

    for i, p in enumerate(doc["initial"]):
        if len(p["x"]) != d:
            raise ConfigError(f"initial point has dimension {len(p['x'])}, expected {d}", f"$.initial[{i}].x")
    try:
        initial = Initial.from_points([(p["x"], p.get("w", 1.0), p.get("u", 1.0)) for p in doc["initial"]])
    except ValueError as exc:
        raise ConfigError(str(exc), "$.initial") from None

    ds = doc["displacement"]
    laws = [_law(s, f"$.displacement.laws[{i}]") for i, s in enumerate(ds["laws"])]
    for i, law in enumerate(laws):
        if law.d != d:
            raise ConfigError(f"law has dimension {law.d}, expected {d}", f"$.displacement.laws[{i}]")
    selector = _generator(ds["selector"], "$.displacement.selector") if "selector" in ds else None
    try:
        disp = DisplacementSpec(tuple(laws), ds.get("coupling", "independent"), selector)
    except ValueError as exc:
        raise ConfigError(str(exc), "$.displacement") from None

    rg = doc["regime"]
    if rg["type"] == "power_law":
        regime = PowerLaw(_generator(rg.get("xi", 1.0), "$.regime.xi"), float(rg.get("alpha", 0.0)), rg.get("beta"))
    elif rg["type"] == "exponential":
        regime = Exponential(_generator(rg.get("xi", 1.0), "$.regime.xi"),
                             _generator(rg.get("tau", float(np.log(2.0))), "$.regime.tau"))
    else:
        steps, joints = [], {}
        for i, s in enumerate(rg["steps"]):
            where = f"$.regime.steps[{i}]"
            if len(s["w"]) != len(s["u"]):
                raise ConfigError("w and u must have the same length", where)
            law = s.get("law", 0)
            if law >= len(laws):
                raise ConfigError(f"law index {law} out of range", where)
            key = (law, len(s["w"]))
            if s["w"] and key not in joints:
                joints[key] = disp.joint(*key)
            joint = joints.get(key)
            steps.append(StepSpec(tuple(s["w"]), tuple(s["u"]), joint))
        regime = Explicit(tuple(steps))
        if len(steps) < doc["steps"]:
            raise ConfigError(f"explicit regime lists {len(steps)} steps, {doc['steps']} requested", "$.regime.steps")

    offspring = doc.get("offspring", 1)
    if not isinstance(offspring, int):
        offspring = _generator(offspring, "$.offspring")
    resource = doc.get("resource", 1.0)
    if resource == "weight" and rg["type"] == "exponential":
        raise ConfigError("resource 'weight' is not supported with exponential weights", "$.resource")

    return ExperimentConfig(
        d=d, initial=initial, regime=regime, displacement=disp, steps=doc["steps"],
        replicates=doc.get("replicates", 1), seed=doc.get("seed", 0), offspring=offspring,
        resource=resource, options=doc.get("options", {}), raw=doc,
    )


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return parse_config(doc)
