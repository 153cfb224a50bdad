"""Declarative scene configuration: one JSON document describes the world.

The same schema drives the headless CLI, the protocol server and the
browser UI, so runs are reproducible from a single file.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from . import mesh
from .errors import SceneError
from .model import Dimension, ElasticObject, IntegratorKind, WorldParams, WorldState

DEFAULT_DT = 1.0 / 60.0

#: geometry defaults used when an object spec omits parameters and when the
#: session switches to a dimension the scene does not itself configure
_GEOMETRY_DEFAULTS = {
    "chain": {"n": 8, "length": 1.0},
    "two_layer_disc": {"n_outer": 12, "r_outer": 0.5, "inner_ratio": 0.6},
    "two_layer_sphere": {"depth": 1, "r_outer": 0.5, "inner_ratio": 0.6},
}

_TYPE_FOR_DIMENSION = {
    Dimension.D1: "chain",
    Dimension.D2: "two_layer_disc",
    Dimension.D3: "two_layer_sphere",
}

_DIMENSION_FOR_TYPE = {v: k for k, v in _TYPE_FOR_DIMENSION.items()}

_MATERIAL_DEFAULTS = {"mass": 1.0, "stiffness": 80.0, "damping": 0.8}
_PRESSURE_DEFAULTS = {"outer": 1.0, "inner": 0.4}


@dataclass
class SceneConfig:
    dimension: Dimension
    object_specs: list
    integrator: IntegratorKind
    dt: float
    seed: int
    digest: str
    raw: dict
    world: dict = field(default_factory=dict)

    def make_params(self) -> WorldParams:
        w = self.world
        try:
            return WorldParams(
                gravity=w.get("gravity", (0.0, -9.81, 0.0)),
                bounds_min=w.get("bounds", {}).get("min", (-2.0, -2.0, -2.0)),
                bounds_max=w.get("bounds", {}).get("max", (2.0, 2.0, 2.0)),
                restitution=w.get("restitution", 0.5),
                collision_stiffness=w.get("collision_stiffness", 500.0),
            )
        except Exception as exc:
            raise SceneError(f"invalid world parameters: {exc}") from exc

    def object_specs_for(self, dimension: Dimension) -> list:
        """Object specs to build after switching to ``dimension``.

        The scene's own objects when it configures that dimension, else a
        default object of the right type carrying over the scene's
        material parameters.
        """
        if dimension is self.dimension:
            return self.object_specs
        base = self.object_specs[0] if self.object_specs else {}
        spec = {"type": _TYPE_FOR_DIMENSION[dimension]}
        for key in ("mass", "stiffness", "damping"):
            if key in base:
                spec[key] = base[key]
        if dimension is not Dimension.D1 and "pressure" in base:
            spec["pressure"] = base["pressure"]
        return [spec]


def scene_digest(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _require(condition: bool, message: str):
    if not condition:
        raise SceneError(message)


def parse_scene(raw: dict) -> SceneConfig:
    _require(isinstance(raw, dict), "scene must be a JSON object")
    dim_value = raw.get("dimension", 2)
    try:
        dimension = Dimension(int(dim_value))
    except (ValueError, TypeError):
        raise SceneError(f"dimension must be 1, 2 or 3, got {dim_value!r}") from None

    if "objects" in raw:
        specs = raw["objects"]
        _require(isinstance(specs, list) and specs, "'objects' must be a non-empty list")
    elif "object" in raw:
        specs = [raw["object"]]
    else:
        specs = [{"type": _TYPE_FOR_DIMENSION[dimension]}]
    normalized = []
    for spec in specs:
        _require(isinstance(spec, dict), "object specs must be JSON objects")
        spec = dict(spec)
        kind = spec.setdefault("type", _TYPE_FOR_DIMENSION[dimension])
        _require(kind in _DIMENSION_FOR_TYPE, f"unknown object type {kind!r}")
        _require(
            _DIMENSION_FOR_TYPE[kind] is dimension,
            f"object type {kind!r} does not fit a {dimension.value}D scene",
        )
        normalized.append(spec)
    specs = normalized

    integrator_name = raw.get("integrator", "rk4")
    try:
        integrator = IntegratorKind(integrator_name)
    except ValueError:
        raise SceneError(f"unknown integrator {integrator_name!r}") from None

    dt = raw.get("dt", DEFAULT_DT)
    _require(isinstance(dt, (int, float)) and 0 < dt <= 0.1, f"dt must lie in (0, 0.1], got {dt!r}")
    seed = raw.get("seed", 0)
    _require(isinstance(seed, int), f"seed must be an integer, got {seed!r}")

    config = SceneConfig(
        dimension=dimension,
        object_specs=specs,
        integrator=integrator,
        dt=float(dt),
        seed=seed,
        digest=scene_digest(raw),
        raw=raw,
        world=raw.get("world", {}),
    )
    config.make_params()  # validate world block eagerly
    return config


def load_scene(path: Union[str, Path]) -> SceneConfig:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path}: invalid JSON ({exc})") from exc
    return parse_scene(raw)


def build_object(spec: dict) -> ElasticObject:
    kind = spec.get("type")
    geometry = dict(_GEOMETRY_DEFAULTS[kind])
    material = {key: spec.get(key, default) for key, default in _MATERIAL_DEFAULTS.items()}
    pressure = dict(_PRESSURE_DEFAULTS)
    pressure.update(spec.get("pressure", {}))
    for key in geometry:
        if key in spec:
            geometry[key] = spec[key]

    if kind == "chain":
        obj = mesh.build_chain(
            int(geometry["n"]), geometry["length"],
            material["mass"], material["stiffness"], material["damping"],
        )
    elif kind == "two_layer_disc":
        obj = mesh.build_two_layer_disc(
            int(geometry["n_outer"]), geometry["r_outer"], geometry["inner_ratio"],
            material["mass"], material["stiffness"], material["damping"],
            pressure["outer"], pressure["inner"],
        )
    else:
        obj = mesh.build_two_layer_sphere(
            int(geometry["depth"]), geometry["r_outer"], geometry["inner_ratio"],
            material["mass"], material["stiffness"], material["damping"],
            pressure["outer"], pressure["inner"],
        )
    center = spec.get("center")
    if center is not None:
        try:
            obj.positions += np.asarray(center, dtype=np.float64).reshape(3)
        except (ValueError, TypeError) as exc:
            raise SceneError(f"object center must be a 3-vector, got {center!r}") from exc
    return obj


def build_world(config: SceneConfig, dimension: Optional[Dimension] = None) -> WorldState:
    """Fresh world for the scene (or for a switched-to dimension)."""
    dimension = dimension or config.dimension
    world = WorldState(config.make_params())
    for spec in config.object_specs_for(dimension):
        world.add_object(build_object(spec))
    return world
