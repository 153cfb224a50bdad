import json

import numpy as np
import pytest

from softbody.mesh import build_two_layer_disc, build_two_layer_sphere
from softbody.model import WorldParams, WorldState
LOOSE_BOUNDS = {"min": [-1000.0, -1000.0, -1000.0], "max": [1000.0, 1000.0, 1000.0]}


def scene_dict(**overrides):
    """A small 2D disc scene; keyword overrides are merged shallowly."""
    base = {
        "dimension": 2,
        "object": {
            "type": "two_layer_disc",
            "n_outer": 8,
            "r_outer": 0.5,
            "inner_ratio": 0.6,
            "mass": 2.0,
            "stiffness": 150.0,
            "damping": 1.0,
            "center": [0.0, -1.2, 0.0],
            "pressure": {"outer": 2.0, "inner": 0.8},
        },
        "world": {
            "gravity": [0.0, -9.81, 0.0],
            "bounds": {"min": [-2.0, -2.0, -2.0], "max": [2.0, 2.0, 2.0]},
            "restitution": 0.5,
        },
        "integrator": "rk4",
        "dt": 1.0 / 60.0,
        "seed": 42,
    }
    base.update(overrides)
    return base


def write_json(path, payload):
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


@pytest.fixture
def disc_scene(tmp_path):
    return write_json(tmp_path / "scene.json", scene_dict())


@pytest.fixture
def free_space_world():
    """Huge bounds, no gravity: only internal forces act."""
    params = WorldParams(gravity=(0.0, 0.0, 0.0),
                         bounds_min=LOOSE_BOUNDS["min"], bounds_max=LOOSE_BOUNDS["max"])
    return WorldState(params)


@pytest.fixture
def disc_world(free_space_world):
    disc = build_two_layer_disc(8, 0.5, 0.6, 1.0, 60.0, 0.5, 1.0, 0.4)
    free_space_world.add_object(disc)
    return free_space_world


@pytest.fixture
def sphere_world(free_space_world):
    sphere = build_two_layer_sphere(1, 0.5, 0.6, 2.0, 50.0, 0.5, 1.2, 0.5)
    free_space_world.add_object(sphere)
    return free_space_world


def random_world(rng, n_objects=2, particles_per_object=5):
    """Small world of random point clouds joined by random springs."""
    from softbody.model import Dimension, ElasticObject, Spring

    params = WorldParams(gravity=(0.0, -9.81, 0.0),
                         bounds_min=(-5.0, -5.0, -5.0), bounds_max=(5.0, 5.0, 5.0))
    world = WorldState(params)
    for _ in range(n_objects):
        n = int(rng.integers(1, particles_per_object + 1))
        positions = rng.uniform(-2.0, 2.0, (n, 3))
        springs = []
        if n >= 2:
            for _ in range(int(rng.integers(0, 2 * n))):
                a, b = rng.choice(n, size=2, replace=False)
                springs.append(
                    Spring(int(a), int(b), float(rng.uniform(0, 50)), float(rng.uniform(0, 2)),
                           float(np.linalg.norm(positions[b] - positions[a])))
                )
        obj = ElasticObject(Dimension.D3, positions, rng.uniform(0.5, 2.0, n), springs=springs)
        obj.velocities[:] = rng.uniform(-1.0, 1.0, (n, 3))
        world.add_object(obj)
    return world
