"""Soft-body simulation engine for deformable two-layer elastic objects.

Subpackages/modules:

* :mod:`softbody.mesh` - object builders (chains, two-layer discs/spheres)
* :mod:`softbody.dynamics` - force sources and explicit integrators
* :mod:`softbody.session` - interactive loop, drag, idle wander, commands
* :mod:`softbody.persistence` - frame recording and XML/CSV state dumps
* :mod:`softbody.ahp` - cost-value requirements prioritization
* :mod:`softbody.protocol` - websocket session server and wire codecs
* :mod:`softbody.kernels` - compiled hot loops with a NumPy fallback
"""

from .model import (
    Dimension,
    DragHandle,
    ElasticObject,
    Face,
    IntegratorKind,
    Layer,
    LinkSpring,
    Particle,
    Spring,
    WorldParams,
    WorldState,
    vec3,
)

__version__ = "0.1.0"

__all__ = [
    "Dimension",
    "DragHandle",
    "ElasticObject",
    "Face",
    "IntegratorKind",
    "Layer",
    "LinkSpring",
    "Particle",
    "Spring",
    "WorldParams",
    "WorldState",
    "vec3",
    "__version__",
]
