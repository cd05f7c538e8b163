"""Transport of tangent vector fields from genus-0 surfaces to a common sphere."""

__version__ = "0.1.0"

from .curvature import CurvatureField, principal_direction_field, vertex_curvature
from .diffgeo import TangentVectorField, face_gradient, gram_matrix, vertex_frames, vertex_gradient
from .mesh_io import SphericalParam, TriangleMesh, load_mesh, load_param, validate_spherical_topology
from .resample import build_icosphere, nearest_on_sphere, resample_field
from .stats import angular_error, average_fields, histogram, naive_angular_error
from .transport import build_atlas, chart_gradients, decompose, pushforward_to_sphere, reconstruct

__all__ = [
    "CurvatureField",
    "SphericalParam",
    "TangentVectorField",
    "TriangleMesh",
    "angular_error",
    "average_fields",
    "build_atlas",
    "build_icosphere",
    "chart_gradients",
    "decompose",
    "face_gradient",
    "gram_matrix",
    "histogram",
    "load_mesh",
    "load_param",
    "naive_angular_error",
    "nearest_on_sphere",
    "principal_direction_field",
    "pushforward_to_sphere",
    "reconstruct",
    "resample_field",
    "validate_spherical_topology",
    "vertex_curvature",
    "vertex_frames",
    "vertex_gradient",
]
