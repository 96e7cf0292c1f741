"""Quermassintegrals, polar duality and curvature flows of convex hypersurfaces in space forms."""
from .ambient import DESITTER, HYPERBOLIC, SPHERE, GeometryError, SpaceForm, space_from_name
from .body import (BodyParseError, RadialGraphBody, load_body, make_ball, make_perturbed_ball, recenter,
                   save_body)
from .curvature import ConvexityClass, CurvatureField, classify, compute_curvature, normalized_symmetric
from .duality import PolarError, brute_force_polar_radius, polar
from .flow import FlowConfig, FlowResult, SpeedFunction, run
from .grid import SphericalGrid, make_grid
from .quermass import (QuermassVector, RangeError, ball_f, constant_Cnk, duality_functional, invert_f,
                       quermassintegrals, volume)
from .verify import build_report, conjecture_probe

__version__ = "0.1.0"
