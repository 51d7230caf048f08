"""Numerical lab for a piecewise horseshoe map with an internal tangency.

The map acts on the unit square through three affine strips and one quadratic
fold; the fold's image touches the unstable direction at a single point.  The
modules here iterate the map, build its cone field, check the return and
growth estimates behind its hyperbolicity, enumerate periodic orbits and
measure how the hyperbolicity constants degenerate near the tangency.
"""
__version__ = "0.1.0"

from .errors import HorseshoeError, InvalidParams  # noqa: E402
from .kernels import BACKEND  # noqa: E402
from .map_core import DEFAULT_PARAMS, MapParams, Region, step, validate  # noqa: E402

__all__ = ["BACKEND", "DEFAULT_PARAMS", "HorseshoeError", "InvalidParams",
           "MapParams", "Region", "step", "validate", "__version__"]
