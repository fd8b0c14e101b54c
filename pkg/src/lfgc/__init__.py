"""Graph-transform coding of light fields built on projected super-rays."""

from .errors import DataError, InvariantError, LfgcError, MalformedStreamError
from .model import HOLE, DisparityMap, LabelMap, LightFieldGrid, SuperRayTable, ViewIndex, grid_views

__version__ = "0.1.0"

__all__ = [
    "DataError", "InvariantError", "LfgcError", "MalformedStreamError", "HOLE", "DisparityMap", "LabelMap",
    "LightFieldGrid", "SuperRayTable", "ViewIndex", "grid_views", "__version__",
]
