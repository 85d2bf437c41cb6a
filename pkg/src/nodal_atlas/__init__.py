"""Laplace eigenfunctions on triangulated surfaces and the geometry of their nodal sets."""

from .errors import NodalAtlasError
from .mesh import SurfaceMesh, build_preset, conformal_family
from .nodal import count_nodal_domains, extract_nodal_set
from .spectra import solve_spectrum

__version__ = "0.1.0"
__all__ = ["NodalAtlasError", "SurfaceMesh", "build_preset", "conformal_family", "count_nodal_domains",
           "extract_nodal_set", "solve_spectrum", "__version__"]
