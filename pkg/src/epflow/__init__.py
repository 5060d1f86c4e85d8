"""Explicit smooth flows with controlled periodic-orbit growth.

Subpackages cover the flat bump-function toolkit (:mod:`epflow.bumps`),
the planar disk construction (:mod:`epflow.disk`), trajectory integration
and orbit censuses (:mod:`epflow.flow`), suspension flows over torus maps
(:mod:`epflow.suspension`), the entropy-destroying plug (:mod:`epflow.tear`),
and a command-line front end (:mod:`epflow.cli`).
"""

from .errors import DivergenceSignal, DomainError

__version__ = "0.1.0"

__all__ = ["DivergenceSignal", "DomainError", "__version__"]
