"""Projected-ensemble and measurement-induced purification toolkit.

Dense brickwork circuit simulation with dual-unitary gate families,
projected-ensemble state-design diagnostics, and monitored space-time-dual
dynamics for purification studies.
"""

from .backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
