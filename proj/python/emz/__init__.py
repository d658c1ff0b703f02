"""Python bindings for the emz library (memory kernels, GLE solvers, ROMs)."""

from ._emz import *  # noqa: F401,F403
from ._emz import __version__  # noqa: F401
