"""Fractional p-Laplacian solvers on long cylinders.

Re-exports the pybind11 extension module.
"""

from _fraccyl import *  # noqa: F401,F403
