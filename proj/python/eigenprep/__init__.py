"""Quantum eigenstate preparation toolkit.

Thin Python layer over the C++ core: state-vector simulation, adiabatic
evolution, rodeo-filter energy scans and state preparation, variational
rodeo optimization, and pulse-level transmon emulation.
"""

from ._core import *  # noqa: F401,F403
from ._core import __all__ as _core_all

__all__ = list(_core_all)
