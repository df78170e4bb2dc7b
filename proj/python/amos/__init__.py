# SPDX-License-Identifier: Apache-2.0
"""Spiking subcircuits that emulate ANN gates with at most one spike per
neuron, plus an ANN-to-SNN compiler and a clocked pipelined simulator.

The heavy lifting lives in the C++ extension module; this package simply
re-exports it.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
