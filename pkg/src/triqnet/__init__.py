"""Simulator for a three-node superconducting quantum network.

Modules: ``device`` (qubit-channel-qubit dynamics), ``circuits`` (gate-level
sequences), ``measurement`` (readout and tomography), ``qss`` (secret sharing),
``privacy`` (entropic bounds) and ``cli``.
"""
from .errors import NumericalError, TriqnetError, UsageError

__version__ = "0.1.0"

__all__ = ["NumericalError", "TriqnetError", "UsageError", "__version__"]
