"""Josephson quantum filter and qubit simulator (waveguide QED)."""

from ._core import *  # noqa: F401,F403
from ._core import JqfsimError, angular, hertz

__all__ = [name for name in dir() if not name.startswith("_")]
