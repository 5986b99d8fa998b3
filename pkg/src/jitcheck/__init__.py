"""Just-in-time static type checking for a small dynamic language."""

from .syntax import parse, pretty
from .typechecker import typecheck
from .machine import run, execute

__all__ = ["parse", "pretty", "typecheck", "run", "execute"]
__version__ = "0.1.0"
