__all__ = []

from . import parsers
__all__.extend( parsers.__all__ )
from .parsers import *
