__all__ = []

from . import pool
__all__.extend( pool.__all__ )
from .pool import *
