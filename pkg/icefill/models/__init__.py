__all__ = [ "get_context"]

from typing import Dict, Hashable, Any


class Context:
    """In-process cache for objects that are expensive to rebuild across sweep points
    (clustered-channel sample kernels and channel powers, keyed by geometry)."""
    def __init__(self):
        self.kernels : Dict[Hashable, Any] = {}
        self.powers  : Dict[Hashable, float] = {}
    def clear(self):
        self.kernels = {}
        self.powers = {}

__context__ = Context()

def get_context(clear : bool=False):
    global __context__
    if clear:
        __context__.clear()
    return __context__


from . import geometry
__all__.extend( geometry.__all__ )
from .geometry import *

from . import kernel
__all__.extend( kernel.__all__ )
from .kernel import *

from . import observation
__all__.extend( observation.__all__ )
from .observation import *

from . import result
__all__.extend( result.__all__ )
from .result import *

from . import config
__all__.extend( config.__all__ )
from .config import *
