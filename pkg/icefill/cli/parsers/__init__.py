__all__ = []


from . import design
__all__.extend( design.__all__ )
from .design import *

from . import estimate
__all__.extend( estimate.__all__ )
from .estimate import *

from . import analyze
__all__.extend( analyze.__all__ )
from .analyze import *

from . import sweep
__all__.extend( sweep.__all__ )
from .sweep import *
