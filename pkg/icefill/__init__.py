__all__ = [
    "get_hash",
    "setup_logs",
    "get_argparser_formatter",
]


import sys
import hashlib

from typing         import Union
from loguru         import logger
from rich_argparse  import RichHelpFormatter



def get_hash( content : Union[str, bytes] ) -> str:
    """sha256 of a text or byte payload (used to tag sweep outputs with their config)."""
    hasher = hashlib.sha256()
    if isinstance(content, str):
        content = content.encode("utf-8")
    hasher.update(content)
    return hasher.hexdigest()

def get_argparser_formatter():
    RichHelpFormatter.styles["argparse.args"]     = "green"
    RichHelpFormatter.styles["argparse.prog"]     = "bold grey50"
    RichHelpFormatter.styles["argparse.groups"]   = "bold green"
    RichHelpFormatter.styles["argparse.help"]     = "grey50"
    RichHelpFormatter.styles["argparse.metavar"]  = "blue"
    return RichHelpFormatter

def setup_logs( name , level):
    """Setup and configure the logger"""
    logger.configure(extra={"name" : name})
    logger.remove()  # Remove any old handler
    if level=="DEBUG":
        format="<blue>{time:DD-MMM-YYYY HH:mm:ss}</blue> | <level>{level:^12}</level> | <cyan>{extra[name]}</cyan> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> |{message}"
    else:
        format="<blue>{time:DD-MMM-YYYY HH:mm:ss}</blue> | <cyan>{extra[name]}</cyan> | {message}"
    logger.add(
        sys.stdout,
        colorize=True,
        backtrace=True,
        diagnose=True,
        level=level,
        format=format,
    )


from . import exceptions
__all__.extend( exceptions.__all__ )
from .exceptions import *

from . import models
__all__.extend( models.__all__ )
from .models import *

from . import kernels
__all__.extend( kernels.__all__ )
from .kernels import *

from . import channel
__all__.extend( channel.__all__ )
from .channel import *

from . import design
__all__.extend( design.__all__ )
from .design import *

from . import estimate
__all__.extend( estimate.__all__ )
from .estimate import *

from . import analysis
__all__.extend( analysis.__all__ )
from .analysis import *

from . import storage
__all__.extend( storage.__all__ )
from .storage import *

from . import backends
__all__.extend( backends.__all__ )
from .backends import *

from . import sweep
__all__.extend( sweep.__all__ )
from .sweep import *

from . import cli
__all__.extend( cli.__all__ )
from .cli import *
