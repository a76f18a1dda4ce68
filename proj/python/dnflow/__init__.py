"""Python interface to the dnflow C++ library."""

from ._dnflow import *  # noqa: F401,F403
from ._dnflow import Error, __version__

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
