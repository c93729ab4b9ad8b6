from addps._core import *  # noqa: F401,F403
from addps._core import __version__  # noqa: F401
