"""Episodic constrained policy optimization: python surface over the C++ core."""

try:
    from ._core import *  # noqa: F401,F403  installed-package layout
except ImportError:  # in-tree build: _core.so sits on sys.path next to build/
    from _core import *  # noqa: F401,F403

from ._version import __version__  # noqa: F401
