"""Scenario triage against a test suite.

Thin wrapper over the compiled extension. In an installed wheel the
extension lives inside this package; in a CMake build tree it sits on
PYTHONPATH next to the build outputs.
"""

try:
    from ._testsift import *  # noqa: F401,F403
    from ._testsift import __version__  # noqa: F401
except ImportError:  # build-tree layout
    from _testsift import *  # noqa: F401,F403
    from _testsift import __version__  # noqa: F401
