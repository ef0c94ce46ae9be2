"""
Bergman: weighted harmonic Bergman kernels on the upper half-space.

Kernels, Berezin transforms of vertical symbols and their large-parameter
expansions, checked against independent quadrature routes and closed forms.
"""

__all__ = [
    "VERSION",
    "__version__"
]


def _version() -> str:
    """
    Returns the package version.

    Currently, only static versioning is available.
    """
    return "0.1.0"


VERSION = __version__ = _version()
