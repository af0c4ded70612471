"""Version information for levy-impulse."""

from importlib.metadata import version

__version__: str = version("levy-impulse")
