"""1-bit spatial sigma-delta ADC simulation and LoS MIMO channel estimation."""

from ._sdmimo import *  # noqa: F401,F403
from ._sdmimo import __version__  # noqa: F401
