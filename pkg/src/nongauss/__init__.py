"""Mode-matching theory of photon subtraction from wideband squeezed light."""

__version__ = "0.1.0"
