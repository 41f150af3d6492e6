"""Linear-optics simulation of one-photon W-state expansion."""

__version__ = "0.1.0"
