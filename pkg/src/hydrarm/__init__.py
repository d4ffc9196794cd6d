"""Two-module hydraulic soft-arm simulator with learned kinematics models."""

__version__ = "0.1.0"
