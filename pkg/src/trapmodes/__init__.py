"""Finite-element laboratory for trapped modes in chamfered layers."""

from .geometry import BC, IncisorSpec, KappaPair, Mesh, StripSpec, Tag

__version__ = "0.1.0"

__all__ = ["BC", "IncisorSpec", "KappaPair", "Mesh", "StripSpec", "Tag", "__version__"]
