"""Pseudo-spectral tools relating the BMO seminorm of a divergence-free field
on the 3-torus to the norm of the operator f -> P(u x f) on gradients."""

__version__ = "0.1.0"
