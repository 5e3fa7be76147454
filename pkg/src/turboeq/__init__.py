"""Neural turbo equalization for nonlinear coherent fiber links."""

__version__ = "0.1.0"
