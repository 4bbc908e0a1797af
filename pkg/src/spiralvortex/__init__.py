"""Self-similar three-vortex spirals and their desingularization for 2D Euler."""

__version__ = "0.1.0"
