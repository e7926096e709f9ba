"""Monte Carlo and analytic tools for concentration of measure on spheres,
rotation groups and Grassmannians, plus curvature-pinching arithmetic."""

__version__ = "0.1.0"
