"""
Geodesic flow engine: chart integrator, exact constant-curvature paths and
the modular-group reduction.
"""
