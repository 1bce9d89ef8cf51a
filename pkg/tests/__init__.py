"""
Test package for the geodesic-flow lab.
"""
