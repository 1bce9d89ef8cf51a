"""
Base-surface geometry of the conformal reference models and its
finite-difference oracles.
"""
