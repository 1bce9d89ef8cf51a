"""
Models package for the geodesic-flow lab.

This package contains the data models shared by the analyzers:
- SurfaceModel: conformal reference surfaces (Flat, hyperbolic, modular, perturbed)
- UnitTangentState / SplitVector: points and tangent vectors of the unit tangent bundle
- JacobiState / FlowSample / ModularState: flow engine records
- certificate, spectrum and entropy result records
"""
