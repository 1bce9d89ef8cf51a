"""
Utils package for the geodesic-flow lab.

This package provides utilities for:
- Logging through the shared Logger singleton
- Reproducible random streams keyed by (seed, labels)
- Scenario file loading with line-anchored errors

Usage examples:

    from src.utils.logging import Logger
    Logger().info("message")

    from src.utils.rng import stream
    rng = stream(20240611, 'spectrum', 3)
"""
