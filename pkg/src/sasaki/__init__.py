"""
The unit tangent bundle with the Sasaki metric.
"""
