"""Engagement modeling for threaded discussions.

Pipeline: parse a JSON-lines corpus, build a user co-occurrence matrix,
factorize it into user vectors, cluster users, and train curvature-based
(or baseline) models that predict which clusters engage next and how fast
a discussion grows.
"""

__version__ = "0.1.0"
