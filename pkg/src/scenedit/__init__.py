"""Reasoning-based image editing pipeline.

Builds a structured scene representation of an image from pluggable
perception backends, refines it under LLM guidance until the edit target
and an explicit instruction are resolved, executes region inpainting
(including multi-step sequences), and evaluates results.
"""

__version__ = "0.1.0"
