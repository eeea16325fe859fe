"""Shared-control simulation engine for an assistive robotic arm.

Adaptive DoF mapping control: ranked movement suggestions from a scripted
rule engine, matrix-based input mapping with mode switching, threshold-based
attention guidance, a deterministic pick-and-place testbed, CSV
record/replay, and a bidirectional twin bridge for mirroring a physical arm.
"""

__version__ = "0.1.0"
