"""Secure current-pattern design for continuous-aperture downlinks."""
