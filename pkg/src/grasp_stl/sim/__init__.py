"""2D maze simulator."""
