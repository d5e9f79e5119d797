"""Template benchmark harness."""
