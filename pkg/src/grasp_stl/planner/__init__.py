"""STL graph search."""
