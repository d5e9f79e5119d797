"""STL grammar and structural analysis."""
