"""Graph-based STL planning over offline reachability graphs."""
