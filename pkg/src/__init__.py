"""Source package for grasp-stl."""
