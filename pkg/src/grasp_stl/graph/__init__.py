"""Reachability graph construction."""
