"""Relaxations of mixed-integer multilinear functions."""
