"""Origami structures with single-end capacitive sensing: fold kinematics, sensor physics and shape regression."""

__version__ = "0.1.0"
