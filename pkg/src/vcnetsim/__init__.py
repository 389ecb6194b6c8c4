"""Phit-level simulator and analysis toolkit for virtual-channel management
in low-diameter networks (HyperX, Dragonfly, Dragonfly+)."""

__version__ = "0.1.0"
