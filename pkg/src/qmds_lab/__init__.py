"""Qudit state-vector laboratory for quantum MDS codes and distributed erasure repair."""

from __future__ import annotations

__version__ = "0.1.0"
