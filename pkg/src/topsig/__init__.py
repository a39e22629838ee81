"""Reparametrization-robust topological signatures of periodic-like signals."""

from topsig.persistence import (
    PersistenceDiagram,
    TimeSeries,
    bottleneck_distance,
    diagram_union,
    sublevel_diagram,
)

__version__ = "0.1.0"
