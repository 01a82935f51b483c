"""Strong and distance-t edge coloring by the wasteful nibble."""

from .graph_core import (ColoringReport, ConflictGraph, Graph, codegree, conflict_graph,
                         edge_ring, load_graph, verify_coloring, vertex_ring)
from .schedule import Schedule, build_schedule, integer_view, verify_schedule_properties

__all__ = [
    "ColoringReport", "ConflictGraph", "Graph", "Schedule", "build_schedule", "codegree",
    "conflict_graph", "edge_ring", "integer_view", "load_graph", "verify_coloring",
    "verify_schedule_properties", "vertex_ring",
]
