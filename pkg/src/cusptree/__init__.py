"""Cusped spaces of relatively hyperbolic groups at desk scale.

Cayley balls and their cusped/coned spaces, four-point hyperbolicity,
quasi-isometry measurements and the cut-point / cut-pair tree.
"""
__version__ = "0.1.0"

from .boundary_tree import CombinedTree, block_cut_tree, combined_tree, cut_vertices
from .cusp import CuspedSpace, Horoball, build_coned_space, build_cusped_space, build_horoball
from .errors import BudgetError, CuspTreeError, DomainError, InputError, UnsupportedFamilyError
from .groups import GroupModel, PeripheralSpec, cayley_ball, coset_pieces
from .hyperbolicity import four_point_delta
from .metric_graph import MetricGraph, distance_matrix

__all__ = [
    "BudgetError", "CombinedTree", "CuspTreeError", "CuspedSpace", "DomainError", "GroupModel", "Horoball",
    "InputError", "MetricGraph", "PeripheralSpec", "UnsupportedFamilyError", "block_cut_tree",
    "build_coned_space", "build_cusped_space", "build_horoball", "cayley_ball", "combined_tree",
    "coset_pieces", "cut_vertices", "distance_matrix", "four_point_delta",
]
