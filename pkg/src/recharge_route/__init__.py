"""Multi-depot recharging TSP: O(log D) approximation, bundling heuristic, exact oracle."""

from .core import (DepotGraph, SolveReport, Step, Walk, build_depot_graph, component_feasibility,
                   nearest_depot, validate_walk, walk_cost)
from .errors import InfeasibleError, SearchTimeout, TsplibParseError, ValidationError
from .exact import SearchLimits, exact_min_length, exact_min_recharges, exact_segment_cover, exact_tsp
from .heuristic import HeuristicConfig, heuristic_algorithm
from .instance import (DepotSelection, Instance, InstanceConfig, RawInstance, WeightMode, build_instance,
                       instance_from_matrix, instance_from_points, parse_tsplib, read_tsplib)
from .route_approx import approximation_algorithm, christofides_tsp
from .segment_cover import compute_partition, min_segment_cover, unrooted_path_cover

__version__ = "0.1.0"
