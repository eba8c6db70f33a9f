"""CONGEST-model simulator and distributed approximate S-MRCT algorithms."""
from .graph import Graph, TerminalSet, diameter, eccentricity, generate, load_edge_list, save_edge_list
from .mrct import MrctResult, run_deterministic, run_randomized, sampling_params
from .sim import ExecutionReport, NodeProgram, RoundEngine

__all__ = [
    "Graph", "TerminalSet", "generate", "load_edge_list", "save_edge_list", "eccentricity", "diameter",
    "NodeProgram", "RoundEngine", "ExecutionReport",
    "run_deterministic", "run_randomized", "sampling_params", "MrctResult",
]
__version__ = "0.1.0"
