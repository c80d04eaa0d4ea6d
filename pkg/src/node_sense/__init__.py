"""node-sense: coverage estimation, curve fitting and cell simulation for dynamic networks."""
import logging

__version__ = "0.1.0"

__all__ = [
    "mc_estimation",
    "coverage",
    "curve_fit",
    "exp_models",
    "position_prediction",
    "cell_network",
]

logging.getLogger("node_sense").addHandler(logging.NullHandler())
