"""Conjugate W_PG / IW_PG priors for covariance and precision matrices
Markov with respect to a decomposable graph."""
from .errors import *  # noqa: F401,F403
from .graph import (Graph, JunctionTree, banded_graph, build_junction_tree,
                    diff_banded_graph, parse_graph_spec, two_clique_graph)
from .chordal import (GMatrix, SparsePrecision, complete, edge_inner_product,
                      logdet_completed, phi, project)
from .priors import (ShapeParams, WpgParams, calibrate_theta, hiw_shape, in_bp,
                     parse_prior, posterior_update, reference_shape)
from .moments import (mean_exists, iwpg_mean, posterior_mean_sigma,
                      reference_mean_omega, wpg_mean)

__version__ = "0.1.0"
