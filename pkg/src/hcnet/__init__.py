"""Link prediction on relational hypergraphs via conditional message passing.

Subpackages cover the data model (hypergraph), exact color-refinement
tests (refine), graded modal logic and its network compiler (logic), the
numeric models (nn, autodiff), training (train), filtered-ranking
evaluation (evalrank), the synthetic expressiveness experiment (synth),
and a CLI (cli). The suites module exposes every theorem as a seeded
executable check.
"""

from .hypergraph import (
    HyperEdge,
    Query,
    Relation,
    RelationalHypergraph,
    build_graph,
    load_dataset,
)
from .nn import ModelConfig, ModelParams, init_params
from .train import TrainConfig

__all__ = [
    "HyperEdge",
    "Query",
    "Relation",
    "RelationalHypergraph",
    "build_graph",
    "load_dataset",
    "ModelConfig",
    "ModelParams",
    "init_params",
    "TrainConfig",
]

__version__ = "0.1.0"
