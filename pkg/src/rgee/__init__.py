"""Refined graph encoder embedding: one-hot encoder embedding, LDA self-training
and latent-community recovery, with SBM simulation and evaluation tools."""

from .encoder import Embedding, gee_embed, one_hot_weights
from .evaluate import kfold_cv, latent_recovery, lda_classify, multiplex_embed
from .graph import Dataset, SparseGraph, load_edge_list, to_undirected
from .refine import RefineConfig, RefineResult, gee_lda, refine
from .sbm import builtin_model, sample_sbm

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Embedding",
    "RefineConfig",
    "RefineResult",
    "SparseGraph",
    "builtin_model",
    "gee_embed",
    "gee_lda",
    "kfold_cv",
    "latent_recovery",
    "lda_classify",
    "load_edge_list",
    "multiplex_embed",
    "one_hot_weights",
    "refine",
    "sample_sbm",
    "to_undirected",
]
