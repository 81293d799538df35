"""Coarse localization by spatiotemporally associated similarity."""

from .buffer import (
    DEFAULT_WINDOW,
    STATIONARY_THRESHOLD_M,
    QueryBuffer,
    QueryEntry,
    SimilarityMatrix,
    push_query,
    similarity_row,
)
from .log import RETRIEVAL_HEADER, RetrievalLogRow, read_retrieval_log, write_retrieval_log
from .particles import (
    DEFAULT_OFFSETS,
    Particle,
    ParticleSet,
    gen_particles,
    virtual_positions,
    virtual_trajectory,
)
from .retrieval import (
    CLUSTER_LINK_M,
    DEFAULT_TOP_N,
    RetrievalResult,
    best_per_frame,
    particle_scores,
    rank_of,
    retrieve_cluster,
    retrieve_sas,
    retrieve_single,
    sas_distance,
)

__all__ = [
    "CLUSTER_LINK_M",
    "DEFAULT_OFFSETS",
    "DEFAULT_TOP_N",
    "DEFAULT_WINDOW",
    "RETRIEVAL_HEADER",
    "STATIONARY_THRESHOLD_M",
    "Particle",
    "ParticleSet",
    "QueryBuffer",
    "QueryEntry",
    "RetrievalLogRow",
    "RetrievalResult",
    "SimilarityMatrix",
    "best_per_frame",
    "gen_particles",
    "particle_scores",
    "push_query",
    "rank_of",
    "read_retrieval_log",
    "retrieve_cluster",
    "retrieve_sas",
    "retrieve_single",
    "sas_distance",
    "similarity_row",
    "virtual_positions",
    "virtual_trajectory",
    "write_retrieval_log",
]
