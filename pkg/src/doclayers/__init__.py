"""Joint clustering of documents, words, and metadata tags.

A document corpus is represented as a three-layer network (hyperlinks,
word tokens, tags) and all node types are clustered simultaneously with a
nonparametric degree-corrected stochastic block model. The package covers
ingestion, exact description-length evaluation, MCMC inference, consensus
partitions, link prediction, topic reports, and corpus scaling
diagnostics, plus a batch CLI.
"""

__version__ = "0.1.0"

from .corpus import (Corpus, Document, FilterConfig, IngestReport,
                     TokenizeConfig, build_network, read_jsonl,
                     subsample_tokens, tokenize)
from .network import MultilayerNetwork, NodeType
from .blocks import BlockState, Partition, from_scratch
from .likelihood import (FitResult, LayerSet, description_length,
                         dl_delta_move, joint_log_posterior_numerator,
                         layer_log_marginal, partition_log_prior)
from .inference import McmcConfig, PosteriorSample, fit_mdl, sample_posterior
from .consensus import (ConsensusResult, OverlapResult, consensus,
                        max_overlap, overlap_matrix)
from .linkpred import (EdgeHoldout, LinkPredictionReport, delta_auc_ttest,
                       evaluate_auc, make_holdout, score_candidate_edges)
from .topics import TopicReport, flag_representation, topic_report
from .scaling import ScalingReport, degree_scaling, mu_sweep

__all__ = [
    "Corpus", "Document", "FilterConfig", "IngestReport", "TokenizeConfig",
    "build_network", "read_jsonl", "subsample_tokens", "tokenize",
    "MultilayerNetwork", "NodeType",
    "BlockState", "Partition", "from_scratch",
    "FitResult", "LayerSet", "description_length", "dl_delta_move",
    "joint_log_posterior_numerator", "layer_log_marginal", "partition_log_prior",
    "McmcConfig", "PosteriorSample", "fit_mdl", "sample_posterior",
    "ConsensusResult", "OverlapResult", "consensus", "max_overlap", "overlap_matrix",
    "EdgeHoldout", "LinkPredictionReport", "delta_auc_ttest", "evaluate_auc",
    "make_holdout", "score_candidate_edges",
    "TopicReport", "flag_representation", "topic_report",
    "ScalingReport", "degree_scaling", "mu_sweep",
    "__version__",
]
