"""Exception types shared across the package."""


class DoclayersError(Exception):
    """Base class for all package errors."""


class CorpusFormatError(DoclayersError):
    """Malformed corpus input (bad JSON line, duplicate doc id, missing fields)."""


class EmptyNetwork(DoclayersError):
    """No documents survive filtering / the requested layers carry no nodes."""


class TypeMismatch(DoclayersError):
    """A node was assigned to a group holding a different node type."""


class UncoveredNode(DoclayersError):
    """A node participating in an active layer has no group assignment."""


class NodeSetMismatch(DoclayersError):
    """Two partitions being compared do not cover the same node set."""


class TooFewPartitions(DoclayersError):
    """Consensus requires at least two partitions."""


class CandidateAlreadyPresent(DoclayersError):
    """A link-prediction candidate edge already exists in the observed network."""


class EmptyHoldout(DoclayersError):
    """Holdout fraction removes no edges or leaves the network empty."""


class DegenerateVariance(DoclayersError):
    """Paired t-test with zero variance of the differences."""


class SampleTooLarge(DoclayersError):
    """Requested document sample exceeds the corpus size."""


class MissingTextLayer(DoclayersError):
    """Topic report requested without a text layer / word groups."""


class ConfigInvalid(DoclayersError):
    """Run configuration failed validation."""
