"""Partition alignment, consensus, and overlap matrices.

Maximum overlap solves the label-assignment problem exactly, padding the
smaller label set with empty labels. The consensus partition iterates the
double maximization — re-align every input partition to the running
consensus, then take per-node majority votes — until the agreement count
stops improving. Uncertainty sigma is one minus the average per-node,
per-partition agreement with the consensus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import NodeSetMismatch, TooFewPartitions


def _as_labels(x):
    from .blocks import Partition
    from .network import NodeType
    if isinstance(x, Partition):
        return x.project(NodeType.DOC)
    arr = np.asarray(x, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    return arr


def _contingency(x, y):
    lx = int(x.max()) + 1
    ly = int(y.max()) + 1
    m = np.zeros((lx, ly), dtype=np.int64)
    np.add.at(m, (x, y), 1)
    return m


@dataclass
class OverlapResult:
    raw_overlap: int
    normalized_overlap: float
    label_map: dict  # label of y -> label of x

    def __float__(self):
        return self.normalized_overlap


def max_overlap(x, y) -> OverlapResult:
    """Best node-agreement count over bijective label matchings.

    Accepts Partition objects (document projection) or plain label arrays
    over a common node set.
    """
    xa, ya = _as_labels(x), _as_labels(y)
    if xa.shape != ya.shape:
        raise NodeSetMismatch("partitions cover %d vs %d nodes"
                              % (len(xa), len(ya)))
    m = _contingency(xa, ya)
    size = max(m.shape)
    cost = np.zeros((size, size), dtype=np.int64)
    cost[:m.shape[0], :m.shape[1]] = m
    rows, cols = linear_sum_assignment(cost, maximize=True)
    raw = int(cost[rows, cols].sum())
    label_map = {int(c): int(r) for r, c in zip(rows, cols) if c < m.shape[1]}
    return OverlapResult(raw, raw / len(xa), label_map)


@dataclass
class ConsensusResult:
    partition: np.ndarray          # consensus labels over the node set
    sigma: float
    node_agreement: np.ndarray     # per-node average agreement in [0, 1]
    n_partitions: int
    n_iterations: int

    @property
    def B(self):
        return int(self.partition.max()) + 1 if len(self.partition) else 0


def _align_to(reference, y):
    """Map y's labels onto reference's label space by exact assignment."""
    m = _contingency(reference, y)
    size = max(m.shape)
    cost = np.zeros((size, size), dtype=np.int64)
    cost[:m.shape[0], :m.shape[1]] = m
    rows, cols = linear_sum_assignment(cost, maximize=True)
    mapping = np.zeros(size, dtype=np.int64)
    mapping[cols] = rows
    return mapping[y]


def consensus(partitions, max_iter: int = 100) -> ConsensusResult:
    """Consensus partition through iterated alignment and majority vote."""
    labels = [_as_labels(p) for p in partitions]
    if len(labels) < 2:
        raise TooFewPartitions("consensus needs at least 2 partitions")
    n = len(labels[0])
    for lab in labels[1:]:
        if len(lab) != n:
            raise NodeSetMismatch("partitions cover different node sets")

    # start from the input with the median number of labels
    counts = [int(lab.max()) + 1 for lab in labels]
    start = int(np.argsort(counts, kind="stable")[len(counts) // 2])
    bhat = labels[start].copy()

    objective = -1
    it = 0
    for it in range(1, max_iter + 1):
        aligned = [_align_to(bhat, lab) for lab in labels]
        width = max(int(lab.max()) for lab in aligned) + 1
        votes = np.zeros((n, width), dtype=np.int64)
        for lab in aligned:
            np.add.at(votes, (np.arange(n), lab), 1)
        new_obj = int(votes.max(axis=1).sum())
        # ties break toward the lowest label index (argmax does exactly that)
        bhat_new = votes.argmax(axis=1)
        if new_obj <= objective:
            break
        objective = new_obj
        bhat = bhat_new
    aligned = [_align_to(bhat, lab) for lab in labels]
    agree = np.zeros(n, dtype=np.float64)
    for lab in aligned:
        agree += lab == bhat
    agree /= len(labels)
    sigma = 1.0 - float(agree.mean())
    # compact consensus labels
    uniq, bhat = np.unique(bhat, return_inverse=True)
    return ConsensusResult(bhat.astype(np.int64), sigma, agree,
                           len(labels), it)


@dataclass
class OverlapMatrix:
    models: list
    mean: np.ndarray
    std: np.ndarray

    def to_rows(self):
        rows = []
        for i, a in enumerate(self.models):
            for j, b in enumerate(self.models):
                rows.append((a, b, float(self.mean[i, j]), float(self.std[i, j])))
        return rows


def overlap_matrix(model_runs: dict) -> OverlapMatrix:
    """Mean and std of pairwise normalized overlaps between model classes.

    model_runs maps a model name to a list of partitions (or document label
    arrays). Within a class all unordered pairs of distinct runs enter; between
    classes, all cross pairs.
    """
    models = list(model_runs.keys())
    k = len(models)
    mean = np.zeros((k, k))
    std = np.zeros((k, k))
    labels = {m: [_as_labels(p) for p in runs] for m, runs in model_runs.items()}
    for i, a in enumerate(models):
        for j, b in enumerate(models):
            if j < i:
                continue
            vals = []
            if i == j:
                runs = labels[a]
                for u in range(len(runs)):
                    for v in range(u + 1, len(runs)):
                        vals.append(max_overlap(runs[u], runs[v]).normalized_overlap)
            else:
                for u in labels[a]:
                    for v in labels[b]:
                        vals.append(max_overlap(u, v).normalized_overlap)
            if not vals:
                raise TooFewPartitions("need >= 2 runs per model class")
            mean[i, j] = mean[j, i] = float(np.mean(vals))
            std[i, j] = std[j, i] = float(np.std(vals))
    return OverlapMatrix(models, mean, std)
