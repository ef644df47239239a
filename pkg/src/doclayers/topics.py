"""Word groups as topics: mixture proportions and representation scores.

For document group i and topic (word group) t, with n_i^t word tokens of
topic t inside group i:

    f_i^t    = n_i^t / sum_t' n_i^t'          (rows sum to one)
    <f^t>    = sum_i n_i^t / sum_{t',j} n_j^t' (global topic share)
    tau_i^t  = (f_i^t - <f^t>) / <f^t>         (over/under-representation)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingTextLayer
from .network import NodeType

OVER, NEUTRAL, UNDER = 1, 0, -1


@dataclass
class TopicReport:
    n_doc_groups: int
    n_topics: int
    counts: np.ndarray        # (doc groups x topics) token tallies
    f: np.ndarray             # mixture proportions per document group
    f_global: np.ndarray      # global topic shares
    tau: np.ndarray           # normalized representation
    top_words: list           # per topic, words by in-topic frequency
    doc_group_of: np.ndarray  # document -> group
    topic_of_word: np.ndarray # word -> topic

    def to_rows(self):
        rows = []
        for i in range(self.n_doc_groups):
            for t in range(self.n_topics):
                rows.append((i, t, int(self.counts[i, t]),
                             float(self.f[i, t]), float(self.tau[i, t])))
        return rows


def topic_report(network, partition, top_n: int = 20) -> TopicReport:
    """Tally topics against document groups from the text layer."""
    if network.n_words == 0 or network.n_tokens == 0:
        raise MissingTextLayer("network has no text layer tokens")
    doc_labels = partition.project(NodeType.DOC)
    word_labels = partition.project(NodeType.WORD)
    n_groups = int(doc_labels.max()) + 1
    n_topics = int(word_labels.max()) + 1

    counts = np.zeros((n_groups, n_topics), dtype=np.int64)
    np.add.at(counts, (doc_labels[network.t_doc],
                       word_labels[network.t_word]), network.t_count)

    row_tot = counts.sum(axis=1, keepdims=True)
    f = np.divide(counts, row_tot, out=np.zeros_like(counts, dtype=float),
                  where=row_tot > 0)
    f_global = counts.sum(axis=0) / max(counts.sum(), 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(f_global > 0, (f - f_global) / f_global, 0.0)

    word_freq = np.zeros(network.n_words, dtype=np.int64)
    np.add.at(word_freq, network.t_word, network.t_count)
    top_words = []
    for t in range(n_topics):
        members = np.nonzero(word_labels == t)[0]
        ranked = sorted(members, key=lambda w: (-word_freq[w], network.words[w]))
        top_words.append([network.words[w] for w in ranked[:top_n]])
    return TopicReport(n_groups, n_topics, counts, f, f_global, tau,
                       top_words, doc_labels, word_labels)


def flag_representation(tau, threshold: float = 0.2) -> np.ndarray:
    """Classify each (group, topic) cell as over / under / neutral.

    Returns +1 where tau >= threshold, -1 where tau <= -threshold, else 0.
    """
    tau = np.asarray(tau, dtype=np.float64)
    flags = np.zeros(tau.shape, dtype=np.int64)
    flags[tau >= threshold] = OVER
    flags[tau <= -threshold] = UNDER
    return flags
