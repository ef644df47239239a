"""Three-layer document network: hyperlinks, word tokens, metadata tags.

Node index space is global: documents first, then word types, then tags.
Layers:
  H -- directed simple graph on documents (hyperlinks),
  T -- undirected bipartite multigraph document x word type, integer edge
       multiplicities equal to token counts,
  M -- undirected bipartite simple graph document x tag.

Networks are immutable after construction and safe to share between
concurrent consumers.
"""

from __future__ import annotations

import gzip
import json
from enum import IntEnum

import numpy as np

from .errors import CorpusFormatError

FORMAT_NAME = "doclayers-network"
FORMAT_VERSION = 1


class NodeType(IntEnum):
    DOC = 0
    WORD = 1
    TAG = 2


class Csr:
    """Compact neighbor lists with per-node cumulative weights.

    `cum` holds the running multiplicity total inside each node's slice so a
    weighted neighbor can be drawn with one binary search.
    """

    __slots__ = ("indptr", "nbr", "wgt", "cum", "deg")

    def __init__(self, n_nodes: int, src, dst, wgt):
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        wgt = np.asarray(wgt, dtype=np.int64)
        order = np.argsort(src, kind="stable")
        src, dst, wgt = src[order], dst[order], wgt[order]
        counts = np.bincount(src, minlength=n_nodes).astype(np.int64)
        self.indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=self.indptr[1:])
        self.nbr = dst
        self.wgt = wgt
        self.deg = np.zeros(n_nodes, dtype=np.int64)
        np.add.at(self.deg, src, wgt)
        # cumulative multiplicities restarted at each node's slice
        self.cum = np.zeros_like(wgt)
        if len(wgt):
            run = np.cumsum(wgt)
            starts = self.indptr[:-1]
            base = np.where(starts > 0, run[starts - 1], 0)
            self.cum = run - np.repeat(base, counts)


class MultilayerNetwork:
    """Immutable container for the three layers plus node registries."""

    def __init__(self, doc_ids, words, tags, h_edges, t_edges, m_edges,
                 ingest_report=None):
        self.doc_ids = list(doc_ids)
        self.words = list(words)
        self.tags = list(tags)
        self.ingest_report = ingest_report

        h = np.asarray(h_edges, dtype=np.int64).reshape(-1, 2)
        t = np.asarray(t_edges, dtype=np.int64).reshape(-1, 3)
        m = np.asarray(m_edges, dtype=np.int64).reshape(-1, 2)
        self.h_src, self.h_dst = h[:, 0].copy(), h[:, 1].copy()
        self.t_doc, self.t_word, self.t_count = t[:, 0].copy(), t[:, 1].copy(), t[:, 2].copy()
        self.m_doc, self.m_tag = m[:, 0].copy(), m[:, 1].copy()
        self._validate()

        D, V, G = self.n_docs, self.n_words, self.n_tags
        self.n_nodes = D + V + G
        self.node_type = np.concatenate([
            np.full(D, NodeType.DOC, dtype=np.int8),
            np.full(V, NodeType.WORD, dtype=np.int8),
            np.full(G, NodeType.TAG, dtype=np.int8),
        ])

        ones_h = np.ones(len(self.h_src), dtype=np.int64)
        ones_m = np.ones(len(self.m_doc), dtype=np.int64)
        word_g = self.t_word + D
        tag_g = self.m_tag + D + V
        self.h_out = Csr(self.n_nodes, self.h_src, self.h_dst, ones_h)
        self.h_in = Csr(self.n_nodes, self.h_dst, self.h_src, ones_h)
        self.t_adj = Csr(self.n_nodes,
                         np.concatenate([self.t_doc, word_g]),
                         np.concatenate([word_g, self.t_doc]),
                         np.concatenate([self.t_count, self.t_count]))
        self.m_adj = Csr(self.n_nodes,
                         np.concatenate([self.m_doc, tag_g]),
                         np.concatenate([tag_g, self.m_doc]),
                         np.concatenate([ones_m, ones_m]))

    # -- basic counts -------------------------------------------------

    @property
    def n_docs(self):
        return len(self.doc_ids)

    @property
    def n_words(self):
        return len(self.words)

    @property
    def n_tags(self):
        return len(self.tags)

    @property
    def n_hyperlinks(self):
        return len(self.h_src)

    @property
    def n_tokens(self):
        return int(self.t_count.sum())

    @property
    def n_tag_edges(self):
        return len(self.m_doc)

    def global_word(self, w):
        return self.n_docs + w

    def global_tag(self, g):
        return self.n_docs + self.n_words + g

    def node_name(self, i):
        D, V = self.n_docs, self.n_words
        if i < D:
            return self.doc_ids[i]
        if i < D + V:
            return self.words[i - D]
        return self.tags[i - D - V]

    def _validate(self):
        D, V, G = self.n_docs, self.n_words, self.n_tags
        if len(self.h_src) and (self.h_src.max() >= D or self.h_dst.max() >= D):
            raise CorpusFormatError("hyperlink endpoint out of range")
        if len(self.h_src) and np.any(self.h_src == self.h_dst):
            raise CorpusFormatError("hyperlink self-loop")
        if len(self.t_doc):
            if self.t_doc.max() >= D or self.t_word.max() >= V:
                raise CorpusFormatError("text edge endpoint out of range")
            if self.t_count.min() < 1:
                raise CorpusFormatError("text edge with multiplicity < 1")
        if len(self.m_doc) and (self.m_doc.max() >= D or self.m_tag.max() >= G):
            raise CorpusFormatError("tag edge endpoint out of range")

    # -- serialization ------------------------------------------------

    def to_dict(self, canonical=False):
        h = np.stack([self.h_src, self.h_dst], axis=1)
        t = np.stack([self.t_doc, self.t_word, self.t_count], axis=1)
        m = np.stack([self.m_doc, self.m_tag], axis=1)
        if canonical:
            h = h[np.lexsort((h[:, 1], h[:, 0]))]
            t = t[np.lexsort((t[:, 1], t[:, 0]))]
            m = m[np.lexsort((m[:, 1], m[:, 0]))]
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "docs": self.doc_ids,
            "words": self.words,
            "tags": self.tags,
            "h_edges": h.tolist(),
            "t_edges": t.tolist(),
            "m_edges": m.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != FORMAT_NAME:
            raise CorpusFormatError("not a %s document" % FORMAT_NAME)
        if d.get("version") != FORMAT_VERSION:
            raise CorpusFormatError("unsupported network format version %r" % d.get("version"))
        return cls(d["docs"], d["words"], d["tags"],
                   d["h_edges"] or np.zeros((0, 2), dtype=np.int64),
                   d["t_edges"] or np.zeros((0, 3), dtype=np.int64),
                   d["m_edges"] or np.zeros((0, 2), dtype=np.int64))

    def save(self, path, canonical=False):
        payload = json.dumps(self.to_dict(canonical=canonical))
        path = str(path)
        if path.endswith(".gz"):
            with gzip.open(path, "wt", encoding="utf-8") as fh:
                fh.write(payload)
        else:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(payload)

    @classmethod
    def load(cls, path):
        path = str(path)
        if path.endswith(".gz"):
            with gzip.open(path, "rt", encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def equals(self, other):
        """Exact structural equality (same registries, same edge multiset)."""
        if (self.doc_ids, self.words, self.tags) != (other.doc_ids, other.words, other.tags):
            return False
        def key(*cols):
            a = np.stack(cols, axis=1)
            return a[np.lexsort(tuple(a[:, i] for i in reversed(range(a.shape[1]))))]
        return (np.array_equal(key(self.h_src, self.h_dst), key(other.h_src, other.h_dst))
                and np.array_equal(key(self.t_doc, self.t_word, self.t_count),
                                   key(other.t_doc, other.t_word, other.t_count))
                and np.array_equal(key(self.m_doc, self.m_tag), key(other.m_doc, other.m_tag)))

    def replace_h(self, h_edges):
        """Copy of the network with a different hyperlink edge list."""
        t = np.stack([self.t_doc, self.t_word, self.t_count], axis=1)
        m = np.stack([self.m_doc, self.m_tag], axis=1)
        return MultilayerNetwork(self.doc_ids, self.words, self.tags, h_edges, t, m)

    def __repr__(self):
        return ("MultilayerNetwork(docs=%d, words=%d, tags=%d, "
                "hyperlinks=%d, tokens=%d, tag_edges=%d)" %
                (self.n_docs, self.n_words, self.n_tags,
                 self.n_hyperlinks, self.n_tokens, self.n_tag_edges))
