"""Corpus ingestion and construction of the three-layer network.

Input is a JSON-lines file, one object per document with fields
``doc_id`` (or ``id``), ``text`` or pre-tokenized ``tokens``, ``links``,
and ``tags``. Building the network applies, in order: resolve outlinks
(dangling targets dropped, duplicates and self-links collapsed), drop
documents with fewer than ``min_outlinks`` surviving hyperlinks, keep the
largest weakly connected component of the hyperlink graph, and rebuild the
text and tag layers over the surviving documents.

Stopwords are never removed: downstream models absorb them into their own
word group.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import CorpusFormatError, EmptyNetwork
from .network import MultilayerNetwork

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)

# (suffix, replacement, minimum stem length) applied once, longest match first.
_SUFFIX_RULES = (
    ("ization", "ize", 3), ("ational", "ate", 3), ("fulness", "ful", 3),
    ("iveness", "ive", 3), ("ousness", "ous", 3), ("tional", "tion", 3),
    ("ations", "ate", 3), ("ments", "ment", 3), ("ities", "ity", 3),
    ("ation", "ate", 3), ("ness", "", 4), ("ing", "", 4),
    ("sses", "ss", 3), ("ies", "y", 3), ("ied", "y", 3),
    ("ed", "", 4), ("ly", "", 4), ("es", "e", 4), ("s", "", 4),
)


@dataclass
class TokenizeConfig:
    stem: bool = False


def _strip_suffix(token: str) -> str:
    for suffix, repl, min_stem in _SUFFIX_RULES:
        if token.endswith(suffix) and len(token) - len(suffix) >= min_stem:
            return token[: len(token) - len(suffix)] + repl
    return token


def tokenize(raw_text: str, config: TokenizeConfig | None = None) -> list[str]:
    """Lowercased word tokens split on Unicode word boundaries.

    Punctuation and underscores separate tokens; empty tokens never occur.
    With ``config.stem`` a deterministic suffix-stripping pass (a light
    Porter-style stemmer) is applied to every token.
    """
    config = config or TokenizeConfig()
    tokens = _WORD_RE.findall(raw_text.lower())
    if config.stem:
        tokens = [_strip_suffix(t) for t in tokens]
    return tokens


@dataclass
class Document:
    doc_id: str
    tokens: list[str]
    outlinks: list[str]
    tags: list[str]

    def __post_init__(self):
        # outlinks and tags are sets per document; tokens keep multiplicity
        raw = len(self.outlinks)
        self.outlinks = list(dict.fromkeys(self.outlinks))
        self.duplicate_links = raw - len(self.outlinks)
        self.tags = list(dict.fromkeys(self.tags))


class Corpus:
    """A document collection with derived vocabulary and counts."""

    def __init__(self, documents: list[Document]):
        seen = set()
        for d in documents:
            if d.doc_id in seen:
                raise CorpusFormatError("duplicate doc_id %r" % d.doc_id)
            seen.add(d.doc_id)
        self.documents = list(documents)

    @property
    def vocabulary(self) -> set:
        return {w for d in self.documents for w in d.tokens}

    @property
    def tag_set(self) -> set:
        return {t for d in self.documents for t in d.tags}

    @property
    def token_count(self) -> int:
        return sum(len(d.tokens) for d in self.documents)

    def __len__(self):
        return len(self.documents)


def read_jsonl(path, tokenize_config: TokenizeConfig | None = None) -> Corpus:
    """Load a corpus from a JSON-lines file (UTF-8)."""
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError("line %d: invalid JSON (%s)" % (lineno, exc)) from exc
            doc_id = obj.get("doc_id", obj.get("id"))
            if doc_id is None:
                raise CorpusFormatError("line %d: missing doc_id" % lineno)
            if "tokens" in obj:
                tokens = [str(t) for t in obj["tokens"]]
            elif "text" in obj:
                tokens = tokenize(obj["text"], tokenize_config)
            else:
                tokens = []
            docs.append(Document(str(doc_id), tokens,
                                 [str(x) for x in obj.get("links", [])],
                                 [str(x) for x in obj.get("tags", [])]))
    return Corpus(docs)


@dataclass
class FilterConfig:
    min_outlinks: int = 2
    largest_component: bool = True


@dataclass
class IngestReport:
    documents_read: int = 0
    documents_kept: int = 0
    dropped_min_outlinks: int = 0
    dropped_disconnected: int = 0
    dangling_links: int = 0
    self_links: int = 0
    duplicate_links: int = 0
    hyperlinks: int = 0
    tokens: int = 0
    vocabulary: int = 0
    tag_edges: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _weak_components(n, src, dst):
    """Connected-component labels of the undirected view of (src, dst)."""
    labels = np.full(n, -1, dtype=np.int64)
    adj = [[] for _ in range(n)]
    for s, t in zip(src, dst):
        adj[s].append(t)
        adj[t].append(s)
    comp = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        stack = [start]
        labels[start] = comp
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if labels[v] < 0:
                    labels[v] = comp
                    stack.append(v)
        comp += 1
    return labels, comp


def build_network(corpus: Corpus, filters: FilterConfig | None = None) -> MultilayerNetwork:
    """Construct the three-layer network from a corpus.

    Raises EmptyNetwork if no document survives filtering. The ingest
    report is attached to the returned network as ``ingest_report``.
    """
    filters = filters or FilterConfig()
    report = IngestReport(documents_read=len(corpus.documents))

    index = {d.doc_id: i for i, d in enumerate(corpus.documents)}
    report.duplicate_links = sum(getattr(d, "duplicate_links", 0)
                                 for d in corpus.documents)
    resolved = []
    for d in corpus.documents:
        targets = []
        for link in d.outlinks:
            j = index.get(link)
            if j is None:
                report.dangling_links += 1
            elif corpus.documents[j].doc_id == d.doc_id:
                report.self_links += 1
            else:
                targets.append(j)
        resolved.append(targets)

    keep = [i for i, t in enumerate(resolved) if len(t) >= filters.min_outlinks]
    report.dropped_min_outlinks = len(corpus.documents) - len(keep)
    if not keep:
        raise EmptyNetwork("no document has >= %d outlinks" % filters.min_outlinks)

    if filters.largest_component and len(keep) > 1:
        pos = {i: k for k, i in enumerate(keep)}
        src, dst = [], []
        for i in keep:
            for j in resolved[i]:
                if j in pos:
                    src.append(pos[i])
                    dst.append(pos[j])
        labels, ncomp = _weak_components(len(keep), src, dst)
        if ncomp > 1:
            sizes = np.bincount(labels, minlength=ncomp)
            big = int(np.argmax(sizes))
            keep = [i for k, i in enumerate(keep) if labels[k] == big]
        report.dropped_disconnected = (report.documents_read
                                       - report.dropped_min_outlinks - len(keep))

    surviving = [corpus.documents[i] for i in keep]
    new_index = {d.doc_id: i for i, d in enumerate(surviving)}

    words = sorted({w for d in surviving for w in d.tokens})
    tags = sorted({t for d in surviving for t in d.tags})
    word_index = {w: i for i, w in enumerate(words)}
    tag_index = {t: i for i, t in enumerate(tags)}

    h_edges = []
    for i, d in enumerate(surviving):
        for link in d.outlinks:
            j = new_index.get(link)
            if j is not None and j != i:
                h_edges.append((i, j))
    t_edges = []
    for i, d in enumerate(surviving):
        counts = {}
        for w in d.tokens:
            counts[w] = counts.get(w, 0) + 1
        for w, c in sorted(counts.items()):
            t_edges.append((i, word_index[w], c))
    m_edges = [(i, tag_index[t]) for i, d in enumerate(surviving) for t in d.tags]

    report.documents_kept = len(surviving)
    report.hyperlinks = len(h_edges)
    report.tokens = sum(len(d.tokens) for d in surviving)
    report.vocabulary = len(words)
    report.tag_edges = len(m_edges)

    net = MultilayerNetwork([d.doc_id for d in surviving], words, tags,
                            np.array(h_edges, dtype=np.int64).reshape(-1, 2),
                            np.array(t_edges, dtype=np.int64).reshape(-1, 3),
                            np.array(m_edges, dtype=np.int64).reshape(-1, 2),
                            ingest_report=report)
    return net


def subsample_tokens(network: MultilayerNetwork, mu: float,
                     seed=None) -> MultilayerNetwork:
    """Keep a uniform random subset of exactly round(mu * M) word tokens.

    Hyperlink and tag layers are untouched; word types left with zero
    tokens are removed from the registry. mu=1 returns the input network.
    """
    if not 0.0 <= mu <= 1.0:
        raise ValueError("mu must lie in [0, 1], got %r" % mu)
    if mu == 1.0:
        return network
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    total = network.n_tokens
    n_keep = int(np.floor(mu * total + 0.5))  # round half up
    if n_keep >= total:
        return network
    counts = network.t_count.astype(np.int64)
    if n_keep == 0:
        kept = np.zeros_like(counts)
    else:
        kept = rng.multivariate_hypergeometric(counts, n_keep).astype(np.int64)
    mask = kept > 0
    used_words = np.unique(network.t_word[mask])
    remap = -np.ones(network.n_words, dtype=np.int64)
    remap[used_words] = np.arange(len(used_words))
    t_edges = np.stack([network.t_doc[mask],
                        remap[network.t_word[mask]],
                        kept[mask]], axis=1)
    words = [network.words[w] for w in used_words]
    h = np.stack([network.h_src, network.h_dst], axis=1)
    m = np.stack([network.m_doc, network.m_tag], axis=1)
    return MultilayerNetwork(network.doc_ids, words, network.tags, h, t_edges, m)
