"""Access to the bundled sample corpus.

The package ships a processed Wikipedia-style corpus of 120 documents in
three scientific categories with 11,545 word types, 155,093 word tokens,
309 hyperlinks, and one category tag per document. It is generated
deterministically by `doclayers.synth.wikipedia_like_corpus` (seed in
`WikipediaLikeParams`), so the JSONL file can be rebuilt bit-for-bit.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from .corpus import Corpus, FilterConfig, build_network, read_jsonl
from .network import MultilayerNetwork

BUNDLED_NAME = "wikipedia_sample.jsonl"


def bundled_corpus_path():
    return resources.files("doclayers").joinpath("data", BUNDLED_NAME)


@lru_cache(maxsize=1)
def load_bundled_corpus() -> Corpus:
    with resources.as_file(bundled_corpus_path()) as p:
        return read_jsonl(p)


@lru_cache(maxsize=1)
def load_bundled_network() -> MultilayerNetwork:
    return build_network(load_bundled_corpus(), FilterConfig(min_outlinks=2))
