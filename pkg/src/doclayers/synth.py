"""Synthetic corpora and networks: benchmarks and the bundled sample.

Includes planted-partition benchmark generators (for recovery tests),
small random multilayer networks (for exhaustive and incremental checks),
Zipf corpora with a known type-token exponent, and a Wikipedia-style
corpus generator that reproduces the bundled sample's global statistics
exactly: 120 documents in three subject areas, 11,545 word types, 155,093
word tokens, 309 hyperlinks, and one category tag per document.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, Document
from .network import MultilayerNetwork


# ---------------------------------------------------------------------------
# Random small networks.
# ---------------------------------------------------------------------------

def random_multilayer(rng, n_docs=5, n_words=4, n_tags=3, p_h=0.35,
                      t_pairs=0.5, t_lambda=1.5, p_m=0.4) -> MultilayerNetwork:
    """A random three-layer network for oracle tests."""
    h = [(i, j) for i in range(n_docs) for j in range(n_docs)
         if i != j and rng.random() < p_h]
    t = []
    for d in range(n_docs):
        for w in range(n_words):
            if rng.random() < t_pairs:
                c = 1 + rng.poisson(t_lambda)
                t.append((d, w, int(c)))
    m = [(d, g) for d in range(n_docs) for g in range(n_tags)
         if rng.random() < p_m]
    used_w = sorted({w for _, w, _ in t})
    remap = {w: i for i, w in enumerate(used_w)}
    t = [(d, remap[w], c) for d, w, c in t]
    used_g = sorted({g for _, g in m})
    gmap = {g: i for i, g in enumerate(used_g)}
    m = [(d, gmap[g]) for d, g in m]
    return MultilayerNetwork(
        ["d%d" % i for i in range(n_docs)],
        ["w%d" % i for i in range(len(used_w))],
        ["g%d" % i for i in range(len(used_g))],
        np.array(h, dtype=np.int64).reshape(-1, 2),
        np.array(t, dtype=np.int64).reshape(-1, 3),
        np.array(m, dtype=np.int64).reshape(-1, 2))


def planted_two_block(rng, n_docs=40, p_in=0.4, p_out=0.02,
                      with_text=True, words_per_block=200,
                      tokens_per_doc=80, zipf_a=1.3, own_share=0.85):
    """Directed two-block benchmark, optionally with an aligned text layer.

    Returns (network, true_document_labels).
    """
    half = n_docs // 2
    labels = np.array([0] * half + [1] * (n_docs - half), dtype=np.int64)
    h = []
    for i in range(n_docs):
        for j in range(n_docs):
            if i == j:
                continue
            p = p_in if labels[i] == labels[j] else p_out
            if rng.random() < p:
                h.append((i, j))
    t = []
    if with_text:
        ranks = np.arange(1, words_per_block + 1, dtype=np.float64)
        probs = ranks ** (-zipf_a)
        probs /= probs.sum()
        counts = {}
        for d in range(n_docs):
            for _ in range(tokens_per_doc):
                block = labels[d] if rng.random() < own_share else 1 - labels[d]
                w = int(rng.choice(words_per_block, p=probs)) + block * words_per_block
                counts[(d, w)] = counts.get((d, w), 0) + 1
        used = sorted({w for _, w in counts})
        remap = {w: i for i, w in enumerate(used)}
        t = [(d, remap[w], c) for (d, w), c in sorted(counts.items())]
        n_words = len(used)
    else:
        n_words = 0
    net = MultilayerNetwork(
        ["d%d" % i for i in range(n_docs)],
        ["w%d" % i for i in range(n_words)],
        [],
        np.array(h, dtype=np.int64).reshape(-1, 2),
        np.array(t, dtype=np.int64).reshape(-1, 3),
        np.zeros((0, 2), dtype=np.int64))
    return net, labels


def zipf_documents(rng, n_docs=200, tokens_per_doc=300, alpha=1.8,
                   mandelbrot_q=200.0, pool=200000):
    """Documents with i.i.d. Zipf-Mandelbrot tokens (known Heaps exponent 1/alpha)."""
    ranks = np.arange(1, pool + 1, dtype=np.float64)
    probs = (ranks + mandelbrot_q) ** (-alpha)
    probs /= probs.sum()
    docs = []
    for d in range(n_docs):
        toks = rng.choice(pool, size=tokens_per_doc, p=probs)
        docs.append(Document("d%d" % d, ["w%d" % t for t in toks], [], []))
    return Corpus(docs)


# ---------------------------------------------------------------------------
# Wikipedia-style bundled sample.
# ---------------------------------------------------------------------------

CATEGORIES = ("mathematics", "physics", "biology")
FINE_GROUPS = ("algebra", "analysis", "quantum", "statmech", "biology")

_STOP_SEED = (
    "the of and in to a is as by for with that are this from it an be or "
    "which on can at not has have also was were will its such one two may "
    "more other these than then when where each into between both over "
    "some any all used use using given there their they them only however "
    "thus hence therefore example form case known call define defined "
    "result general term often would could should after before under "
    "above below first second new many most very often same different "
    "number set part point value function time system model state process "
    "change form work way fact sense order level within without through "
    "during since while among along across against toward")

_LEXICON = {
    "algebra": "group ring field vector matrix linear algebra polynomial "
               "theorem proof lemma homomorphism ideal module kernel basis "
               "dimension subgroup abelian commutative finite integer prime "
               "equation root determinant eigenvalue tensor category functor "
               "morphism lattice representation symmetry permutation cyclic",
    "analysis": "limit derivative integral measure continuous convergence "
                "sequence series bounded metric topology compact manifold "
                "differential operator norm banach hilbert fourier smooth "
                "analytic holomorphic harmonic gradient curvature geodesic "
                "infimum supremum epsilon delta cauchy riemann lebesgue",
    "quantum": "quantum particle wave photon electron spin state energy "
               "operator hamiltonian momentum uncertainty entanglement "
               "superposition qubit measurement decoherence tunnelling flux "
               "josephson boson fermion amplitude planck relativistic "
               "scattering vacuum radiation orbital coherence macroscopic",
    "statmech": "entropy temperature equilibrium thermodynamic pressure "
                "phase transition lattice ising boltzmann ensemble partition "
                "free magnetization critical exponent scaling fluctuation "
                "diffusion stochastic kinetic gas heat statistical field "
                "correlation susceptibility percolation renormalization",
    "biology": "cell protein gene dna enzyme membrane tissue organism "
               "bacteria receptor molecule pathway metabolism synthesis "
               "mutation chromosome nucleus mitochondria ribosome amino "
               "acid transcription translation evolution species ecology "
               "hormone antibody immune neuron cancer virus genome lipid",
    "general": "model theory method result value system term structure "
               "property relation form equation type class element object "
               "concept approach analysis study research paper definition "
               "notation condition assumption argument principle law rule",
}

_SYLLABLES = ("ta re mi lo ven dra kel sor nu pha gno bel tri qua zen mor "
              "ving lex pol dar sil ect ava ron thy ber cal dis ent gra "
              "hol ini jor kin lum nov oct pre rud sta tur umb vex wol yel").split()


def _word_pool(rng, class_name, size):
    """Readable pseudo-vocabulary headed by a small real lexicon."""
    seed = _LEXICON.get(class_name, "").split()
    out = list(dict.fromkeys(seed))
    prefix = class_name[:2]
    n_syl = len(_SYLLABLES)
    k = 0
    while len(out) < size:
        a = _SYLLABLES[k % n_syl]
        b = _SYLLABLES[(k * 7 + 3) % n_syl]
        c = _SYLLABLES[(k * 13 + 5) % n_syl]
        w = prefix + a + b + (c if (k // 2000) % 2 else "") + str(k // (n_syl * n_syl) or "")
        w = w.replace("0", "")
        out.append("%s%s" % (w, k))
        k += 1
    return out[:size]


@dataclass
class WikipediaLikeParams:
    seed: int = 20200605
    n_per_category: int = 40
    n_docs: int = 120
    vocabulary: int = 11545
    tokens: int = 155093
    hyperlinks: int = 309
    # text composition
    stop_share: float = 0.39
    general_share: dict = field(default_factory=lambda: {
        "mathematics": 0.13, "physics": 0.12, "biology": 0.10})
    own_share: float = 0.30       # fine-topic jargon share (math/physics)
    sibling_share: float = 0.12   # same macro area, other fine topic
    cross_share: float = 0.06     # other macro area jargon
    bio_own_share: float = 0.45
    doc_share_noise: float = 0.22
    # Zipf shapes
    stop_alpha: float = 1.25
    stop_pool: int = 420
    stop_q: float = 2.0
    jargon_alpha: float = 1.77
    general_alpha: float = 1.77
    class_pool: int = 90000
    # document lengths
    length_sigma: float = 0.62
    length_min: int = 180
    length_max: int = 5200
    # hyperlink structure
    cross_macro: float = 0.06
    fine_weight: float = 3.5      # same fine group target boost
    in_prop_exponent: float = 0.9
    in_prop_q: float = 3.0
    hub_extra: int = 69           # stubs beyond the 2-per-doc minimum
    n_hubs_per_cat: int = 2
    hub_boost: float = 9.0


def _doc_lengths(rng, params):
    n = params.n_docs
    raw = rng.lognormal(mean=0.0, sigma=params.length_sigma, size=n)
    raw = np.clip(raw, None, 4.0)
    lengths = raw / raw.sum() * params.tokens
    lengths = np.clip(lengths, params.length_min, params.length_max)
    lengths = np.floor(lengths / lengths.sum() * params.tokens).astype(np.int64)
    # largest-remainder rounding to the exact total
    short = params.tokens - int(lengths.sum())
    order = rng.permutation(n)
    lengths[order[:short]] += 1
    return lengths


def _zipf_probs(pool, alpha, q=1.0):
    ranks = np.arange(1, pool + 1, dtype=np.float64)
    p = (ranks + q) ** (-alpha)
    return p / p.sum()


def _expected_distinct(probs, m):
    return float(np.sum(-np.expm1(m * np.log1p(-np.minimum(probs, 1 - 1e-12)))))


def _calibrate_q(pool, alpha, m_tokens, v_target):
    """Find the Zipf-Mandelbrot shift that realizes ~v_target distinct types."""
    lo, hi = 0.5, 5e5
    for _ in range(60):
        mid = np.sqrt(lo * hi)
        v = _expected_distinct(_zipf_probs(pool, alpha, mid), m_tokens)
        if v < v_target:
            lo = mid
        else:
            hi = mid
    return float(np.sqrt(lo * hi))


def _category_of(doc, params):
    return CATEGORIES[doc // params.n_per_category]


def _fine_of(doc, params):
    n = params.n_per_category
    if doc < n // 2:
        return "algebra"
    if doc < n:
        return "analysis"
    if doc < n + n // 2:
        return "quantum"
    if doc < 2 * n:
        return "statmech"
    return "biology"


def _class_shares(doc, params, rng):
    cat = _category_of(doc, params)
    fine = _fine_of(doc, params)
    shares = {"stop": params.stop_share,
              "general": params.general_share[cat]}
    if cat == "biology":
        shares["biology"] = params.bio_own_share
        leak = 1.0 - sum(shares.values())
        for g in ("algebra", "analysis", "quantum", "statmech"):
            shares[g] = leak / 4.0
    else:
        sibling = {"algebra": "analysis", "analysis": "algebra",
                   "quantum": "statmech", "statmech": "quantum"}[fine]
        cross = {"mathematics": ("quantum", "statmech"),
                 "physics": ("algebra", "analysis")}[cat]
        shares[fine] = params.own_share
        shares[sibling] = params.sibling_share
        for g in cross:
            shares[g] = params.cross_share / 2.0
        shares["biology"] = 1.0 - sum(shares.values())
    # per-document jitter makes category boundaries genuinely fuzzy
    keys = list(shares)
    vals = np.array([shares[k] for k in keys])
    vals = vals * rng.lognormal(0.0, params.doc_share_noise, size=len(vals))
    vals /= vals.sum()
    return dict(zip(keys, vals))


def _build_text(rng, params):
    """Token lists per document plus the word-class map; exact V and M."""
    classes = ["stop", "general"] + list(FINE_GROUPS)
    n_cat = params.n_per_category
    lengths = _doc_lengths(rng, params)

    # expected token mass per class, for vocabulary calibration
    mass = {c: 0.0 for c in classes}
    for d in range(params.n_docs):
        cat = _category_of(d, params)
        fine = _fine_of(d, params)
        mass["stop"] += params.stop_share * lengths[d]
        mass["general"] += params.general_share[cat] * lengths[d]
        if cat == "biology":
            mass["biology"] += params.bio_own_share * lengths[d]
            leak = 1 - params.stop_share - params.general_share[cat] - params.bio_own_share
            for g in ("algebra", "analysis", "quantum", "statmech"):
                mass[g] += leak / 4 * lengths[d]
        else:
            sibling = {"algebra": "analysis", "analysis": "algebra",
                       "quantum": "statmech", "statmech": "quantum"}[fine]
            mass[fine] += params.own_share * lengths[d]
            mass[sibling] += params.sibling_share * lengths[d]
            cross = {"mathematics": ("quantum", "statmech"),
                     "physics": ("algebra", "analysis")}[cat]
            for g in cross:
                mass[g] += params.cross_share / 2 * lengths[d]
            rest = 1 - params.stop_share - params.general_share[cat] \
                - params.own_share - params.sibling_share - params.cross_share
            mass["biology"] += rest * lengths[d]

    # split the distinct-type budget in proportion to token mass
    stop_probs = _zipf_probs(params.stop_pool, params.stop_alpha, params.stop_q)
    v_stop = _expected_distinct(stop_probs, mass["stop"])
    rest_budget = params.vocabulary - v_stop
    rest_classes = [c for c in classes if c != "stop"]
    rest_mass = sum(mass[c] for c in rest_classes)
    probs = {"stop": stop_probs}
    for c in rest_classes:
        target_v = rest_budget * mass[c] / rest_mass
        alpha = params.general_alpha if c == "general" else params.jargon_alpha
        q = _calibrate_q(params.class_pool, alpha, mass[c], target_v)
        probs[c] = _zipf_probs(params.class_pool, alpha, q)

    pools = {c: _word_pool(rng, c, len(probs[c])) for c in classes}

    doc_tokens = []
    counts = {}
    for d in range(params.n_docs):
        shares = _class_shares(d, params, rng)
        n_by = {c: int(np.floor(shares.get(c, 0.0) * lengths[d])) for c in classes}
        short = int(lengths[d]) - sum(n_by.values())
        for c in list(classes)[:short]:
            n_by[c] += 1
        toks = []
        for c in classes:
            if n_by[c] <= 0:
                continue
            draw = rng.choice(len(probs[c]), size=n_by[c], p=probs[c])
            toks.extend(pools[c][t] for t in draw)
        rng.shuffle(toks)
        doc_tokens.append(toks)
        for w in toks:
            counts[w] = counts.get(w, 0) + 1

    _fix_vocabulary(rng, doc_tokens, counts, pools, params)
    return doc_tokens


def _fix_vocabulary(rng, doc_tokens, counts, pools, params):
    """Nudge the realized vocabulary to the exact target size."""
    target = params.vocabulary
    realized = len(counts)
    if realized < target:
        used = set(counts)
        spares = [w for c in ("general", "algebra", "analysis", "quantum",
                              "statmech", "biology")
                  for w in pools[c][-40000:] if w not in used]
        rng.shuffle(spares)
        need = target - realized
        si = 0
        doc_order = rng.permutation(len(doc_tokens))
        while need > 0:
            for d in doc_order:
                toks = doc_tokens[d]
                for k in range(len(toks)):
                    if counts[toks[k]] >= 2:
                        w_new = spares[si]
                        si += 1
                        counts[toks[k]] -= 1
                        counts[w_new] = 1
                        toks[k] = w_new
                        need -= 1
                        if need == 0:
                            return
    elif realized > target:
        rare = sorted(w for w, c in counts.items() if c == 1)
        rng.shuffle(rare)
        common = sorted(counts, key=lambda w: -counts[w])[:50]
        drop = set(rare[:realized - target])
        for toks in doc_tokens:
            for k in range(len(toks)):
                if toks[k] in drop:
                    w_new = common[rng_int(rng, len(common))]
                    counts[w_new] += 1
                    del counts[toks[k]]
                    toks[k] = w_new


def rng_int(rng, n):
    return int(rng.integers(0, n))


def _build_hyperlinks(rng, params):
    """Directed simple hyperlink graph with the exact edge count."""
    n = params.n_docs
    out_deg = np.full(n, 2, dtype=np.int64)
    hubs = []
    for c in range(3):
        base = c * params.n_per_category
        hubs.extend(rng.choice(params.n_per_category, size=params.n_hubs_per_cat,
                               replace=False) + base)
    weights = np.ones(n)
    weights[np.array(hubs, dtype=np.int64)] = params.hub_boost
    extra = rng.choice(n, size=params.hub_extra, replace=True, p=weights / weights.sum())
    np.add.at(out_deg, extra, 1)

    # in-popularity, shuffled inside each category
    prop = np.zeros(n)
    for c in range(3):
        lo = c * params.n_per_category
        ranks = rng.permutation(params.n_per_category) + 1.0
        prop[lo:lo + params.n_per_category] = (ranks + params.in_prop_q) ** (-params.in_prop_exponent)

    macro = np.array([0 if _category_of(d, params) != "biology" else 1
                      for d in range(n)])
    fine = np.array([FINE_GROUPS.index(_fine_of(d, params)) for d in range(n)])

    # first wire every stub inside its own macro block
    edges = set()
    for d in range(n):
        tries = 0
        have = 0
        while have < out_deg[d] and tries < 4000:
            tries += 1
            cand = np.nonzero(macro == macro[d])[0]
            w = prop[cand] * np.where(fine[cand] == fine[d], params.fine_weight, 1.0)
            w = w.copy()
            w[cand == d] = 0.0
            j = int(rng.choice(cand, p=w / w.sum()))
            if (d, j) not in edges:
                edges.add((d, j))
                have += 1
    edges = sorted(edges)
    while len(edges) > params.hyperlinks:
        k = rng_int(rng, len(edges))
        d = edges[k][0]
        if sum(1 for e in edges if e[0] == d) > 2:
            edges.pop(k)
    edge_set = set(edges)
    while len(edge_set) < params.hyperlinks:
        d = rng_int(rng, n)
        cand = np.nonzero(macro == macro[d])[0]
        w = prop[cand] * np.where(fine[cand] == fine[d], params.fine_weight, 1.0)
        w[cand == d] = 0.0
        j = int(rng.choice(cand, p=w / w.sum()))
        if (d, j) not in edge_set:
            edge_set.add((d, j))
    edges = sorted(edge_set)

    # rewire a few edges across the macro blocks, only from well-connected
    # sources so no document's block evidence becomes ambiguous
    n_cross = int(round(params.cross_macro * params.hyperlinks))
    deg_of = {}
    for s, _ in edges:
        deg_of[s] = deg_of.get(s, 0) + 1
    crossable = [k for k, (s, t) in enumerate(edges) if deg_of[s] >= 4]
    rng.shuffle(crossable)
    done = 0
    for k in crossable:
        if done >= n_cross:
            break
        s, t = edges[k]
        cand = np.nonzero(macro != macro[s])[0]
        w = prop[cand].copy()
        j = int(rng.choice(cand, p=w / w.sum()))
        if (s, j) not in edge_set:
            edge_set.discard((s, t))
            edge_set.add((s, j))
            edges[k] = (s, j)
            done += 1
    edges = sorted(edge_set)
    edges = _ensure_weakly_connected(rng, edges, n)
    return edges


def _ensure_weakly_connected(rng, edges, n):
    from .corpus import _weak_components
    src = [e[0] for e in edges]
    dst = [e[1] for e in edges]
    labels, ncomp = _weak_components(n, src, dst)
    while ncomp > 1:
        sizes = np.bincount(labels, minlength=ncomp)
        big = int(np.argmax(sizes))
        small = int(np.argmin(sizes))
        d = int(np.nonzero(labels == small)[0][0])
        j = int(np.nonzero(labels == big)[0][rng_int(rng, int(sizes[big]))])
        # rewire one of d's edges toward the main component
        olds = [k for k, e in enumerate(edges) if e[0] == d]
        edges[olds[0]] = (d, j)
        dedup = sorted(set(edges))
        if len(dedup) < len(edges):
            return _ensure_weakly_connected(rng, dedup, n)
        edges = dedup
        src = [e[0] for e in edges]
        dst = [e[1] for e in edges]
        labels, ncomp = _weak_components(n, src, dst)
    return edges


def wikipedia_like_corpus(params: WikipediaLikeParams | None = None) -> list[dict]:
    """Rows for a JSON-lines corpus with the bundled sample's statistics."""
    params = params or WikipediaLikeParams()
    rng = np.random.default_rng(params.seed)
    doc_tokens = _build_text(rng, params)
    edges = _build_hyperlinks(rng, params)
    ids = ["%s_%03d" % (_category_of(d, params)[:4], d) for d in range(params.n_docs)]
    out = []
    by_src = {}
    for s, t in edges:
        by_src.setdefault(s, []).append(ids[t])
    for d in range(params.n_docs):
        out.append({
            "doc_id": ids[d],
            "tokens": doc_tokens[d],
            "links": by_src.get(d, []),
            "tags": [_category_of(d, params)],
        })
    return out


def write_jsonl(rows, path):
    import json
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
