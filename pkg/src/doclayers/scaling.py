"""Layer-density diagnostics: degree scaling, Heaps' law, token sweeps.

Document subsets of growing size are drawn from the corpus; average
degrees per node class and the vocabulary growth exponent come from
log-log least squares on the subset means. The word-degree exponent gamma
is predicted by 1 - beta, with beta the Heaps exponent of V ~ M^beta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .consensus import consensus, max_overlap
from .corpus import subsample_tokens
from .errors import SampleTooLarge
from .inference import McmcConfig, fit_mdl
from .likelihood import LayerSet

SERIES = ("doc_h", "doc_t", "word_t", "doc_m", "tag_m")


def fit_loglog(x, y, skip_smallest: int = 0):
    """Least-squares slope of log y against log x."""
    x = np.asarray(x, dtype=np.float64)[skip_smallest:]
    y = np.asarray(y, dtype=np.float64)[skip_smallest:]
    good = (x > 0) & (y > 0)
    lx, ly = np.log(x[good]), np.log(y[good])
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)


@dataclass
class ScalingReport:
    sample_sizes: list
    mean: dict                 # series -> mean average degree per sample size
    std: dict
    heaps_points: np.ndarray   # (M, V) pairs over all samples
    beta: float
    gamma_fit: float
    gamma_pred: float
    fit_window_skip: int

    def to_rows(self):
        rows = []
        for s in SERIES:
            for nd, m, sd in zip(self.sample_sizes, self.mean[s], self.std[s]):
                rows.append((s, int(nd), float(m), float(sd)))
        return rows


def _sample_stats(corpus, doc_idx):
    """Per-class average degrees and (M, V) for one document subset."""
    docs = [corpus.documents[i] for i in doc_idx]
    ids = {d.doc_id for d in docs}
    n_d = len(docs)
    h_edges = sum(1 for d in docs for t in d.outlinks if t in ids and t != d.doc_id)
    tokens = sum(len(d.tokens) for d in docs)
    vocab = len({w for d in docs for w in d.tokens})
    tag_edges = sum(len(d.tags) for d in docs)
    tags = len({t for d in docs for t in d.tags})
    return {
        "doc_h": h_edges / n_d,
        "doc_t": tokens / n_d,
        "word_t": tokens / vocab if vocab else 0.0,
        "doc_m": tag_edges / n_d,
        "tag_m": tag_edges / tags if tags else 0.0,
        "M": tokens,
        "V": vocab,
    }


def degree_scaling(corpus, sample_sizes, repeats: int = 10, seed: int = 1,
                   fit_window_skip: int | None = None) -> ScalingReport:
    """Average-degree scaling and Heaps fit over random document subsets."""
    sizes = sorted(int(s) for s in sample_sizes)
    n = len(corpus.documents)
    if sizes and sizes[-1] > n:
        raise SampleTooLarge("sample size %d exceeds corpus size %d" % (sizes[-1], n))
    rng = np.random.default_rng(np.random.SeedSequence((seed, 41)))
    mean = {s: [] for s in SERIES}
    std = {s: [] for s in SERIES}
    heaps = []
    for nd in sizes:
        vals = {s: [] for s in SERIES}
        for _ in range(repeats):
            idx = rng.choice(n, size=nd, replace=False)
            st = _sample_stats(corpus, idx)
            for s in SERIES:
                vals[s].append(st[s])
            heaps.append((st["M"], st["V"]))
        for s in SERIES:
            mean[s].append(float(np.mean(vals[s])))
            std[s].append(float(np.std(vals[s])))
    if fit_window_skip is None:
        fit_window_skip = len(sizes) // 2  # keep the large-sample half
    heaps = np.asarray(heaps, dtype=np.float64)
    # fit beta on per-size mean (M, V) to damp sampling noise
    m_means, v_means = [], []
    per_size = heaps.reshape(len(sizes), repeats, 2)
    for k in range(len(sizes)):
        m_means.append(per_size[k, :, 0].mean())
        v_means.append(per_size[k, :, 1].mean())
    beta, _ = fit_loglog(m_means, v_means, skip_smallest=fit_window_skip)
    gamma_fit, _ = fit_loglog(sizes, mean["word_t"], skip_smallest=fit_window_skip)
    return ScalingReport(sizes, mean, std, heaps, beta, gamma_fit,
                         1.0 - beta, fit_window_skip)


@dataclass
class MuSweepResult:
    mu_values: list
    overlap_vs_h: dict        # mu -> (mean, std)
    overlap_vs_t: dict
    t_within_mean: float
    t_within_std: float
    h_sigma: float
    details: dict = field(default_factory=dict)

    def to_rows(self):
        rows = []
        for mu in self.mu_values:
            mh, sh = self.overlap_vs_h[mu]
            mt, st = self.overlap_vs_t[mu]
            rows.append((float(mu), mh, sh, mt, st))
        return rows


def mu_sweep(network, mu_values, config: McmcConfig | None = None,
             repeats: int = 3, seed: int = 7) -> MuSweepResult:
    """Overlap of the token-subsampled H+T consensus with the H and T baselines.

    For each mu, tokens are subsampled, the hyperlink+text model is fitted
    across chains, and the document consensus is compared against the
    hyperlink-only and text-only consensus partitions.
    """
    base = config or McmcConfig(n_chains=5, n_sweeps=100)
    ht = LayerSet(h=True, t=True)

    fit_h = fit_mdl(network, LayerSet(h=True),
                    McmcConfig(**{**base.__dict__, "seed": base.seed + 11}))
    cons_h = consensus(fit_h.chain_partitions)
    fit_t = fit_mdl(network, LayerSet(t=True),
                    McmcConfig(**{**base.__dict__, "seed": base.seed + 23}))
    cons_t = consensus(fit_t.chain_partitions)
    # within-class overlap of the text model's own runs
    t_pairs = []
    parts = fit_t.chain_partitions
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            t_pairs.append(max_overlap(parts[i], parts[j]).normalized_overlap)
    res_h, res_t = {}, {}
    details = {}
    for mu in mu_values:
        ovh, ovt = [], []
        for rep in range(repeats):
            sub_seed = np.random.SeedSequence((seed, int(round(mu * 10000)), rep))
            sub = subsample_tokens(network, float(mu), np.random.default_rng(sub_seed))
            cfg = McmcConfig(**{**base.__dict__,
                                "seed": int(sub_seed.generate_state(1)[0] % (2 ** 31))})
            fit = fit_mdl(sub, ht, cfg)
            cons = consensus(fit.chain_partitions)
            ovh.append(max_overlap(cons.partition, cons_h.partition).normalized_overlap)
            ovt.append(max_overlap(cons.partition, cons_t.partition).normalized_overlap)
        res_h[float(mu)] = (float(np.mean(ovh)), float(np.std(ovh)))
        res_t[float(mu)] = (float(np.mean(ovt)), float(np.std(ovt)))
        details[float(mu)] = {"vs_h": ovh, "vs_t": ovt}
    return MuSweepResult([float(m) for m in mu_values], res_h, res_t,
                         float(np.mean(t_pairs)), float(np.std(t_pairs)),
                         cons_h.sigma, details)
