"""Posterior link prediction on the hyperlink layer and model comparison.

Candidate document pairs are scored by the posterior-averaged likelihood
gain of inserting the edge: partitions are sampled on the observed
network, each sample contributes exp(ln P(A + e | b) - ln P(A | b)), and
the averages are normalized across the candidate set. Models are compared
by ROC AUC over repeated holdouts and a paired t-statistic on the AUC
differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from scipy.stats import rankdata
from scipy.stats import t as t_dist

from .blocks import BlockState
from .errors import (CandidateAlreadyPresent, DegenerateVariance,
                     EmptyHoldout, EmptyNetwork)
from .inference import McmcConfig, sample_posterior
from .likelihood import LayerSet


@dataclass
class EdgeHoldout:
    observed: "object"             # network with the held-out H edges removed
    positives: np.ndarray          # (k, 2) removed true edges
    negatives: np.ndarray          # (k', 2) sampled absent pairs
    fraction: float
    seed: int


def make_holdout(network, fraction: float = 0.1, seed=None,
                 negatives_per_positive: float = 1.0) -> EdgeHoldout:
    """Remove a random fraction of hyperlinks and sample matched non-edges."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    E = network.n_hyperlinks
    n_remove = int(round(fraction * E))
    if n_remove < 1 or n_remove >= E:
        raise EmptyHoldout("fraction %.3f removes %d of %d edges"
                           % (fraction, n_remove, E))
    idx = rng.choice(E, size=n_remove, replace=False)
    mask = np.zeros(E, dtype=bool)
    mask[idx] = True
    positives = np.stack([network.h_src[mask], network.h_dst[mask]], axis=1)
    kept = np.stack([network.h_src[~mask], network.h_dst[~mask]], axis=1)
    observed = network.replace_h(kept)

    D = network.n_docs
    present = set(map(tuple, np.stack([network.h_src, network.h_dst], axis=1).tolist()))
    n_neg = int(round(negatives_per_positive * n_remove))
    negatives = []
    while len(negatives) < n_neg:
        u = int(rng.integers(0, D))
        v = int(rng.integers(0, D))
        if u == v or (u, v) in present:
            continue
        present.add((u, v))  # no duplicate negatives
        negatives.append((u, v))
    return EdgeHoldout(observed, positives,
                       np.asarray(negatives, dtype=np.int64).reshape(-1, 2),
                       fraction, seed if isinstance(seed, int) else -1)


def score_candidate_edges(network_observed, layers: LayerSet, candidates,
                          config: McmcConfig | None = None,
                          samples=None) -> np.ndarray:
    """Normalized posterior predictive weights for candidate document pairs.

    Returns lambda_i >= 0 with sum 1 over the candidate list. Posterior
    samples may be passed in to share them across candidate sets.
    """
    cand = np.asarray(candidates, dtype=np.int64).reshape(-1, 2)
    present = set(map(tuple, np.stack([network_observed.h_src,
                                       network_observed.h_dst], axis=1).tolist()))
    for u, v in cand.tolist():
        if (u, v) in present:
            raise CandidateAlreadyPresent("candidate (%d, %d) already observed" % (u, v))
    if samples is None:
        samples = sample_posterior(network_observed, layers, config)
    if not samples:
        raise EmptyNetwork("no posterior samples")
    gains = np.zeros((len(samples), len(cand)))
    for k, s in enumerate(samples):
        state = BlockState(network_observed, s.partition, layers)
        gains[k] = -state.dl_delta_h_insertion(cand[:, 0], cand[:, 1])
    log_w = logsumexp(gains, axis=0) - np.log(len(samples))
    lam = np.exp(log_w - logsumexp(log_w))
    return lam


def auc_score(pos_scores, neg_scores) -> float:
    """P(random positive ranks above random negative), ties counted half."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    ranks = rankdata(np.concatenate([pos, neg]))
    r_pos = ranks[:len(pos)].sum()
    u = r_pos - len(pos) * (len(pos) + 1) / 2.0
    return float(u / (len(pos) * len(neg)))


@dataclass
class LinkPredictionReport:
    models: list
    auc: dict                       # model -> list of per-repeat AUCs
    holdout_fraction: float
    n_repeats: int
    seed: int
    t_stat: float | None = None
    p_value: float | None = None
    t_welch: float | None = None
    p_welch: float | None = None
    degenerate: bool = False
    roc_points: dict = field(default_factory=dict)

    def mean(self, model):
        return float(np.mean(self.auc[model]))

    def std(self, model):
        return float(np.std(self.auc[model], ddof=1)) if len(self.auc[model]) > 1 else 0.0

    def to_dict(self):
        out = {
            "models": self.models,
            "holdout_fraction": self.holdout_fraction,
            "repeats": self.n_repeats,
            "seed": self.seed,
            "auc": {m: [float(x) for x in v] for m, v in self.auc.items()},
            "auc_mean": {m: self.mean(m) for m in self.models},
            "auc_std": {m: self.std(m) for m in self.models},
        }
        if self.t_stat is not None:
            out["delta_auc_t"] = self.t_stat
            out["delta_auc_p"] = self.p_value
            out["delta_auc_t_welch"] = self.t_welch
            out["delta_auc_p_welch"] = self.p_welch
            out["degenerate_variance"] = self.degenerate
        return out


def delta_auc_ttest(auc_a, auc_b):
    """Paired t-statistic on AUC differences, two-sided p, n-1 dof.

    Raises DegenerateVariance when the differences have zero spread.
    """
    a = np.asarray(auc_a, dtype=np.float64)
    b = np.asarray(auc_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise ValueError("need two equal-length AUC lists with n >= 2")
    d = a - b
    sd = d.std(ddof=1)
    n = len(d)
    if sd == 0.0:
        raise DegenerateVariance("zero variance of AUC differences "
                                 "(mean delta %.3g)" % d.mean())
    t = float(d.mean() / (sd / np.sqrt(n)))
    p = float(2.0 * t_dist.sf(abs(t), df=n - 1))
    return t, p


def welch_ttest(auc_a, auc_b):
    """Two-sample Welch variant, reported alongside the paired form."""
    a = np.asarray(auc_a, dtype=np.float64)
    b = np.asarray(auc_b, dtype=np.float64)
    va, vb = a.var(ddof=1), b.var(ddof=1)
    na, nb = len(a), len(b)
    denom = np.sqrt(va / na + vb / nb)
    if denom == 0.0:
        raise DegenerateVariance("zero variance in both samples")
    t = float((a.mean() - b.mean()) / denom)
    df = (va / na + vb / nb) ** 2 / (
        (va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    p = float(2.0 * t_dist.sf(abs(t), df=df))
    return t, p


def evaluate_auc(network, models, holdout_fraction: float = 0.1,
                 n_repeats: int = 20, seed: int = 1,
                 config: McmcConfig | None = None,
                 warm_starts: dict | None = None) -> LinkPredictionReport:
    """AUC of missing-edge recovery for one or more layer combinations.

    Every repeat draws one holdout that all models share, so AUC lists are
    paired across models. ``warm_starts`` may map a model name to a
    partition used to initialize its chains (e.g. a text-only fit, which
    never sees held-out hyperlinks).
    """
    if isinstance(models, LayerSet):
        models = [models]
    for ls in models:
        if not ls.h:
            raise ValueError("link prediction needs the hyperlink layer in %s" % ls.name)
    base = config or McmcConfig()
    auc = {ls.name: [] for ls in models}
    roc = {ls.name: [] for ls in models}
    for rep in range(n_repeats):
        rng = np.random.default_rng(np.random.SeedSequence((seed, 977, rep)))
        holdout = make_holdout(network, holdout_fraction, rng)
        cands = np.concatenate([holdout.positives, holdout.negatives], axis=0)
        n_pos = len(holdout.positives)
        for ls in models:
            cfg = McmcConfig(**{**base.__dict__,
                                "seed": int(np.random.SeedSequence((seed, rep)).generate_state(1)[0]),
                                "init_labels": (warm_starts or {}).get(ls.name)})
            samples = sample_posterior(holdout.observed, ls, cfg)
            lam = score_candidate_edges(holdout.observed, ls, cands, samples=samples)
            auc[ls.name].append(auc_score(lam[:n_pos], lam[n_pos:]))
            roc[ls.name].append(_roc_points(lam[:n_pos], lam[n_pos:]))
    report = LinkPredictionReport(
        models=[ls.name for ls in models], auc=auc,
        holdout_fraction=holdout_fraction, n_repeats=n_repeats, seed=seed,
        roc_points=roc)
    if len(models) == 2:
        a, b = report.models
        try:
            report.t_stat, report.p_value = delta_auc_ttest(auc[a], auc[b])
            report.t_welch, report.p_welch = welch_ttest(auc[a], auc[b])
        except DegenerateVariance:
            report.degenerate = True
            d = float(np.mean(auc[a]) - np.mean(auc[b]))
            report.t_stat = float(np.sign(d) * np.inf) if d else 0.0
            report.p_value = 0.0 if d else 1.0
    return report


def _roc_points(pos, neg):
    """(false positive rate, true positive rate) along the score sweep."""
    scores = np.concatenate([pos, neg])
    truth = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    order = np.argsort(-scores, kind="stable")
    truth = truth[order]
    tp = np.cumsum(truth)
    fp = np.cumsum(1 - truth)
    tpr = tp / max(tp[-1], 1)
    fpr = fp / max(fp[-1], 1)
    return np.stack([np.concatenate([[0.0], fpr]),
                     np.concatenate([[0.0], tpr])], axis=1)
