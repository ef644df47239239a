"""Batch command line: ingest, fit, consensus, compare, topics, linkpred,
scaling, sweep-mu.

All randomness flows from one global seed; every stage derives its own
seed by hashing the stage name in, so stages can be rerun independently.
Each run writes a manifest (package version, arguments, input hashes)
next to its outputs; numeric artifacts are byte-deterministic, timing
lives only in the manifest.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .blocks import Partition
from .consensus import consensus, overlap_matrix
from .corpus import FilterConfig, TokenizeConfig, build_network, read_jsonl, subsample_tokens
from .errors import ConfigInvalid, DoclayersError
from .inference import McmcConfig, fit_mdl
from .likelihood import MODEL_CLASSES, LayerSet
from .linkpred import evaluate_auc
from .network import MultilayerNetwork
from .scaling import degree_scaling, mu_sweep
from .topics import flag_representation, topic_report

_KNOWN_KEYS = {
    "corpus", "network", "layers", "sweeps", "chains", "seed", "out",
    "min_outlinks", "stem", "epsilon", "merge_split", "init",
    "holdout", "repeats", "mu_values", "sample_sizes", "scaling_repeats",
    "top_words", "threads", "baseline_layers", "mu_repeats", "stages",
}


@dataclass
class RunConfig:
    corpus: str | None = None
    network: str | None = None
    layers: str = "h,t"
    sweeps: int = 200
    chains: int = 10
    seed: int = 1
    out: str = "out"
    min_outlinks: int = 2
    stem: bool = False
    epsilon: float = 1.0
    merge_split: bool = True
    init: str = "agglomerative"
    holdout: float = 0.1
    repeats: int = 20
    mu_values: list = field(default_factory=lambda: [0.05, 0.2, 0.4, 0.6, 0.8, 1.0])
    mu_repeats: int = 3
    sample_sizes: list = field(default_factory=list)
    scaling_repeats: int = 10
    top_words: int = 20
    threads: int = 1
    baseline_layers: str = "h"
    stages: list = field(default_factory=list)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = set(d) - _KNOWN_KEYS
        if unknown:
            raise ConfigInvalid("unknown config keys: %s" % ", ".join(sorted(unknown)))
        cfg = cls(**d)
        if not (0.0 < cfg.holdout < 1.0):
            raise ConfigInvalid("holdout must lie in (0, 1)")
        if cfg.sweeps < 1 or cfg.chains < 1:
            raise ConfigInvalid("sweeps and chains must be positive")
        return cfg


def stage_seed(global_seed: int, stage: str) -> int:
    """Per-stage seed: the stage name is hashed into the global seed."""
    return int(np.random.SeedSequence(
        (global_seed, zlib.crc32(stage.encode()))).generate_state(1)[0] % (2 ** 31))


def _mcmc_config(cfg: RunConfig, stage: str) -> McmcConfig:
    return McmcConfig(seed=stage_seed(cfg.seed, stage), n_sweeps=cfg.sweeps,
                      n_chains=cfg.chains, epsilon=cfg.epsilon,
                      merge_split=cfg.merge_split, init=cfg.init)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_network(cfg: RunConfig) -> MultilayerNetwork:
    if cfg.network:
        return MultilayerNetwork.load(cfg.network)
    if cfg.corpus:
        corpus = read_jsonl(cfg.corpus, TokenizeConfig(stem=cfg.stem))
        return build_network(corpus, FilterConfig(min_outlinks=cfg.min_outlinks))
    raise ConfigInvalid("either corpus or network input is required")


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _manifest(outdir: Path, cfg: RunConfig, stage: str, outputs, t0: float):
    inputs = {}
    for key in ("corpus", "network"):
        p = getattr(cfg, key)
        if p:
            inputs[key] = {"path": p, "sha256": _sha256(p)}
    _write_json(outdir / "manifest.json", {
        "tool": "doclayers",
        "version": __version__,
        "stage": stage,
        "seed": cfg.seed,
        "stage_seed": stage_seed(cfg.seed, stage),
        "config": {k: v for k, v in cfg.__dict__.items()},
        "inputs": inputs,
        "outputs": sorted(outputs),
        "wall_time_s": time.perf_counter() - t0,
    })


# ---------------------------------------------------------------------------
# Stages.
# ---------------------------------------------------------------------------

def run_pipeline(cfg: RunConfig) -> int:
    """Execute the configured stages in order; returns a process exit code."""
    for stage in cfg.stages:
        code = STAGES[stage](cfg)
        if code != 0:
            return code
    return 0


def _stage_ingest(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    net = _load_network(cfg)
    net.save(outdir / "network.json")
    _write_json(outdir / "ingest_report.json", net.ingest_report.to_dict()
                if net.ingest_report else {})
    print("ingest: %s" % net)
    _manifest(outdir, cfg, "ingest", ["network.json", "ingest_report.json"], t0)
    return 0


def _stage_fit(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    net = _load_network(cfg)
    layers = LayerSet.from_name(cfg.layers)
    result = fit_mdl(net, layers, _mcmc_config(cfg, "fit:" + layers.name))
    payload = result.to_dict()
    payload.pop("wall_time", None)
    _write_json(outdir / "fit.json", payload)
    result.partition.save_csv(outdir / "partition.csv", net)
    print("fit %s: DL=%.1f nats (mean %.1f, std %.1f, MDL %.1f), B=%s"
          % (result.model, result.dl_total, result.dl_mean, result.dl_std,
             result.mdl, payload["B"]))
    _manifest(outdir, cfg, "fit", ["fit.json", "partition.csv"], t0)
    return 0


def _stage_consensus(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    net = _load_network(cfg)
    layers = LayerSet.from_name(cfg.layers)
    result = fit_mdl(net, layers, _mcmc_config(cfg, "consensus:" + layers.name))
    cons = consensus(result.chain_partitions)
    _write_json(outdir / "consensus.json", {
        "model": layers.name,
        "sigma": cons.sigma,
        "n_partitions": cons.n_partitions,
        "B": cons.B,
        "iterations": cons.n_iterations,
    })
    rows = [(net.doc_ids[i], int(cons.partition[i]), float(cons.node_agreement[i]))
            for i in range(net.n_docs)]
    _write_csv(outdir / "consensus_partition.csv",
               ["doc_id", "group", "agreement"], rows)
    print("consensus %s: sigma=%.3f, B=%d" % (layers.name, cons.sigma, cons.B))
    _manifest(outdir, cfg, "consensus",
              ["consensus.json", "consensus_partition.csv"], t0)
    return 0


def _stage_compare(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    net = _load_network(cfg)
    names = [n.strip().upper() for n in cfg.layers.split(";") if n.strip()]
    if len(names) < 2:
        names = ["H", "T", "H+T"]
    runs = {}
    for name in names:
        if name not in MODEL_CLASSES:
            raise ConfigInvalid("unknown model class %r" % name)
        ls = LayerSet.from_name(name)
        fit = fit_mdl(net, ls, _mcmc_config(cfg, "compare:" + name))
        runs[name] = fit.chain_partitions
    mat = overlap_matrix(runs)
    _write_csv(outdir / "overlap_matrix.csv",
               ["model_a", "model_b", "overlap_mean", "overlap_std"],
               mat.to_rows())
    print("compare: " + ", ".join(
        "%s/%s=%.3f" % (a, b, mat.mean[i, j])
        for i, a in enumerate(mat.models) for j, b in enumerate(mat.models) if i < j))
    _manifest(outdir, cfg, "compare", ["overlap_matrix.csv"], t0)
    return 0


def _stage_topics(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    net = _load_network(cfg)
    layers = LayerSet.from_name(cfg.layers)
    if not layers.t:
        raise ConfigInvalid("topics need the text layer")
    fit = fit_mdl(net, layers, _mcmc_config(cfg, "topics:" + layers.name))
    # document and word groups both come from aligned consensus over chains
    from .consensus import consensus as _cons
    from .network import NodeType
    doc_cons = _cons(fit.chain_partitions)
    word_cons = _cons([p.project(NodeType.WORD) for p in fit.chain_partitions])
    labels = np.full(net.n_nodes, -1, dtype=np.int64)
    labels[:net.n_docs] = doc_cons.partition
    labels[net.n_docs:net.n_docs + net.n_words] = word_cons.partition
    part = Partition(labels, net.node_type)
    report = topic_report(net, part, top_n=cfg.top_words)
    flags = flag_representation(report.tau)
    _write_csv(outdir / "topics.csv", ["topic", "rank", "word"],
               [(t, r, w) for t, words in enumerate(report.top_words)
                for r, w in enumerate(words, 1)])
    _write_csv(outdir / "mixtures.csv", ["doc_group", "topic", "tokens", "f"],
               [(i, t, int(report.counts[i, t]), float(report.f[i, t]))
                for i in range(report.n_doc_groups) for t in range(report.n_topics)])
    _write_csv(outdir / "tau.csv", ["doc_group", "topic", "tau"],
               [(i, t, float(report.tau[i, t]))
                for i in range(report.n_doc_groups) for t in range(report.n_topics)])
    _write_csv(outdir / "flags.csv", ["doc_group", "topic", "flag"],
               [(i, t, {1: "over", 0: "neutral", -1: "under"}[int(flags[i, t])])
                for i in range(report.n_doc_groups) for t in range(report.n_topics)])
    print("topics: %d topics x %d document groups"
          % (report.n_topics, report.n_doc_groups))
    _manifest(outdir, cfg, "topics",
              ["topics.csv", "mixtures.csv", "tau.csv", "flags.csv"], t0)
    return 0


def _stage_linkpred(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    net = _load_network(cfg)
    models = [LayerSet.from_name(n) for n in cfg.layers.split(";") if n.strip()]
    if not models:
        models = [LayerSet.from_name("h+t"), LayerSet.from_name("h")]
    report = evaluate_auc(net, models, holdout_fraction=cfg.holdout,
                          n_repeats=cfg.repeats,
                          seed=stage_seed(cfg.seed, "linkpred"),
                          config=McmcConfig(seed=stage_seed(cfg.seed, "linkpred:mcmc"),
                                            n_sweeps=cfg.sweeps, n_chains=cfg.chains,
                                            epsilon=cfg.epsilon,
                                            merge_split=cfg.merge_split,
                                            init=cfg.init))
    _write_json(outdir / "linkpred.json", report.to_dict())
    rows = []
    for model, reps in report.roc_points.items():
        for rep, pts in enumerate(reps):
            for fpr, tpr in pts:
                rows.append((model, rep, float(fpr), float(tpr)))
    _write_csv(outdir / "roc_points.csv", ["model", "repeat", "fpr", "tpr"], rows)
    print("linkpred: " + ", ".join(
        "%s AUC=%.3f+/-%.3f" % (m, report.mean(m), report.std(m))
        for m in report.models))
    _manifest(outdir, cfg, "linkpred", ["linkpred.json", "roc_points.csv"], t0)
    return 0


def _stage_scaling(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if not cfg.corpus:
        raise ConfigInvalid("scaling works on a corpus file")
    corpus = read_jsonl(cfg.corpus, TokenizeConfig(stem=cfg.stem))
    n = len(corpus.documents)
    sizes = cfg.sample_sizes or [max(2, int(round(n * f)))
                                 for f in (0.1, 0.2, 0.35, 0.5, 0.7, 0.85, 1.0)]
    report = degree_scaling(corpus, sizes, repeats=cfg.scaling_repeats,
                            seed=stage_seed(cfg.seed, "scaling"))
    _write_csv(outdir / "scaling.csv", ["series", "n_docs", "mean", "std"],
               report.to_rows())
    _write_json(outdir / "scaling.json", {
        "beta": report.beta,
        "gamma_fit": report.gamma_fit,
        "gamma_pred": report.gamma_pred,
        "fit_window_skip": report.fit_window_skip,
        "sample_sizes": report.sample_sizes,
    })
    print("scaling: beta=%.3f gamma_fit=%.3f gamma_pred=%.3f"
          % (report.beta, report.gamma_fit, report.gamma_pred))
    _manifest(outdir, cfg, "scaling", ["scaling.csv", "scaling.json"], t0)
    return 0


def _stage_sweep_mu(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    net = _load_network(cfg)
    result = mu_sweep(net, cfg.mu_values,
                      config=McmcConfig(seed=stage_seed(cfg.seed, "sweep-mu"),
                                        n_sweeps=cfg.sweeps, n_chains=cfg.chains,
                                        epsilon=cfg.epsilon,
                                        merge_split=cfg.merge_split, init=cfg.init),
                      repeats=cfg.mu_repeats,
                      seed=stage_seed(cfg.seed, "sweep-mu:subsample"))
    _write_csv(outdir / "mu_sweep.csv",
               ["mu", "overlap_vs_h_mean", "overlap_vs_h_std",
                "overlap_vs_t_mean", "overlap_vs_t_std"],
               result.to_rows())
    _write_json(outdir / "mu_sweep.json", {
        "t_within_mean": result.t_within_mean,
        "t_within_std": result.t_within_std,
        "h_sigma": result.h_sigma,
        "mu_values": result.mu_values,
    })
    print("sweep-mu: " + ", ".join("mu=%.2f vsH=%.3f" % (m, result.overlap_vs_h[m][0])
                                   for m in result.mu_values))
    _manifest(outdir, cfg, "sweep-mu", ["mu_sweep.csv", "mu_sweep.json"], t0)
    return 0


STAGES = {
    "ingest": _stage_ingest,
    "fit": _stage_fit,
    "consensus": _stage_consensus,
    "compare": _stage_compare,
    "topics": _stage_topics,
    "linkpred": _stage_linkpred,
    "scaling": _stage_scaling,
    "sweep-mu": _stage_sweep_mu,
}


def _build_parser():
    p = argparse.ArgumentParser(
        prog="doclayers",
        description="Cluster documents, words, and tags with a multilayer "
                    "degree-corrected block model.")
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--seed", type=int, help="global seed")
    p.add_argument("--threads", type=int, help="reserved for chain parallelism")
    sub = p.add_subparsers(dest="command", required=True)
    for name in STAGES:
        sp = sub.add_parser(name)
        sp.add_argument("--corpus")
        sp.add_argument("--network")
        sp.add_argument("--layers")
        sp.add_argument("--sweeps", type=int)
        sp.add_argument("--chains", type=int)
        sp.add_argument("--out")
        sp.add_argument("--min-outlinks", dest="min_outlinks", type=int)
        sp.add_argument("--stem", action="store_true", default=None)
        sp.add_argument("--holdout", type=float)
        sp.add_argument("--repeats", type=int)
        sp.add_argument("--mu-values", dest="mu_values",
                        help="comma separated, e.g. 0.05,0.5,1.0")
        sp.add_argument("--mu-repeats", dest="mu_repeats", type=int)
        sp.add_argument("--sample-sizes", dest="sample_sizes",
                        help="comma separated document counts")
        sp.add_argument("--scaling-repeats", dest="scaling_repeats", type=int)
        sp.add_argument("--top-words", dest="top_words", type=int)
        sp.add_argument("--init")
        sp.add_argument("--epsilon", type=float)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    raw = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw.update(json.load(fh))
    for key in _KNOWN_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.threads is not None:
        raw["threads"] = args.threads
    for key in ("mu_values", "sample_sizes"):
        if isinstance(raw.get(key), str):
            raw[key] = [float(x) if key == "mu_values" else int(x)
                        for x in raw[key].split(",") if x]
    try:
        cfg = RunConfig.from_dict(raw)
        cfg.stages = [args.command]
        return run_pipeline(cfg)
    except DoclayersError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("io error: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
