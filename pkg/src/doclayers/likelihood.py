"""Marginal likelihoods, partition prior, and description length.

Each layer is scored with the microcanonical degree-corrected block model:
the propensity and rate parameters are integrated out exactly, leaving
closed-form counting expressions over the sufficient statistics (group
edge-count matrix e_rs, group degree totals, group sizes).

Undirected multigraph layer:

    ln P(A|b) = ln P(A|k,e,b) + ln P(k|e,b) + ln P(e|b)
    P(A|k,e,b) = [prod_{r<s} e_rs! * prod_r e_rr!! * prod_i k_i!]
                 / [prod_r e_r! * prod_{i<j} A_ij! * prod_i A_ii!!]
    P(k|e,b)   = prod_r multiset(n_r, e_r)^-1
    P(e|b)     = multiset(n_pairs, E)^-1

with e_rr twice the number of internal edges, x!! = 2^(x/2) (x/2)! for even
x, multiset(n, m) = binom(n+m-1, m), and n_pairs the number of group pairs
the layer may connect (bipartite layers restrict to cross-type pairs).

Directed multigraph layer:

    P(A|k,e,b) = [prod_{rs} e_rs! * prod_i k_i^+! k_i^-!]
                 / [prod_r e_r^+! e_r^-! * prod_{ij} A_ij!]
    P(k|e,b)   = prod_r [multiset(n_r, e_r^+) multiset(n_r, e_r^-)]^-1
    P(e|b)     = multiset(B^2, E)^-1

The partition prior factorizes over node types: a uniform choice of the
number of groups, of the (ordered) group sizes, and of the assignment
given the sizes,

    ln P(b) = sum_types [ ln(prod_r n_r!) - ln N! - ln binom(N-1, B-1) - ln N ].

All values are in nats. Minimizing the description length
DL = -sum_layers ln P(A|b) - ln P(b) is the same as maximizing the joint
posterior numerator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import TypeMismatch
from .network import NodeType

LAYER_NAMES = ("h", "t", "m")


@dataclass(frozen=True)
class LayerSet:
    """Which layers enter the joint likelihood product."""

    h: bool = False
    t: bool = False
    m: bool = False

    def __post_init__(self):
        if not (self.h or self.t or self.m):
            raise ValueError("at least one layer must be active")

    @classmethod
    def from_name(cls, name: str) -> "LayerSet":
        parts = {p.strip().lower() for p in name.replace("+", ",").split(",") if p.strip()}
        unknown = parts - set(LAYER_NAMES)
        if unknown:
            raise ValueError("unknown layers: %s" % ", ".join(sorted(unknown)))
        return cls(h="h" in parts, t="t" in parts, m="m" in parts)

    @property
    def name(self) -> str:
        return "+".join(n.upper() for n, on in
                        zip(LAYER_NAMES, (self.h, self.t, self.m)) if on)

    def active(self):
        return tuple(n for n, on in zip(LAYER_NAMES, (self.h, self.t, self.m)) if on)

    @property
    def node_types(self):
        """Node types participating in at least one active layer."""
        types = set()
        if self.h:
            types.add(NodeType.DOC)
        if self.t:
            types.update((NodeType.DOC, NodeType.WORD))
        if self.m:
            types.update((NodeType.DOC, NodeType.TAG))
        return tuple(sorted(types))


MODEL_CLASSES = ("H", "T", "M", "H+M", "H+T", "H+T+M")


def log_factorial_table(n_max: int) -> np.ndarray:
    """table[k] = ln k! for k = 0..n_max."""
    return gammaln(np.arange(n_max + 1, dtype=np.float64) + 1.0)


def lbinom(table, n, k):
    return table[n] - table[k] - table[n - k]


def ln_multiset(table, n, m):
    """ln of the multiset coefficient C(n+m-1, m); 0 when n=m=0."""
    if n == 0:
        if np.any(np.asarray(m) != 0):
            raise ValueError("multiset(0, m>0) is empty")
        return 0.0
    return table[n + m - 1] - table[m] - table[n - 1]


def ln_double_factorial_even(table, x):
    """ln x!! for even x >= 0, i.e. ln[2^(x/2) (x/2)!]."""
    half = x // 2
    return half * np.log(2.0) + table[half]


# ---------------------------------------------------------------------------
# Pure closed forms over sufficient statistics.  `slots` arrays list the
# occupied group slots relevant to the layer; matrices are indexed by slot.
# ---------------------------------------------------------------------------

def undirected_layer_logp(table, e, er, n_sizes, slots, E, n_pairs,
                          degree_lf_sum, edge_mult_lf_sum):
    """ln P(A|b) for an undirected multigraph layer.

    e: symmetric slot x slot matrix with e_rr twice the internal edges;
    er: slot degree totals; n_sizes: group sizes per slot; slots: occupied
    slots taking part in this layer; E: number of edges; n_pairs: allowed
    group pairs for the uniform edge-count prior; degree_lf_sum: sum_i ln
    k_i!; edge_mult_lf_sum: sum_{i<j} ln A_ij! + sum_i ln A_ii!!.
    """
    if E == 0:
        return 0.0
    slots = np.asarray(slots, dtype=np.int64)
    sub = e[np.ix_(slots, slots)]
    iu = np.triu_indices(len(slots), k=1)
    lp = float(np.sum(table[sub[iu]]))
    diag = np.diag(sub)
    lp += float(np.sum((diag // 2) * np.log(2.0) + table[diag // 2]))
    lp += degree_lf_sum
    lp -= float(np.sum(table[er[slots]]))
    lp -= edge_mult_lf_sum
    # uniform degree prior given group degree totals
    ns, es = n_sizes[slots], er[slots]
    occ = ns > 0
    lp -= float(np.sum(table[ns[occ] + es[occ] - 1] - table[es[occ]] - table[ns[occ] - 1]))
    # uniform edge-count prior over allowed group pairs
    lp -= ln_multiset(table, int(n_pairs), int(E))
    return lp


def directed_layer_logp(table, e, er_out, er_in, n_sizes, slots, E, n_pairs,
                        degree_lf_sum, edge_mult_lf_sum):
    """ln P(A|b) for a directed multigraph layer (same conventions)."""
    if E == 0:
        return 0.0
    slots = np.asarray(slots, dtype=np.int64)
    sub = e[np.ix_(slots, slots)]
    lp = float(np.sum(table[sub]))
    lp += degree_lf_sum
    lp -= float(np.sum(table[er_out[slots]]) + np.sum(table[er_in[slots]]))
    lp -= edge_mult_lf_sum
    ns = n_sizes[slots]
    occ = ns > 0
    for er in (er_out, er_in):
        es = er[slots]
        lp -= float(np.sum(table[ns[occ] + es[occ] - 1] - table[es[occ]] - table[ns[occ] - 1]))
    lp -= ln_multiset(table, int(n_pairs), int(E))
    return lp


def partition_type_log_prior(table, sizes, n_nodes):
    """ln P(b) for one node type given its occupied group sizes."""
    sizes = np.asarray(sizes, dtype=np.int64)
    sizes = sizes[sizes > 0]
    if n_nodes == 0:
        return 0.0
    B = len(sizes)
    lp = float(np.sum(table[sizes])) - table[n_nodes]
    lp -= lbinom(table, n_nodes - 1, B - 1)
    lp -= np.log(n_nodes)
    return float(lp)


# ---------------------------------------------------------------------------
# BlockState-level wrappers.
# ---------------------------------------------------------------------------

def _layer_args(state, layer):
    net = state.network
    if layer == "h":
        slots = state.occupied_slots(NodeType.DOC)
        n_pairs = state.B[NodeType.DOC] ** 2
        return dict(e=state.e_h, er_out=state.er_h_out, er_in=state.er_h_in,
                    slots=slots, E=net.n_hyperlinks, n_pairs=n_pairs,
                    degree_lf_sum=state.const_deg_lf["h"],
                    edge_mult_lf_sum=state.const_mult_lf["h"])
    if layer == "t":
        slots = np.concatenate([state.occupied_slots(NodeType.DOC),
                                state.occupied_slots(NodeType.WORD)])
        n_pairs = state.B[NodeType.DOC] * state.B[NodeType.WORD]
        return dict(e=state.e_t, er=state.er_t, slots=slots, E=net.n_tokens,
                    n_pairs=n_pairs, degree_lf_sum=state.const_deg_lf["t"],
                    edge_mult_lf_sum=state.const_mult_lf["t"])
    if layer == "m":
        slots = np.concatenate([state.occupied_slots(NodeType.DOC),
                                state.occupied_slots(NodeType.TAG)])
        n_pairs = state.B[NodeType.DOC] * state.B[NodeType.TAG]
        return dict(e=state.e_m, er=state.er_m, slots=slots, E=net.n_tag_edges,
                    n_pairs=n_pairs, degree_lf_sum=state.const_deg_lf["m"],
                    edge_mult_lf_sum=state.const_mult_lf["m"])
    raise ValueError("unknown layer %r" % layer)


def layer_log_marginal(state, layer: str) -> float:
    """ln P(A_layer | b) from the state's sufficient statistics."""
    args = _layer_args(state, layer)
    if layer == "h":
        return directed_layer_logp(state.table, args["e"], args["er_out"],
                                   args["er_in"], state.n_r, args["slots"],
                                   args["E"], args["n_pairs"],
                                   args["degree_lf_sum"], args["edge_mult_lf_sum"])
    return undirected_layer_logp(state.table, args["e"], args["er"],
                                 state.n_r, args["slots"], args["E"],
                                 args["n_pairs"], args["degree_lf_sum"],
                                 args["edge_mult_lf_sum"])


def partition_log_prior(state, include_fixed_tags: bool = False) -> float:
    """ln P(b) summed over the node types the state infers."""
    total = 0.0
    for t in state.inferred_types:
        total += partition_type_log_prior(
            state.table, state.type_group_sizes(t), state.n_nodes_of_type(t))
    if include_fixed_tags and state.fixed_tags and NodeType.TAG in state.active_types:
        total += partition_type_log_prior(
            state.table, state.type_group_sizes(NodeType.TAG),
            state.n_nodes_of_type(NodeType.TAG))
    return total


def fixed_tag_log_prior(state) -> float:
    """Prior mass of the pinned all-singleton tag partition (a constant)."""
    if not (state.fixed_tags and NodeType.TAG in state.active_types):
        return 0.0
    return partition_type_log_prior(state.table,
                                    state.type_group_sizes(NodeType.TAG),
                                    state.n_nodes_of_type(NodeType.TAG))


def joint_log_posterior_numerator(state) -> float:
    """sum of active-layer log marginals plus the partition log prior."""
    total = partition_log_prior(state)
    for layer in state.layers.active():
        total += layer_log_marginal(state, layer)
    return total


def description_length(state) -> float:
    """DL = -ln P(A, b), in nats."""
    return -joint_log_posterior_numerator(state)


def dl_breakdown(state) -> dict:
    per_layer = {layer: -layer_log_marginal(state, layer)
                 for layer in state.layers.active()}
    prior = -partition_log_prior(state)
    return {
        "dl_per_layer": per_layer,
        "dl_prior": prior,
        "dl_total": sum(per_layer.values()) + prior,
        "dl_fixed_tag_prior": -fixed_tag_log_prior(state),
    }


def dl_delta_move(state, node: int, target: int) -> float:
    """DL(after moving node to target group) - DL(before), in O(degree)."""
    return state.dl_delta_move(node, target)


def dl_delta_edge_insertion(state, u: int, v: int) -> float:
    """DL change from inserting one directed hyperlink u -> v.

    Vector-friendly: u, v may be arrays of document indices.
    """
    return state.dl_delta_h_insertion(u, v)


@dataclass
class FitResult:
    """Outcome of an MDL search over one layer combination."""

    model: str
    partition: "object"
    dl_total: float
    dl_per_layer: dict
    dl_prior: float
    dl_fixed_tag_prior: float
    B_per_type: dict
    seed: int
    n_sweeps: int
    n_chains: int
    wall_time: float
    chain_dls: list = field(default_factory=list)
    chain_partitions: list = field(default_factory=list)

    @property
    def dl_mean(self):
        return float(np.mean(self.chain_dls)) if self.chain_dls else self.dl_total

    @property
    def dl_std(self):
        return float(np.std(self.chain_dls, ddof=1)) if len(self.chain_dls) > 1 else 0.0

    @property
    def mdl(self):
        return float(np.min(self.chain_dls)) if self.chain_dls else self.dl_total

    def to_dict(self):
        return {
            "model": self.model,
            "dl_total": self.dl_total,
            "dl_per_layer": self.dl_per_layer,
            "dl_prior": self.dl_prior,
            "dl_fixed_tag_prior": self.dl_fixed_tag_prior,
            "dl_bits": self.dl_total / np.log(2.0),
            "B": {NodeType(k).name.lower(): int(v) for k, v in self.B_per_type.items()},
            "seed": self.seed,
            "sweeps": self.n_sweeps,
            "chains": self.n_chains,
            "dl_mean": self.dl_mean,
            "dl_std": self.dl_std,
            "mdl": self.mdl,
            "chain_dls": [float(x) for x in self.chain_dls],
        }
