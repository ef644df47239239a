"""MDL search and posterior sampling over partitions.

Each chain initializes a partition (agglomerative merging from singletons
by default), runs Metropolis sweeps where a node's target group is drawn
from a random neighbor's group with epsilon-smoothing toward a uniform
choice (including a fresh group), interleaves merge-split proposals, and
finally polishes the best partition seen with strictly-descending greedy
sweeps. Everything is deterministic given the seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernel as K
from .blocks import BlockState, Partition, singleton_partition
from .errors import EmptyNetwork
from .likelihood import FitResult, LayerSet, description_length, dl_breakdown
from .network import NodeType


@dataclass
class McmcConfig:
    seed: int = 1
    n_sweeps: int = 200
    n_chains: int = 10
    init: str = "agglomerative"          # agglomerative | random | singleton
    epsilon: float = 1.0
    beta: float = 1.0                    # inf = pure greedy descent
    merge_split: bool = True
    merge_split_attempts: int = 2        # per node type per sweep
    burn_in: int | None = None           # sampling: default n_sweeps // 2
    thin: int = 10
    greedy_sweeps: int = 100             # cap on final descent sweeps
    fixed_tags: bool | None = None       # default: fixed when M is active
    init_labels: Partition | None = None # warm start (overrides `init`)
    agglom_candidates: int = 4
    agglom_handoff: int = 320
    random_init_groups: int | None = None

    def __post_init__(self):
        if self.n_sweeps < 1:
            raise ValueError("n_sweeps must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")


@dataclass
class PosteriorSample:
    partition: Partition
    dl: float
    chain_id: int
    sweep_index: int


def _check_network(network, layers):
    if network.n_docs == 0:
        raise EmptyNetwork("network has no documents")
    if layers.h and not layers.t and not layers.m and network.n_hyperlinks == 0:
        raise EmptyNetwork("hyperlink layer is empty")


def _active_nodes(network, layers, fixed_tags):
    types = [t for t in layers.node_types
             if not (t == NodeType.TAG and fixed_tags)]
    mask = np.isin(network.node_type, np.asarray(types, dtype=np.int8))
    return np.nonzero(mask)[0].astype(np.int64)


# ---------------------------------------------------------------------------
# Agglomerative initialization on sparse tallies.
# ---------------------------------------------------------------------------

class _SparseAgglom:
    """Greedy group merging from singletons, on dict-of-dict tallies.

    Large networks stop merging once the total group count reaches the
    handoff threshold; the dense MCMC (with merge-split moves) finishes
    the descent with full refinement ability.
    """

    def __init__(self, network, layers, fixed_tags, rng, candidates=5,
                 handoff_total=320):
        self.net = network
        self.layers = layers
        self.rng = rng
        self.candidates = candidates
        self.handoff_total = handoff_total
        self.fixed_tags = fixed_tags
        n = network.n_nodes
        ntype = network.node_type
        self.types = [t for t in layers.node_types
                      if not (t == NodeType.TAG and fixed_tags)]
        self.active = [t for t in layers.node_types]

        # one singleton group per active node; group id = node id
        self.members = {}
        self.gtype = {}
        for t in self.active:
            for i in np.nonzero(ntype == t)[0]:
                self.members[int(i)] = [int(i)]
                self.gtype[int(i)] = int(t)
        self.Ntyp = {int(t): int((ntype == t).sum()) for t in self.active}
        self.B = dict(self.Ntyp)
        self.type_nodes = {int(t): np.nonzero(ntype == t)[0] for t in self.active}

        # per-layer sparse rows and degree totals
        self.rows = {}
        self.er = {}
        self.E = {}
        self.glabel = np.full(n, -1, dtype=np.int64)
        for t in self.active:
            idx = np.nonzero(ntype == t)[0]
            self.glabel[idx] = idx
        self._init_layer("h_out", network.h_src, network.h_dst, None, layers.h)
        self._init_layer("h_in", network.h_dst, network.h_src, None, layers.h)
        self._init_layer("t", np.concatenate([network.t_doc, network.t_word + network.n_docs]),
                         np.concatenate([network.t_word + network.n_docs, network.t_doc]),
                         np.concatenate([network.t_count, network.t_count]), layers.t)
        self._init_layer("m", np.concatenate([network.m_doc, network.m_tag + network.n_docs + network.n_words]),
                         np.concatenate([network.m_tag + network.n_docs + network.n_words, network.m_doc]),
                         None, layers.m)
        from .likelihood import log_factorial_table
        e_all = max(network.n_hyperlinks, network.n_tokens, network.n_tag_edges, 1)
        pairs_max = network.n_docs * max(network.n_docs, network.n_words,
                                         network.n_tags, 1)
        self.table = log_factorial_table(max(network.n_nodes + 2 * e_all,
                                             pairs_max + e_all) + 8)

    def _init_layer(self, name, src, dst, wgt, on):
        if not on:
            self.rows[name] = None
            return
        rows = {}
        er = {}
        w = wgt if wgt is not None else np.ones(len(src), dtype=np.int64)
        for s, d, c in zip(src, dst, w):
            r = rows.setdefault(int(s), {})
            r[int(d)] = r.get(int(d), 0) + int(c)
            er[int(s)] = er.get(int(s), 0) + int(c)
        self.rows[name] = rows
        self.er[name] = er
        self.E[name] = int(w.sum()) if name != "h_in" else 0

    def _merge_delta(self, u, v):
        """DL change of merging group v into group u (same type)."""
        tab = self.table
        d = 0.0
        t = self.gtype[u]
        layer_specs = []
        if self.layers.h and t == NodeType.DOC:
            layer_specs.append(("h_out", "h_in"))
        if self.layers.t and t in (NodeType.DOC, NodeType.WORD):
            layer_specs.append(("t", None))
        if self.layers.m and t in (NodeType.DOC, NodeType.TAG):
            layer_specs.append(("m", None))
        for name, conj in layer_specs:
            if name == "h_out":
                d += self._merge_delta_directed(u, v)
                continue
            rows, er = self.rows[name], self.er[name]
            ru = rows.get(u, {})
            rv = rows.get(v, {})
            for w_, c in rv.items():
                if w_ == u or w_ == v:
                    continue
                a = ru.get(w_, 0)
                d += tab[a] + tab[c] - tab[a + c]
            eu, ev = er.get(u, 0), er.get(v, 0)
            d += tab[eu + ev] - tab[eu] - tab[ev]
            nu, nv = len(self.members[u]), len(self.members[v])
            d += self._lnms(nu + nv, eu + ev) - self._lnms(nu, eu) - self._lnms(nv, ev)
        # pair-count priors and partition prior
        d += self._count_priors_delta(t)
        nu, nv = len(self.members[u]), len(self.members[v])
        d -= tab[nu + nv] - tab[nu] - tab[nv]
        Nt, Bt = self.Ntyp[t], self.B[t]
        d += (tab[Nt - 1] - tab[Bt - 2] - tab[Nt - Bt + 1]) \
            - (tab[Nt - 1] - tab[Bt - 1] - tab[Nt - Bt])
        return d

    def _merge_delta_directed(self, u, v):
        tab = self.table
        d = 0.0
        rows_o, er_o = self.rows["h_out"], self.er["h_out"]
        rows_i, er_i = self.rows["h_in"], self.er["h_in"]
        ru_o, rv_o = rows_o.get(u, {}), rows_o.get(v, {})
        ru_i, rv_i = rows_i.get(u, {}), rows_i.get(v, {})
        # off-diagonal rows and columns merge cellwise
        for w_, c in rv_o.items():
            if w_ in (u, v):
                continue
            a = ru_o.get(w_, 0)
            d += tab[a] + tab[c] - tab[a + c]
        for w_, c in rv_i.items():
            if w_ in (u, v):
                continue
            a = ru_i.get(w_, 0)
            d += tab[a] + tab[c] - tab[a + c]
        # the four internal cells collapse into one
        uu = ru_o.get(u, 0)
        uv = ru_o.get(v, 0)
        vu = rv_o.get(u, 0)
        vv = rv_o.get(v, 0)
        d += tab[uu] + tab[uv] + tab[vu] + tab[vv] - tab[uu + uv + vu + vv]
        euo, evo = er_o.get(u, 0), er_o.get(v, 0)
        eui, evi = er_i.get(u, 0), er_i.get(v, 0)
        d += tab[euo + evo] - tab[euo] - tab[evo]
        d += tab[eui + evi] - tab[eui] - tab[evi]
        nu, nv = len(self.members[u]), len(self.members[v])
        d += self._lnms(nu + nv, euo + evo) - self._lnms(nu, euo) - self._lnms(nv, evo)
        d += self._lnms(nu + nv, eui + evi) - self._lnms(nu, eui) - self._lnms(nv, evi)
        return d

    def _lnms(self, n, m):
        if n <= 0:
            return 0.0
        tab = self.table
        return tab[n + m - 1] - tab[m] - tab[n - 1]

    def _pairs(self, bd, bw, bg):
        out = {}
        if self.layers.h:
            out["h"] = bd * bd
        if self.layers.t:
            out["t"] = bd * bw
        if self.layers.m:
            out["m"] = bd * bg
        return out

    def _count_priors_delta(self, t):
        bd = self.B.get(int(NodeType.DOC), 0)
        bw = self.B.get(int(NodeType.WORD), 0)
        bg = self.B.get(int(NodeType.TAG), 0)
        before = self._pairs(bd, bw, bg)
        if t == NodeType.DOC:
            after = self._pairs(bd - 1, bw, bg)
        elif t == NodeType.WORD:
            after = self._pairs(bd, bw - 1, bg)
        else:
            after = self._pairs(bd, bw, bg - 1)
        d = 0.0
        e_by = {"h": self.net.n_hyperlinks, "t": self.net.n_tokens, "m": self.net.n_tag_edges}
        for name in before:
            E = e_by[name]
            if E:
                d += self._lnms(after[name], E) - self._lnms(before[name], E)
        return d

    def _apply_merge(self, u, v):
        t = self.gtype[u]
        # undirected layers: rows are symmetric, so only v's neighbors
        # reference v
        for name in ("t", "m"):
            rows = self.rows[name]
            if rows is None:
                continue
            er = self.er[name]
            rv = rows.pop(v, None)
            if rv:
                ru = rows.setdefault(u, {})
                for w_, c in rv.items():
                    ru[w_] = ru.get(w_, 0) + c
                    rw = rows[w_]
                    rw[u] = rw.get(u, 0) + rw.pop(v)
            if v in er:
                er[u] = er.get(u, 0) + er.pop(v)
        # directed layer: redirect references via the conjugate adjacency
        if self.rows["h_out"] is not None and t == NodeType.DOC:
            ro, ri = self.rows["h_out"], self.rows["h_in"]
            rvo = ro.pop(v, {})
            rvi = ri.pop(v, {})
            for w_ in rvi:
                if w_ in (u, v):
                    continue
                row = ro[w_]
                row[u] = row.get(u, 0) + row.pop(v)
            for w_ in rvo:
                if w_ in (u, v):
                    continue
                row = ri[w_]
                row[u] = row.get(u, 0) + row.pop(v)
            ruo = ro.setdefault(u, {})
            rui = ri.setdefault(u, {})
            for w_, c in rvo.items():
                key = u if w_ in (u, v) else w_
                ruo[key] = ruo.get(key, 0) + c
            for w_, c in rvi.items():
                key = u if w_ in (u, v) else w_
                rui[key] = rui.get(key, 0) + c
            if v in ruo:
                ruo[u] = ruo.get(u, 0) + ruo.pop(v)
            if v in rui:
                rui[u] = rui.get(u, 0) + rui.pop(v)
            for er in (self.er["h_out"], self.er["h_in"]):
                if v in er:
                    er[u] = er.get(u, 0) + er.pop(v)
        self.members[u].extend(self.members.pop(v))
        for i in self.members[u]:
            self.glabel[i] = u
        del self.gtype[v]
        self.B[t] -= 1

    def run(self):
        rng = self.rng
        big = sum(self.B.values()) > self.handoff_total
        while True:
            merged_any = False
            for t in self.types:
                groups = [g for g, tt in self.gtype.items() if tt == t]
                if len(groups) < 2:
                    continue
                rng.shuffle(groups)
                done = set()
                for g in groups:
                    if g in done or g not in self.gtype or self.B[t] < 2:
                        continue
                    best, best_d = -1, 0.0
                    cands = self._candidates(g, t)
                    for c in cands:
                        if c == g or c in done or c not in self.gtype:
                            continue
                        d = self._merge_delta(g, c)
                        if d < best_d - 1e-12:
                            best, best_d = c, d
                    if best >= 0:
                        self._apply_merge(g, best)
                        done.add(g)
                        done.add(best)
                        merged_any = True
            if not merged_any:
                break
            if big and sum(self.B.values()) <= self.handoff_total:
                break
        return Partition(self._final_labels(), self.net.node_type)

    def _nbr_node(self, i):
        """Random neighbor of node i across the active layers, or -1."""
        net = self.net
        csrs = []
        tau = net.node_type[i]
        if self.layers.h and tau == NodeType.DOC:
            csrs += [net.h_out, net.h_in]
        if self.layers.t and tau <= NodeType.WORD:
            csrs.append(net.t_adj)
        if self.layers.m and tau in (NodeType.DOC, NodeType.TAG):
            csrs.append(net.m_adj)
        spans = [(c, int(c.indptr[i]), int(c.indptr[i + 1])) for c in csrs]
        total = sum(hi - lo for _, lo, hi in spans)
        if total == 0:
            return -1
        k = rng_int(self.rng, total)
        for c, lo, hi in spans:
            if k < hi - lo:
                return int(c.nbr[lo + k])
            k -= hi - lo
        return -1

    def _candidates(self, g, t):
        """Merge partners reached by two random adjacency hops, plus one
        uniform same-type pick."""
        out = []
        members = self.members[g]
        for _ in range(self.candidates):
            i = members[rng_int(self.rng, len(members))]
            j = self._nbr_node(i)
            if j < 0:
                continue
            mid = int(self.glabel[j])
            mmembers = self.members.get(mid)
            if not mmembers:
                continue
            m = mmembers[rng_int(self.rng, len(mmembers))]
            j2 = self._nbr_node(m)
            if j2 < 0:
                continue
            part = int(self.glabel[j2])
            if part in self.gtype and self.gtype[part] == t:
                out.append(part)
        # one size-biased uniform pick keeps the search from stalling
        nodes = self.type_nodes[t]
        if len(nodes):
            part = int(self.glabel[nodes[rng_int(self.rng, len(nodes))]])
            if part != g:
                out.append(part)
        return out

    def _final_labels(self):
        labels = np.full(self.net.n_nodes, -1, dtype=np.int64)
        per_type_next = {}
        gmap = {}
        for i in range(self.net.n_nodes):
            g = self.glabel[i]
            if g < 0:
                continue
            if g not in gmap:
                t = self.gtype[int(g)]
                gmap[g] = per_type_next.get(t, 0)
                per_type_next[t] = gmap[g] + 1
            labels[i] = gmap[g]
        return labels


def rng_int(rng, n):
    return int(rng.integers(0, n))


def _initial_partition(network, layers, config, rng, fixed_tags):
    if config.init_labels is not None:
        return config.init_labels.copy()
    if config.init == "singleton":
        return singleton_partition(network, layers)
    if config.init == "random":
        labels = np.full(network.n_nodes, -1, dtype=np.int64)
        for t in layers.node_types:
            mask = network.node_type == t
            n = int(mask.sum())
            if n == 0:
                continue
            if t == NodeType.TAG and fixed_tags:
                labels[mask] = np.arange(n)
                continue
            k = config.random_init_groups or max(1, int(round(np.sqrt(n))))
            k = min(k, n)
            lab = rng.integers(0, k, size=n)
            lab[rng.permutation(n)[:k]] = np.arange(k)  # no empty groups
            labels[mask] = lab
        return Partition(labels, network.node_type)
    if config.init == "agglomerative":
        agg = _SparseAgglom(network, layers, fixed_tags, rng,
                            candidates=config.agglom_candidates,
                            handoff_total=config.agglom_handoff)
        return agg.run()
    raise ValueError("unknown init strategy %r" % config.init)


# ---------------------------------------------------------------------------
# Merge-split proposals (sequentially allocated).
# ---------------------------------------------------------------------------

def _merge_split_step(state, tau, rng, beta):
    """One merge-split attempt on node type tau. Returns the DL change.

    Same-group picks propose a split of the shared group seeded by the
    two nodes, with members allocated sequentially by adjacency affinity;
    different-group picks propose the merge, whose reverse probability is
    the replayed allocation of the actual membership under the same
    scheme. Accepted by exp(-beta dDL) times the proposal ratio.
    """
    nodes = state.type_nodes(tau)
    if len(nodes) < 2:
        return 0.0
    ij = rng.choice(len(nodes), size=2, replace=False)
    i, j = int(nodes[ij[0]]), int(nodes[ij[1]])
    bi, bj = int(state.b[i]), int(state.b[j])
    greedy = not np.isfinite(beta)

    if bi == bj:
        if len(np.nonzero(state.b == bi)[0]) < 2:
            return 0.0
        if state.Bcnt[tau] >= state.cap[tau]:
            if state.Bcnt[tau] >= state.Ntyp[tau]:
                return 0.0
            state.grow(tau)
            bi = int(state.b[i])
        members = np.nonzero(state.b == bi)[0]
        members = members[(members != i) & (members != j)]
        members = members[rng.permutation(len(members))]
        dl0 = state.dl
        args = state.kernel_args()
        fresh = int(state.base[tau] + state.Bcnt[tau])
        d0 = K.move_full(j, fresh, *args)
        side = state._side
        side.fill(-1)
        side[i] = 0
        side[j] = 1
        rand = rng.random(len(members))
        d_alloc, log_q = K.alloc_split(i, j, members, rand, side, side, 1, *args)
        ddl = d0 + d_alloc
        state.dl += ddl
        if greedy:
            ok = ddl < -1e-12
        else:
            ok = np.log(rng.random()) < -beta * ddl - log_q
        if not ok:
            movers = np.nonzero(side == 1)[0]
            state.dl += K.move_all(movers, bi, *args)
        return state.dl - dl0

    # merge j's group into i's; reverse = the split seeded by (i, j)
    movers = np.nonzero(state.b == bj)[0]
    members_a = np.nonzero(state.b == bi)[0]
    pool = np.concatenate([members_a[members_a != i], movers[movers != j]])
    pool = pool[rng.permutation(len(pool))]
    side = state._side
    side.fill(-1)
    side[i] = 0
    side[j] = 1
    true_side = state._side2
    true_side.fill(-1)
    true_side[members_a] = 0
    true_side[movers] = 1
    args = state.kernel_args()
    _, log_q_rev = K.alloc_split(i, j, pool, _EMPTY_RAND, side, true_side, 0, *args)
    dl0 = state.dl
    state.dl += K.move_all(movers, bi, *args)
    ddl = state.dl - dl0
    if greedy:
        ok = ddl < -1e-12
    else:
        ok = np.log(rng.random()) < -beta * ddl + log_q_rev
    if not ok:
        if state.Bcnt[tau] >= state.cap[tau]:
            state.grow(tau)
            args = state.kernel_args()
        fresh = int(state.base[tau] + state.Bcnt[tau])
        state.dl += K.move_all(movers, fresh, *args)
    return state.dl - dl0


_EMPTY_RAND = np.zeros(0, dtype=np.float64)


# ---------------------------------------------------------------------------
# Sweeps and chains.
# ---------------------------------------------------------------------------

def _run_sweep(state, order, rng, beta, epsilon, greedy=False):
    """One full sweep; handles band growth retries. Returns accepted count."""
    rand4 = rng.random((len(order), 4))
    accepted = 0
    start = 0
    while True:
        res = K.sweep(order[start:], rand4[start:], 0.0 if greedy else beta,
                      epsilon, 1 if greedy else 0, *state.kernel_args())
        n_acc, dl_sum, abort = res
        accepted += n_acc
        state.dl += dl_sum
        if abort < 0:
            break
        tau = int(state.network.node_type[order[start + abort]])
        state.grow(tau)
        start = start + abort
    return accepted


def _chain(network, layers, config, chain_id, collect_samples=False):
    """One MCMC chain. Returns (best_partition, best_dl, samples, final_state)."""
    fixed_tags = layers.m if config.fixed_tags is None else config.fixed_tags
    rng = np.random.default_rng(np.random.SeedSequence((config.seed, chain_id)))
    part = _initial_partition(network, layers, config, rng, fixed_tags)
    state = BlockState(network, part, layers, fixed_tags=fixed_tags)
    order_pool = _active_nodes(network, layers, fixed_tags)
    if len(order_pool) == 0:
        raise EmptyNetwork("no nodes to infer on layers %s" % layers.name)

    best_dl = state.dl
    best_part = state.partition()
    samples = []
    burn_in = config.burn_in if config.burn_in is not None else config.n_sweeps // 2
    ms_types = [t for t in layers.node_types
                if not (t == NodeType.TAG and fixed_tags)]

    for sweep_idx in range(config.n_sweeps):
        order = order_pool[rng.permutation(len(order_pool))]
        _run_sweep(state, order, rng, config.beta, config.epsilon,
                   greedy=not np.isfinite(config.beta))
        if config.merge_split:
            for t in ms_types:
                # scale attempts with the group count so descents from a
                # high-B start drain in a reasonable number of sweeps
                n_att = max(config.merge_split_attempts, int(state.Bcnt[t]) // 6)
                for _ in range(n_att):
                    _merge_split_step(state, t, rng, config.beta)
        if state.dl < best_dl - 1e-9:
            best_dl = state.dl
            best_part = state.partition()
        if collect_samples and sweep_idx >= burn_in and \
                (sweep_idx - burn_in) % config.thin == 0:
            state.dl = description_length(state)  # clear accumulated rounding
            samples.append(PosteriorSample(state.partition(), float(state.dl),
                                           chain_id, sweep_idx))
    # final greedy descent from the best partition seen
    state = BlockState(network, best_part, layers, fixed_tags=fixed_tags)
    stale = 0
    for _ in range(config.greedy_sweeps):
        order = order_pool[rng.permutation(len(order_pool))]
        acc = _run_sweep(state, order, rng, config.beta, config.epsilon, greedy=True)
        ms_gain = 0.0
        if config.merge_split:
            for t in ms_types:
                for _ in range(max(6, 2 * int(state.Bcnt[t]))):
                    ms_gain += _merge_split_step(state, t, rng, np.inf)
        stale = stale + 1 if (acc == 0 and ms_gain > -1e-9) else 0
        if stale >= 2:
            break
    state.dl = description_length(state)
    return state.partition(), float(state.dl), samples, state


def fit_mdl(network, layers: LayerSet, config: McmcConfig | None = None) -> FitResult:
    """Best (lowest-DL) partition across independent chains."""
    config = config or McmcConfig()
    _check_network(network, layers)
    t0 = time.perf_counter()
    chain_parts, chain_dls = [], []
    best_state = None
    for c in range(config.n_chains):
        part, dl, _, state = _chain(network, layers, config, c)
        chain_parts.append(part)
        chain_dls.append(dl)
        if best_state is None or dl < min(chain_dls[:-1], default=np.inf):
            best_state = state
    ib = int(np.argmin(chain_dls))
    bd = dl_breakdown(best_state)
    return FitResult(
        model=layers.name,
        partition=chain_parts[ib],
        dl_total=bd["dl_total"],
        dl_per_layer=bd["dl_per_layer"],
        dl_prior=bd["dl_prior"],
        dl_fixed_tag_prior=bd["dl_fixed_tag_prior"],
        B_per_type={t: b for t, b in best_state.B.items() if b},
        seed=config.seed,
        n_sweeps=config.n_sweeps,
        n_chains=config.n_chains,
        wall_time=time.perf_counter() - t0,
        chain_dls=chain_dls,
        chain_partitions=chain_parts,
    )


def sample_posterior(network, layers: LayerSet,
                     config: McmcConfig | None = None) -> list[PosteriorSample]:
    """Thinned posterior samples after burn-in, across chains."""
    config = config or McmcConfig()
    _check_network(network, layers)
    samples = []
    for c in range(config.n_chains):
        _, _, chain_samples, _ = _chain(network, layers, config, c,
                                        collect_samples=True)
        samples.extend(chain_samples)
    return samples
