"""Partition and sufficient-statistics containers.

BlockState keeps the group-level tallies (edge-count matrices, degree
totals, group sizes) from which every description-length term is computed,
and updates them incrementally in O(degree) per node move. Group slots are
banded by node type and occupied slots stay contiguous inside each band.
"""

from __future__ import annotations

import csv

import numpy as np

from . import _kernel as K
from .errors import TypeMismatch, UncoveredNode
from .likelihood import LayerSet, description_length, log_factorial_table
from .network import MultilayerNetwork, NodeType


class Partition:
    """Type-pure assignment of nodes to groups.

    Labels are per-type: documents, words, and tags each use their own
    0-based contiguous label space. Inactive nodes carry -1.
    """

    def __init__(self, labels, node_type):
        self.labels = np.asarray(labels, dtype=np.int64).copy()
        self.node_type = np.asarray(node_type, dtype=np.int8)
        if self.labels.shape != self.node_type.shape:
            raise ValueError("labels and node_type must have the same length")
        self.compact()

    def compact(self):
        """Renumber labels per type to 0..B-1 in order of first appearance."""
        for t in (NodeType.DOC, NodeType.WORD, NodeType.TAG):
            mask = (self.node_type == t) & (self.labels >= 0)
            if not mask.any():
                continue
            vals = self.labels[mask]
            uniq, inv = np.unique(vals, return_inverse=True)
            # order of first appearance keeps label streams deterministic
            first = np.zeros(len(uniq), dtype=np.int64)
            seen = {}
            nxt = 0
            for v in vals:
                if v not in seen:
                    seen[v] = nxt
                    nxt += 1
            remap = np.array([seen[u] for u in uniq], dtype=np.int64)
            self.labels[mask] = remap[inv]
        return self

    @property
    def B_per_type(self):
        out = {}
        for t in (NodeType.DOC, NodeType.WORD, NodeType.TAG):
            mask = (self.node_type == t) & (self.labels >= 0)
            out[t] = int(self.labels[mask].max() + 1) if mask.any() else 0
        return out

    @property
    def B_total(self):
        return sum(self.B_per_type.values())

    def project(self, node_type):
        """Labels of one node type, compacted to 0..B-1."""
        mask = self.node_type == node_type
        vals = self.labels[mask]
        if (vals < 0).any():
            raise UncoveredNode("projection over nodes without assignment")
        return vals.copy()

    def copy(self):
        return Partition(self.labels.copy(), self.node_type)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.labels, other.labels) and \
            np.array_equal(self.node_type, other.node_type)

    def save_csv(self, path, network: MultilayerNetwork):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["node_id", "node_type", "group_label"])
            for i in range(len(self.labels)):
                if self.labels[i] < 0:
                    continue
                w.writerow([network.node_name(i),
                            NodeType(self.node_type[i]).name.lower(),
                            int(self.labels[i])])

    @classmethod
    def load_csv(cls, path, network: MultilayerNetwork):
        labels = np.full(network.n_nodes, -1, dtype=np.int64)
        index = {}
        for i in range(network.n_nodes):
            index[(NodeType(network.node_type[i]).name.lower(), network.node_name(i))] = i
        with open(path, "r", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                i = index[(row["node_type"], row["node_id"])]
                labels[i] = int(row["group_label"])
        return cls(labels, network.node_type)


def singleton_partition(network, layers: LayerSet) -> Partition:
    labels = np.full(network.n_nodes, -1, dtype=np.int64)
    for t in layers.node_types:
        mask = network.node_type == t
        labels[mask] = np.arange(int(mask.sum()))
    return Partition(labels, network.node_type)


def single_group_partition(network, layers: LayerSet) -> Partition:
    labels = np.full(network.n_nodes, -1, dtype=np.int64)
    for t in layers.node_types:
        labels[network.node_type == t] = 0
    return Partition(labels, network.node_type)


class BlockState:
    """Sufficient statistics of a partition over the selected layers."""

    def __init__(self, network: MultilayerNetwork, partition: Partition,
                 layers: LayerSet, fixed_tags: bool | None = None,
                 cap_per_type=None):
        self.network = network
        self.layers = layers
        self.fixed_tags = layers.m if fixed_tags is None else fixed_tags
        self.active_types = layers.node_types
        self.inferred_types = tuple(
            t for t in self.active_types
            if not (t == NodeType.TAG and self.fixed_tags))

        labels = partition.labels.copy()
        ntype = network.node_type
        if self.fixed_tags and NodeType.TAG in self.active_types:
            mask = ntype == NodeType.TAG
            labels[mask] = np.arange(int(mask.sum()))
        for t in self.active_types:
            mask = ntype == t
            if (labels[mask] < 0).any():
                raise UncoveredNode("node of type %s lacks an assignment" % NodeType(t).name)
        labels[~np.isin(ntype, np.asarray(self.active_types, dtype=np.int8))] = -1

        self._build(labels, cap_per_type)

    # -- construction ---------------------------------------------------

    def _build(self, labels, cap_per_type=None):
        net = self.network
        ntype = net.node_type
        self.Ntyp = np.zeros(3, dtype=np.int64)
        B_init = np.zeros(3, dtype=np.int64)
        for t in self.active_types:
            mask = ntype == t
            self.Ntyp[t] = int(mask.sum())
            if self.Ntyp[t]:
                B_init[t] = int(labels[mask].max() + 1)

        if cap_per_type is None:
            cap_per_type = {}
        self.cap = np.zeros(3, dtype=np.int64)
        for t in range(3):
            want = cap_per_type.get(t, 0)
            auto = max(16, int(1.5 * B_init[t]) + 8)
            self.cap[t] = min(self.Ntyp[t], max(want, auto)) if self.Ntyp[t] else 0
            self.cap[t] = max(self.cap[t], B_init[t])
        self.base = np.zeros(3, dtype=np.int64)
        self.base[1] = self.cap[0]
        self.base[2] = self.cap[0] + self.cap[1]
        self.dim = int(self.cap.sum())
        self.Bcnt = B_init

        # slot assignment
        self.b = np.full(net.n_nodes, -1, dtype=np.int64)
        for t in self.active_types:
            mask = ntype == t
            self.b[mask] = labels[mask] + self.base[t]

        E = {"h": net.n_hyperlinks, "t": net.n_tokens, "m": net.n_tag_edges}
        self.E_h, self.E_t, self.E_m = E["h"], E["t"], E["m"]
        pairs_max = max(self.cap[0] ** 2, self.cap[0] * max(self.cap[1], self.cap[2], 1), 1)
        need = int(max(net.n_nodes + 2 * max(E.values(), default=1),
                       pairs_max + max(E.values(), default=1)) + 8)
        self.table = log_factorial_table(need)

        dim = self.dim
        self.n_r = np.zeros(dim, dtype=np.int64)
        active = self.b >= 0
        np.add.at(self.n_r, self.b[active], 1)

        self.e_h = np.zeros((dim, dim), dtype=np.int64)
        self.er_h_out = np.zeros(dim, dtype=np.int64)
        self.er_h_in = np.zeros(dim, dtype=np.int64)
        self.e_t = np.zeros((dim, dim), dtype=np.int64)
        self.er_t = np.zeros(dim, dtype=np.int64)
        self.e_m = np.zeros((dim, dim), dtype=np.int64)
        self.er_m = np.zeros(dim, dtype=np.int64)

        if self.layers.h and len(net.h_src):
            np.add.at(self.e_h, (self.b[net.h_src], self.b[net.h_dst]), 1)
            self.er_h_out[:] = self.e_h.sum(axis=1)
            self.er_h_in[:] = self.e_h.sum(axis=0)
        if self.layers.t and len(net.t_doc):
            wslot = self.b[net.t_word + net.n_docs]
            dslot = self.b[net.t_doc]
            np.add.at(self.e_t, (dslot, wslot), net.t_count)
            np.add.at(self.e_t, (wslot, dslot), net.t_count)
            self.er_t[:] = self.e_t.sum(axis=1)
        if self.layers.m and len(net.m_doc):
            gslot = self.b[net.m_tag + net.n_docs + net.n_words]
            dslot = self.b[net.m_doc]
            np.add.at(self.e_m, (dslot, gslot), 1)
            np.add.at(self.e_m, (gslot, dslot), 1)
            self.er_m[:] = self.e_m.sum(axis=1)

        # node degrees per layer (0 when the layer is off)
        z = np.zeros(net.n_nodes, dtype=np.int64)
        self.kho = net.h_out.deg if self.layers.h else z
        self.khi = net.h_in.deg if self.layers.h else z
        self.ktd = net.t_adj.deg if self.layers.t else z
        self.kmd = net.m_adj.deg if self.layers.m else z
        self.dact = np.zeros(net.n_nodes, dtype=np.int64)
        for t in self.active_types:
            mask = ntype == t
            if t == NodeType.DOC:
                self.dact[mask] = (self.kho + self.khi + self.ktd + self.kmd)[mask]
            elif t == NodeType.WORD:
                self.dact[mask] = self.ktd[mask]
            else:
                self.dact[mask] = self.kmd[mask]

        # partition-independent DL pieces per layer
        tab = self.table
        self.const_deg_lf = {
            "h": float(np.sum(tab[self.kho]) + np.sum(tab[self.khi])) if self.layers.h else 0.0,
            "t": float(np.sum(tab[self.ktd[:net.n_docs]]) +
                       np.sum(tab[net.t_adj.deg[net.n_docs:net.n_docs + net.n_words]])) if self.layers.t else 0.0,
            "m": float(np.sum(tab[self.kmd])) if self.layers.m else 0.0,
        }
        self.const_mult_lf = {
            "h": 0.0,
            "t": float(np.sum(tab[net.t_count])) if self.layers.t else 0.0,
            "m": 0.0,
        }

        # scratch buffers for the kernel
        self._stamp = np.zeros(dim, dtype=np.int64)
        self._scounter = np.zeros(1, dtype=np.int64)
        self._acc = np.zeros(dim, dtype=np.int64)
        self._buf = [np.zeros(dim, dtype=np.int64) for _ in range(10)]
        self._side = np.full(net.n_nodes, -1, dtype=np.int8)
        self._side2 = np.full(net.n_nodes, -1, dtype=np.int8)
        self._type_nodes = {
            t: np.nonzero(ntype == t)[0].astype(np.int64)
            for t in self.active_types
        }
        self.dl = description_length(self)

    # -- views ------------------------------------------------------------

    @property
    def B(self):
        return {t: int(self.Bcnt[t]) for t in range(3)}

    def occupied_slots(self, node_type):
        t = int(node_type)
        return np.arange(self.base[t], self.base[t] + self.Bcnt[t], dtype=np.int64)

    def type_group_sizes(self, node_type):
        t = int(node_type)
        return self.n_r[self.base[t]:self.base[t] + self.Bcnt[t]]

    def n_nodes_of_type(self, node_type):
        return int(self.Ntyp[int(node_type)])

    def type_nodes(self, node_type):
        """Node indices of one active type."""
        return self._type_nodes.get(int(node_type),
                                    np.zeros(0, dtype=np.int64))

    def partition(self) -> Partition:
        labels = np.full(self.network.n_nodes, -1, dtype=np.int64)
        for t in self.active_types:
            mask = self.network.node_type == t
            labels[mask] = self.b[mask] - self.base[t]
        return Partition(labels, self.network.node_type)

    def copy(self) -> "BlockState":
        return BlockState(self.network, self.partition(), self.layers,
                          fixed_tags=self.fixed_tags,
                          cap_per_type={t: int(self.cap[t]) for t in range(3)})

    # -- moves --------------------------------------------------------

    def _check_move(self, node, target):
        if self.b[node] < 0:
            raise UncoveredNode("node %d is outside the active layers" % node)
        tau = int(self.network.node_type[node])
        lo, hi = self.base[tau], self.base[tau] + self.Bcnt[tau]
        if not (lo <= target <= hi):
            raise TypeMismatch("slot %d does not hold %s nodes"
                               % (target, NodeType(tau).name))
        if target == hi:
            if self.Bcnt[tau] >= self.Ntyp[tau]:
                # every node is already a singleton; a fresh group is a no-op
                return tau, int(self.b[node])
            if self.Bcnt[tau] >= self.cap[tau]:
                self.grow(tau)
                return self._check_move(node, target - lo + self.base[tau])
        return tau, target

    def _gathers(self, i):
        net = self.network
        tau = int(net.node_type[i])
        sv = self._scounter
        g = self._buf
        co = ci = ct = cm = 0
        if self.layers.h and tau == NodeType.DOC:
            sv[0] += 1
            co = K._gather(i, self.b, net.h_out.indptr, net.h_out.nbr, net.h_out.wgt,
                           g[0], g[1], self._stamp, sv[0], self._acc)
            sv[0] += 1
            ci = K._gather(i, self.b, net.h_in.indptr, net.h_in.nbr, net.h_in.wgt,
                           g[2], g[3], self._stamp, sv[0], self._acc)
        if self.layers.t and tau <= NodeType.WORD:
            sv[0] += 1
            ct = K._gather(i, self.b, net.t_adj.indptr, net.t_adj.nbr, net.t_adj.wgt,
                           g[4], g[5], self._stamp, sv[0], self._acc)
        if self.layers.m and tau in (NodeType.DOC, NodeType.TAG):
            sv[0] += 1
            cm = K._gather(i, self.b, net.m_adj.indptr, net.m_adj.nbr, net.m_adj.wgt,
                           g[6], g[7], self._stamp, sv[0], self._acc)
        return co, ci, ct, cm

    def _flags(self):
        return (1 if self.layers.h else 0,
                1 if self.layers.t else 0,
                1 if self.layers.m else 0)

    def dl_delta_move(self, node, target) -> float:
        tau, target = self._check_move(node, target)
        if target == self.b[node]:
            return 0.0
        co, ci, ct, cm = self._gathers(node)
        h_on, t_on, m_on = self._flags()
        g = self._buf
        ddl, _ = K._move_delta(node, target, self.b, self.network.node_type,
                               self.Bcnt, self.Ntyp, self.n_r,
                               h_on, t_on, m_on,
                               self.e_h, self.er_h_out, self.er_h_in, self.E_h,
                               self.e_t, self.er_t, self.E_t,
                               self.e_m, self.er_m, self.E_m,
                               self.table, self.kho, self.khi, self.ktd, self.kmd,
                               g[0], g[1], co, g[2], g[3], ci,
                               g[4], g[5], ct, g[6], g[7], cm)
        return float(ddl)

    def move_node(self, node, target) -> "BlockState":
        """Move a node to a type-compatible group slot, in place."""
        tau, target = self._check_move(node, target)
        r = self.b[node]
        if target == r:
            return self
        co, ci, ct, cm = self._gathers(node)
        h_on, t_on, m_on = self._flags()
        g = self._buf
        ddl, _ = K._move_delta(node, target, self.b, self.network.node_type,
                               self.Bcnt, self.Ntyp, self.n_r,
                               h_on, t_on, m_on,
                               self.e_h, self.er_h_out, self.er_h_in, self.E_h,
                               self.e_t, self.er_t, self.E_t,
                               self.e_m, self.er_m, self.E_m,
                               self.table, self.kho, self.khi, self.ktd, self.kmd,
                               g[0], g[1], co, g[2], g[3], ci,
                               g[4], g[5], ct, g[6], g[7], cm)
        fresh = self.base[tau] + self.Bcnt[tau]
        K._apply_move(node, target, self.b, self.network.node_type, self.n_r,
                      h_on, t_on, m_on,
                      self.e_h, self.er_h_out, self.er_h_in,
                      self.e_t, self.er_t, self.e_m, self.er_m,
                      self.kho, self.khi, self.ktd, self.kmd,
                      g[0], g[1], co, g[2], g[3], ci,
                      g[4], g[5], ct, g[6], g[7], cm)
        K._finish_accept(node, r, target, tau, fresh, self.network.n_nodes,
                         self.base, self.Bcnt, self.b, self.n_r,
                         h_on, t_on, m_on,
                         self.e_h, self.er_h_out, self.er_h_in,
                         self.e_t, self.er_t, self.e_m, self.er_m)
        self.dl += float(ddl)
        return self

    def move_to_new_group(self, node) -> float:
        """Split a node into a fresh singleton group; returns the DL change."""
        tau = int(self.network.node_type[node])
        before = self.dl
        self.move_node(node, self.base[tau] + self.Bcnt[tau])
        return self.dl - before

    def grow(self, tau):
        """Enlarge one type band, remapping the state in place."""
        caps = {t: int(self.cap[t]) for t in range(3)}
        caps[int(tau)] = int(min(self.Ntyp[tau], caps[int(tau)] * 2 + 8))
        part = self.partition()
        self.__class__.__init__(self, self.network, part, self.layers,
                                fixed_tags=self.fixed_tags, cap_per_type=caps)

    # -- link-prediction support ---------------------------------------

    def dl_delta_h_insertion(self, u, v):
        """DL change from adding one hyperlink u -> v (vectorized).

        The candidates must be absent from the observed layer, so the
        A_uv! term stays zero.
        """
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        tab = self.table
        r, s = self.b[u], self.b[v]
        bd = int(self.Bcnt[0])
        E = self.E_h
        ers = self.e_h[r, s]
        ero, eri = self.er_h_out[r], self.er_h_in[s]
        ko, ki = self.kho[u], self.khi[v]
        nr, ns = self.n_r[r], self.n_r[s]
        dlnp = (tab[ers + 1] - tab[ers]) + (tab[ko + 1] - tab[ko]) \
            + (tab[ki + 1] - tab[ki])
        dlnp -= (tab[ero + 1] - tab[ero]) + (tab[eri + 1] - tab[eri])
        # degree prior: multiset(n_r, e_r) gains one unit of degree mass
        dlnp -= (tab[nr + ero] - tab[ero + 1]) - (tab[nr + ero - 1] - tab[ero])
        dlnp -= (tab[ns + eri] - tab[eri + 1]) - (tab[ns + eri - 1] - tab[eri])
        # edge-count prior at E+1
        dlnp -= (tab[bd * bd + E] - tab[E + 1]) - (tab[bd * bd + E - 1] - tab[E])
        return -dlnp

    def kernel_args(self):
        net = self.network
        h_on, t_on, m_on = self._flags()
        g = self._buf
        return (self.b, net.node_type, self.base, self.cap, self.Bcnt, self.Ntyp,
                self.n_r, h_on, t_on, m_on,
                self.e_h, self.er_h_out, self.er_h_in, self.E_h,
                self.e_t, self.er_t, self.E_t,
                self.e_m, self.er_m, self.E_m,
                self.table,
                self.kho, self.khi, self.ktd, self.kmd, self.dact,
                net.h_out.indptr, net.h_out.nbr, net.h_out.wgt, net.h_out.cum,
                net.h_in.indptr, net.h_in.nbr, net.h_in.wgt, net.h_in.cum,
                net.t_adj.indptr, net.t_adj.nbr, net.t_adj.wgt, net.t_adj.cum,
                net.m_adj.indptr, net.m_adj.nbr, net.m_adj.wgt, net.m_adj.cum,
                self._stamp, self._scounter, self._acc,
                g[0], g[1], g[2], g[3], g[4], g[5], g[6], g[7], g[8], g[9])


def from_scratch(network, partition, layers, fixed_tags=None) -> BlockState:
    """Exact tallies by full traversal; the reference for incremental updates."""
    return BlockState(network, partition, layers, fixed_tags=fixed_tags)
