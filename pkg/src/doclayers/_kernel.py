"""JIT-compiled inner loops for block-state updates and MCMC sweeps.

The state lives in flat arrays owned by ``blocks.BlockState``:

  b          group slot per node (-1 = outside the active layer set)
  n_r        group sizes per slot
  e_h        directed group edge counts (hyperlinks)
  e_t, e_m   symmetric group edge counts (tokens, tag edges)
  er_*       group degree totals per slot

Group slots are banded per node type and kept canonical: the occupied
slots of type tau are exactly [base[tau], base[tau] + B[tau]).  A "fresh"
group proposal always targets slot base + B; when a group empties, the
last slot of the band is swapped into the hole.

With canonical slots the chain walks unlabeled partition classes: for each
moved node the reverse proposal probability is evaluated in the post-move
state, and acceptance with exp(-dDL) times that proposal ratio balances
the per-node transition channels between classes, so the stationary law
is exp(-DL) per partition class.
"""

import math

import numpy as np
from numba import njit

NB_OPTS = dict(cache=True, nogil=True, fastmath=False)


@njit(**NB_OPTS)
def _lnms(table, n, m):
    # ln multiset(n, m) = ln C(n+m-1, m); zero when the block is empty
    if n <= 0:
        return 0.0
    return table[n + m - 1] - table[m] - table[n - 1]


@njit(**NB_OPTS)
def _gather(i, b, ptr, nbr, wgt, gg, gm, stamp, sval, acc):
    """Aggregate node i's neighbor multiplicities by group slot."""
    cnt = 0
    for k in range(ptr[i], ptr[i + 1]):
        g = b[nbr[k]]
        if stamp[g] != sval:
            stamp[g] = sval
            acc[g] = 0
            gg[cnt] = g
            cnt += 1
        acc[g] += wgt[k]
    for k in range(cnt):
        gm[k] = acc[gg[k]]
    return cnt


@njit(**NB_OPTS)
def _delta_undirected(table, e, er, n_r, r, s, gg, gm, cnt, k_i, E):
    """DL change in one undirected bipartite layer when moving i: r -> s.

    Neighbor groups are of the opposite type, so they never equal r or s.
    """
    if E == 0:
        return 0.0
    d = 0.0
    for k in range(cnt):
        u = gg[k]
        mu = gm[k]
        d += table[e[r, u]] - table[e[r, u] - mu]
        d += table[e[s, u]] - table[e[s, u] + mu]
    err, ers = er[r], er[s]
    d += table[err - k_i] - table[err] + table[ers + k_i] - table[ers]
    d += _lnms(table, n_r[r] - 1, err - k_i) - _lnms(table, n_r[r], err)
    d += _lnms(table, n_r[s] + 1, ers + k_i) - _lnms(table, n_r[s], ers)
    return d


@njit(**NB_OPTS)
def _delta_directed(table, e, ero, eri, n_r, r, s,
                    go, mo, co, gi, mi, ci, ko, ki, E):
    """DL change in the directed layer when moving i: r -> s."""
    if E == 0:
        return 0.0
    d = 0.0
    mo_r = mo_s = mi_r = mi_s = 0
    for k in range(co):
        u = go[k]
        if u == r:
            mo_r = mo[k]
        elif u == s:
            mo_s = mo[k]
        else:
            d += table[e[r, u]] - table[e[r, u] - mo[k]]
            d += table[e[s, u]] - table[e[s, u] + mo[k]]
    for k in range(ci):
        u = gi[k]
        if u == r:
            mi_r = mi[k]
        elif u == s:
            mi_s = mi[k]
        else:
            d += table[e[u, r]] - table[e[u, r] - mi[k]]
            d += table[e[u, s]] - table[e[u, s] + mi[k]]
    # cells where both endpoints sit in r or s
    d += table[e[r, r]] - table[e[r, r] - mo_r - mi_r]
    d += table[e[s, r]] - table[e[s, r] + mo_r - mi_s]
    d += table[e[r, s]] - table[e[r, s] + mi_r - mo_s]
    d += table[e[s, s]] - table[e[s, s] + mo_s + mi_s]
    d += table[ero[r] - ko] - table[ero[r]] + table[ero[s] + ko] - table[ero[s]]
    d += table[eri[r] - ki] - table[eri[r]] + table[eri[s] + ki] - table[eri[s]]
    d += _lnms(table, n_r[r] - 1, ero[r] - ko) - _lnms(table, n_r[r], ero[r])
    d += _lnms(table, n_r[s] + 1, ero[s] + ko) - _lnms(table, n_r[s], ero[s])
    d += _lnms(table, n_r[r] - 1, eri[r] - ki) - _lnms(table, n_r[r], eri[r])
    d += _lnms(table, n_r[s] + 1, eri[s] + ki) - _lnms(table, n_r[s], eri[s])
    return d


@njit(**NB_OPTS)
def _move_delta(i, s,
                b, ntype, Bcnt, Ntyp,
                n_r, h_on, t_on, m_on,
                e_h, ero, eri, Eh, e_t, ert, Et, e_m, erm, Em,
                table,
                kho, khi, ktd, kmd,
                go, mo, co, gi, mi, ci, gt, mt, ct, gm_, mm_, cm):
    """Full DL change of moving node i to slot s (gathers precomputed)."""
    r = b[i]
    tau = ntype[i]
    d = 0.0
    if h_on == 1 and tau == 0:
        d += _delta_directed(table, e_h, ero, eri, n_r, r, s,
                             go, mo, co, gi, mi, ci, kho[i], khi[i], Eh)
    if t_on == 1 and tau <= 1:
        d += _delta_undirected(table, e_t, ert, n_r, r, s, gt, mt, ct, ktd[i], Et)
    if m_on == 1 and (tau == 0 or tau == 2):
        d += _delta_undirected(table, e_m, erm, n_r, r, s, gm_, mm_, cm, kmd[i], Em)

    # partition prior: group-size factorials
    d -= table[n_r[r] - 1] - table[n_r[r]] + table[n_r[s] + 1] - table[n_r[s]]

    # group-count changes: partition prior binomial + per-layer pair priors
    dB = 0
    if n_r[r] == 1:
        dB -= 1
    if n_r[s] == 0:
        dB += 1
    if dB != 0:
        Bt = Bcnt[tau]
        Nt = Ntyp[tau]
        d += (table[Nt - 1] - table[Bt + dB - 1] - table[Nt - Bt - dB]) \
            - (table[Nt - 1] - table[Bt - 1] - table[Nt - Bt])
        bd, bw, bg = Bcnt[0], Bcnt[1], Bcnt[2]
        if tau == 0:
            if h_on == 1 and Eh > 0:
                d += _lnms(table, (bd + dB) * (bd + dB), Eh) - _lnms(table, bd * bd, Eh)
            if t_on == 1 and Et > 0:
                d += _lnms(table, (bd + dB) * bw, Et) - _lnms(table, bd * bw, Et)
            if m_on == 1 and Em > 0:
                d += _lnms(table, (bd + dB) * bg, Em) - _lnms(table, bd * bg, Em)
        elif tau == 1:
            if t_on == 1 and Et > 0:
                d += _lnms(table, bd * (bw + dB), Et) - _lnms(table, bd * bw, Et)
        else:
            if m_on == 1 and Em > 0:
                d += _lnms(table, bd * (bg + dB), Em) - _lnms(table, bd * bg, Em)
    return d, dB


@njit(**NB_OPTS)
def _apply_undirected(e, er, r, s, gg, gm, cnt, k_i):
    for k in range(cnt):
        u = gg[k]
        mu = gm[k]
        e[r, u] -= mu
        e[u, r] -= mu
        e[s, u] += mu
        e[u, s] += mu
    er[r] -= k_i
    er[s] += k_i


@njit(**NB_OPTS)
def _apply_directed(e, ero, eri, r, s, go, mo, co, gi, mi, ci, ko, ki):
    mo_r = mo_s = mi_r = mi_s = 0
    for k in range(co):
        u = go[k]
        if u == r:
            mo_r = mo[k]
        elif u == s:
            mo_s = mo[k]
        else:
            e[r, u] -= mo[k]
            e[s, u] += mo[k]
    for k in range(ci):
        u = gi[k]
        if u == r:
            mi_r = mi[k]
        elif u == s:
            mi_s = mi[k]
        else:
            e[u, r] -= mi[k]
            e[u, s] += mi[k]
    e[r, r] -= mo_r + mi_r
    e[s, r] += mo_r - mi_s
    e[r, s] += mi_r - mo_s
    e[s, s] += mo_s + mi_s
    ero[r] -= ko
    ero[s] += ko
    eri[r] -= ki
    eri[s] += ki


@njit(**NB_OPTS)
def _apply_move(i, s,
                b, ntype, n_r, h_on, t_on, m_on,
                e_h, ero, eri, e_t, ert, e_m, erm,
                kho, khi, ktd, kmd,
                go, mo, co, gi, mi, ci, gt, mt, ct, gm_, mm_, cm):
    r = b[i]
    tau = ntype[i]
    if h_on == 1 and tau == 0:
        _apply_directed(e_h, ero, eri, r, s, go, mo, co, gi, mi, ci, kho[i], khi[i])
    if t_on == 1 and tau <= 1:
        _apply_undirected(e_t, ert, r, s, gt, mt, ct, ktd[i])
    if m_on == 1 and (tau == 0 or tau == 2):
        _apply_undirected(e_m, erm, r, s, gm_, mm_, cm, kmd[i])
    n_r[r] -= 1
    n_r[s] += 1
    b[i] = s


@njit(**NB_OPTS)
def _swap_slots(x, y, n, b, n_r, h_on, t_on, m_on,
                e_h, ero, eri, e_t, ert, e_m, erm):
    """Exchange two group slots of the same type (canonical compaction)."""
    if x == y:
        return
    for i in range(n):
        if b[i] == x:
            b[i] = y
        elif b[i] == y:
            b[i] = x
    t = n_r[x]; n_r[x] = n_r[y]; n_r[y] = t
    if h_on == 1:
        t = ero[x]; ero[x] = ero[y]; ero[y] = t
        t = eri[x]; eri[x] = eri[y]; eri[y] = t
        dim = e_h.shape[0]
        for k in range(dim):
            t = e_h[x, k]; e_h[x, k] = e_h[y, k]; e_h[y, k] = t
        for k in range(dim):
            t = e_h[k, x]; e_h[k, x] = e_h[k, y]; e_h[k, y] = t
    if t_on == 1:
        t = ert[x]; ert[x] = ert[y]; ert[y] = t
        dim = e_t.shape[0]
        for k in range(dim):
            t = e_t[x, k]; e_t[x, k] = e_t[y, k]; e_t[y, k] = t
        for k in range(dim):
            t = e_t[k, x]; e_t[k, x] = e_t[k, y]; e_t[k, y] = t
    if m_on == 1:
        t = erm[x]; erm[x] = erm[y]; erm[y] = t
        dim = e_m.shape[0]
        for k in range(dim):
            t = e_m[x, k]; e_m[x, k] = e_m[y, k]; e_m[y, k] = t
        for k in range(dim):
            t = e_m[k, x]; e_m[k, x] = e_m[k, y]; e_m[k, y] = t


@njit(**NB_OPTS)
def _union_row_weight(t, x, h_on, t_on, m_on, e_h, e_t, e_m):
    w = 0.0
    if h_on == 1:
        w += e_h[t, x] + e_h[x, t]
    if t_on == 1:
        w += e_t[t, x]
    if m_on == 1:
        w += e_m[t, x]
    return w


@njit(**NB_OPTS)
def _union_mass_toward(t, tau, base, ero, eri, ert, erm):
    """Total union edge weight from group t into groups of type tau.

    Group degree totals already restrict to the right counterpart type,
    so this is O(1): hyperlinks live between documents, tokens between
    documents and words, tag edges between documents and tags.
    """
    t_type = 0 if t < base[1] else (1 if t < base[2] else 2)
    if tau == 0:
        if t_type == 0:
            return float(ero[t] + eri[t])
        if t_type == 1:
            return float(ert[t])
        return float(erm[t])
    if tau == 1:
        return float(ert[t])
    return float(erm[t])


@njit(**NB_OPTS)
def _proposal_logq(i, target, tau, base, Bnorm, eps,
                   dact_i, ug, um, ucnt,
                   h_on, t_on, m_on, e_h, e_t, e_m, ero, eri, ert, erm):
    """ln q(move i -> target); Bnorm counts candidates including a fresh slot."""
    if dact_i == 0:
        return -math.log(Bnorm)
    q = 0.0
    for k in range(ucnt):
        t = ug[k]
        w = um[k]
        ut = _union_mass_toward(t, tau, base, ero, eri, ert, erm)
        uts = _union_row_weight(t, target, h_on, t_on, m_on, e_h, e_t, e_m)
        q += w * (uts + eps) / (ut + eps * Bnorm)
    return math.log(q) - math.log(dact_i)


@njit(**NB_OPTS)
def _sample_neighbor(i, x, h_on, t_on, m_on,
                     kho, khi, ktd, kmd,
                     hop, hon, hoc, hip, hin, hic,
                     tp, tn, tc, mp, mn, mc):
    """Pick a neighbor of i with probability proportional to multiplicity."""
    if h_on == 1:
        if x < kho[i]:
            return _search_slice(hop, hon, hoc, i, x)
        x -= kho[i]
        if x < khi[i]:
            return _search_slice(hip, hin, hic, i, x)
        x -= khi[i]
    if t_on == 1:
        if x < ktd[i]:
            return _search_slice(tp, tn, tc, i, x)
        x -= ktd[i]
    if m_on == 1:
        if x < kmd[i]:
            return _search_slice(mp, mn, mc, i, x)
    return -1


@njit(**NB_OPTS)
def _search_slice(ptr, nbr, cum, i, x):
    lo, hi = ptr[i], ptr[i + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] > x:
            hi = mid
        else:
            lo = mid + 1
    return nbr[lo]


@njit(**NB_OPTS)
def _union_gather(i, b, h_on, t_on, m_on,
                  hop, hon, how, hip, hin, hiw,
                  tp, tn, tw, mp, mn, mw,
                  ug, um, stamp, sval, acc):
    """Multiplicity-weighted neighbor groups across the active layers."""
    cnt = 0
    if h_on == 1:
        for k in range(hop[i], hop[i + 1]):
            g = b[hon[k]]
            if stamp[g] != sval:
                stamp[g] = sval
                acc[g] = 0
                ug[cnt] = g
                cnt += 1
            acc[g] += how[k]
        for k in range(hip[i], hip[i + 1]):
            g = b[hin[k]]
            if stamp[g] != sval:
                stamp[g] = sval
                acc[g] = 0
                ug[cnt] = g
                cnt += 1
            acc[g] += hiw[k]
    if t_on == 1:
        for k in range(tp[i], tp[i + 1]):
            g = b[tn[k]]
            if stamp[g] != sval:
                stamp[g] = sval
                acc[g] = 0
                ug[cnt] = g
                cnt += 1
            acc[g] += tw[k]
    if m_on == 1:
        for k in range(mp[i], mp[i + 1]):
            g = b[mn[k]]
            if stamp[g] != sval:
                stamp[g] = sval
                acc[g] = 0
                ug[cnt] = g
                cnt += 1
            acc[g] += mw[k]
    for k in range(cnt):
        um[k] = acc[ug[k]]
    return cnt


@njit(**NB_OPTS)
def sweep(order, rand4, beta, eps, greedy,
          b, ntype, base, cap, Bcnt, Ntyp, n_r,
          h_on, t_on, m_on,
          e_h, ero, eri, Eh, e_t, ert, Et, e_m, erm, Em,
          table,
          kho, khi, ktd, kmd, dact,
          hop, hon, how, hoc, hip, hin, hiw, hic,
          tp, tn, tw, tc, mp, mn, mw, mc,
          stamp, scounter, acc,
          go, mo, gi, mi, gt, mt, gm_, mm_, ug, um):
    """One Metropolis sweep over `order`. Returns (accepted, dl_change, abort).

    abort >= 0 flags the position where a band ran out of slots; the caller
    grows the band and resumes from that position.
    """
    n_nodes = b.shape[0]
    accepted = 0
    dl_sum = 0.0
    for idx in range(order.shape[0]):
        i = order[idx]
        tau = ntype[i]
        Bt = Bcnt[tau]
        # a fresh group only exists while B < N for the type
        full = Bt >= Ntyp[tau]
        if not full and Bt >= cap[tau]:
            return accepted, dl_sum, idx
        fresh = base[tau] + Bt if not full else -1
        r = b[i]

        # ---- propose a target group -------------------------------------
        u_nbr = rand4[idx, 0]
        u_eps = rand4[idx, 1]
        u_pick = rand4[idx, 2]
        u_acc = rand4[idx, 3]
        Bnorm = Bt if full else Bt + 1
        top = base[tau] + Bnorm - 1
        s = -1
        if dact[i] == 0:
            s = base[tau] + int(u_pick * Bnorm)
            if s > top:
                s = top
        else:
            x = u_nbr * dact[i]
            j = _sample_neighbor(i, x, h_on, t_on, m_on, kho, khi, ktd, kmd,
                                 hop, hon, hoc, hip, hin, hic, tp, tn, tc, mp, mn, mc)
            t = b[j]
            ut = _union_mass_toward(t, tau, base, ero, eri, ert, erm)
            p_uniform = eps * Bnorm / (ut + eps * Bnorm)
            if u_eps < p_uniform:
                s = base[tau] + int(u_pick * Bnorm)
                if s > top:
                    s = top
            else:
                # draw s proportional to the union edge counts from group t
                target_w = u_pick * ut
                run = 0.0
                s = base[tau] + Bt - 1
                for xx in range(base[tau], base[tau] + Bt):
                    run += _union_row_weight(t, xx, h_on, t_on, m_on, e_h, e_t, e_m)
                    if run > target_w:
                        s = xx
                        break
        if s == r:
            continue

        # ---- evaluate ----------------------------------------------------
        sval = scounter[0] + 1
        co = _gather(i, b, hop, hon, how, go, mo, stamp, sval, acc) if h_on == 1 and tau == 0 else 0
        sval += 1
        ci = _gather(i, b, hip, hin, hiw, gi, mi, stamp, sval, acc) if h_on == 1 and tau == 0 else 0
        sval += 1
        ct = _gather(i, b, tp, tn, tw, gt, mt, stamp, sval, acc) if t_on == 1 and tau <= 1 else 0
        sval += 1
        cm = _gather(i, b, mp, mn, mw, gm_, mm_, stamp, sval, acc) if m_on == 1 and (tau == 0 or tau == 2) else 0
        sval += 1
        scounter[0] = sval

        ddl, dB = _move_delta(i, s, b, ntype, Bcnt, Ntyp, n_r,
                              h_on, t_on, m_on,
                              e_h, ero, eri, Eh, e_t, ert, Et, e_m, erm, Em,
                              table, kho, khi, ktd, kmd,
                              go, mo, co, gi, mi, ci, gt, mt, ct, gm_, mm_, cm)

        if greedy == 1:
            if ddl < -1e-12:
                _apply_move(i, s, b, ntype, n_r, h_on, t_on, m_on,
                            e_h, ero, eri, e_t, ert, e_m, erm,
                            kho, khi, ktd, kmd,
                            go, mo, co, gi, mi, ci, gt, mt, ct, gm_, mm_, cm)
                _finish_accept(i, r, s, tau, fresh, n_nodes, base, Bcnt,
                               b, n_r, h_on, t_on, m_on, e_h, ero, eri, e_t, ert, e_m, erm)
                accepted += 1
                dl_sum += ddl
            continue

        sval = scounter[0] + 1
        ucnt = _union_gather(i, b, h_on if tau == 0 else 0, t_on if tau <= 1 else 0,
                             m_on if (tau == 0 or tau == 2) else 0,
                             hop, hon, how, hip, hin, hiw, tp, tn, tw, mp, mn, mw,
                             ug, um, stamp, sval, acc)
        scounter[0] = sval

        lq_fwd = _proposal_logq(i, s, tau, base, Bnorm, eps, dact[i],
                                ug, um, ucnt,
                                h_on if tau == 0 else 0, t_on if tau <= 1 else 0,
                                m_on if (tau == 0 or tau == 2) else 0,
                                e_h, e_t, e_m, ero, eri, ert, erm)

        _apply_move(i, s, b, ntype, n_r, h_on, t_on, m_on,
                    e_h, ero, eri, e_t, ert, e_m, erm,
                    kho, khi, ktd, kmd,
                    go, mo, co, gi, mi, ci, gt, mt, ct, gm_, mm_, cm)

        Bt_new = Bt + dB
        Bnorm_rev = Bt_new if Bt_new >= Ntyp[tau] else Bt_new + 1
        lq_rev = _proposal_logq(i, r, tau, base, Bnorm_rev, eps, dact[i],
                                ug, um, ucnt,
                                h_on if tau == 0 else 0, t_on if tau <= 1 else 0,
                                m_on if (tau == 0 or tau == 2) else 0,
                                e_h, e_t, e_m, ero, eri, ert, erm)

        ln_acc = -beta * ddl + lq_rev - lq_fwd
        if math.log(u_acc) < ln_acc:
            _finish_accept(i, r, s, tau, fresh, n_nodes, base, Bcnt,
                           b, n_r, h_on, t_on, m_on, e_h, ero, eri, e_t, ert, e_m, erm)
            accepted += 1
            dl_sum += ddl
        else:
            # revert: move i back with the same neighbor tallies
            _apply_move(i, r, b, ntype, n_r, h_on, t_on, m_on,
                        e_h, ero, eri, e_t, ert, e_m, erm,
                        kho, khi, ktd, kmd,
                        go, mo, co, gi, mi, ci, gt, mt, ct, gm_, mm_, cm)
    return accepted, dl_sum, -1


@njit(**NB_OPTS)
def _finish_accept(i, r, s, tau, fresh, n_nodes, base, Bcnt,
                   b, n_r, h_on, t_on, m_on, e_h, ero, eri, e_t, ert, e_m, erm):
    """Canonical bookkeeping after an accepted move (B counts, compaction)."""
    if s == fresh:
        Bcnt[tau] += 1
    if n_r[r] == 0:
        last = base[tau] + Bcnt[tau] - 1
        _swap_slots(r, last, n_nodes, b, n_r, h_on, t_on, m_on,
                    e_h, ero, eri, e_t, ert, e_m, erm)
        Bcnt[tau] -= 1


@njit(**NB_OPTS)
def move_full(i, s,
              b, ntype, base, cap, Bcnt, Ntyp, n_r,
              h_on, t_on, m_on,
              e_h, ero, eri, Eh, e_t, ert, Et, e_m, erm, Em,
              table,
              kho, khi, ktd, kmd, dact,
              hop, hon, how, hoc, hip, hin, hiw, hic,
              tp, tn, tw, tc, mp, mn, mw, mc,
              stamp, scounter, acc,
              go, mo, gi, mi, gt, mt, gm_, mm_, ug, um):
    """Complete single-node move (gather, delta, apply, compaction).

    Returns the DL change. The target slot must be type-compatible and
    either occupied or the current fresh slot.
    """
    r = b[i]
    if s == r:
        return 0.0
    tau = ntype[i]
    sval = scounter[0] + 1
    co = _gather(i, b, hop, hon, how, go, mo, stamp, sval, acc) if h_on == 1 and tau == 0 else 0
    sval += 1
    ci = _gather(i, b, hip, hin, hiw, gi, mi, stamp, sval, acc) if h_on == 1 and tau == 0 else 0
    sval += 1
    ct = _gather(i, b, tp, tn, tw, gt, mt, stamp, sval, acc) if t_on == 1 and tau <= 1 else 0
    sval += 1
    cm = _gather(i, b, mp, mn, mw, gm_, mm_, stamp, sval, acc) if m_on == 1 and (tau == 0 or tau == 2) else 0
    scounter[0] = sval
    ddl, dB = _move_delta(i, s, b, ntype, Bcnt, Ntyp, n_r,
                          h_on, t_on, m_on,
                          e_h, ero, eri, Eh, e_t, ert, Et, e_m, erm, Em,
                          table, kho, khi, ktd, kmd,
                          go, mo, co, gi, mi, ci, gt, mt, ct, gm_, mm_, cm)
    fresh = base[tau] + Bcnt[tau]
    _apply_move(i, s, b, ntype, n_r, h_on, t_on, m_on,
                e_h, ero, eri, e_t, ert, e_m, erm,
                kho, khi, ktd, kmd,
                go, mo, co, gi, mi, ci, gt, mt, ct, gm_, mm_, cm)
    _finish_accept(i, r, s, tau, fresh, b.shape[0], base, Bcnt,
                   b, n_r, h_on, t_on, m_on, e_h, ero, eri, e_t, ert, e_m, erm)
    return ddl


@njit(**NB_OPTS)
def move_all(nodes, target,
             b, ntype, base, cap, Bcnt, Ntyp, n_r,
             h_on, t_on, m_on,
             e_h, ero, eri, Eh, e_t, ert, Et, e_m, erm, Em,
             table,
             kho, khi, ktd, kmd, dact,
             hop, hon, how, hoc, hip, hin, hiw, hic,
             tp, tn, tw, tc, mp, mn, mw, mc,
             stamp, scounter, acc,
             go, mo, gi, mi, gt, mt, gm_, mm_, ug, um):
    """Move every listed node into `target`; returns the total DL change.

    `target` may be the fresh slot only for the first node (group
    creation); compaction may relabel slots, so the realized target is
    re-read from the first moved node.
    """
    ddl = 0.0
    tgt = target
    first = True
    for k in range(nodes.shape[0]):
        i = nodes[k]
        ddl += move_full(i, tgt,
                         b, ntype, base, cap, Bcnt, Ntyp, n_r,
                         h_on, t_on, m_on,
                         e_h, ero, eri, Eh, e_t, ert, Et, e_m, erm, Em,
                         table, kho, khi, ktd, kmd, dact,
                         hop, hon, how, hoc, hip, hin, hiw, hic,
                         tp, tn, tw, tc, mp, mn, mw, mc,
                         stamp, scounter, acc,
                         go, mo, gi, mi, gt, mt, gm_, mm_, ug, um)
        if first:
            tgt = b[i]
            first = False
    return ddl


@njit(**NB_OPTS)
def _affinity_sides(m, side, h_on, t_on, m_on, ntype,
                    hop, hon, how, hip, hin, hiw, tp, tn, tw, mp, mn, mw):
    """Union-adjacency weight of node m toward split sides 0 and 1."""
    a0 = 0.0
    a1 = 0.0
    tau = ntype[m]
    if h_on == 1 and tau == 0:
        for k in range(hop[m], hop[m + 1]):
            sd = side[hon[k]]
            if sd == 0:
                a0 += how[k]
            elif sd == 1:
                a1 += how[k]
        for k in range(hip[m], hip[m + 1]):
            sd = side[hin[k]]
            if sd == 0:
                a0 += hiw[k]
            elif sd == 1:
                a1 += hiw[k]
    if t_on == 1 and tau <= 1:
        for k in range(tp[m], tp[m + 1]):
            sd = side[tn[k]]
            if sd == 0:
                a0 += tw[k]
            elif sd == 1:
                a1 += tw[k]
    if m_on == 1 and (tau == 0 or tau == 2):
        for k in range(mp[m], mp[m + 1]):
            sd = side[mn[k]]
            if sd == 0:
                a0 += mw[k]
            elif sd == 1:
                a1 += mw[k]
    return a0, a1


@njit(**NB_OPTS)
def alloc_split(i, j, members, rand, side, true_side, do_moves,
                b, ntype, base, cap, Bcnt, Ntyp, n_r,
                h_on, t_on, m_on,
                e_h, ero, eri, Eh, e_t, ert, Et, e_m, erm, Em,
                table,
                kho, khi, ktd, kmd, dact,
                hop, hon, how, hoc, hip, hin, hiw, hic,
                tp, tn, tw, tc, mp, mn, mw, mc,
                stamp, scounter, acc,
                go, mo, gi, mi, gt, mt, gm_, mm_, ug, um):
    """Sequential allocation of `members` to the sides seeded by i and j.

    side must hold 0 at i, 1 at j, -1 elsewhere and is filled as the scan
    proceeds, so each member's affinity sees only the seeds and earlier
    members. With do_moves=1 the side-1 members are actually moved into
    j's group using the random draws; with do_moves=0 the scan replays
    the probability of the assignment recorded in true_side (the merge
    reversal). Returns (total DL change, log allocation probability).
    """
    ddl = 0.0
    logq = 0.0
    for k in range(members.shape[0]):
        m = members[k]
        a0, a1 = _affinity_sides(m, side, h_on, t_on, m_on, ntype,
                                 hop, hon, how, hip, hin, hiw, tp, tn, tw, mp, mn, mw)
        p1 = (a1 + 1.0) / (a0 + a1 + 2.0)
        if do_moves == 1:
            if rand[k] < p1:
                side[m] = 1
                logq += math.log(p1)
                ddl += move_full(m, b[j],
                                 b, ntype, base, cap, Bcnt, Ntyp, n_r,
                                 h_on, t_on, m_on,
                                 e_h, ero, eri, Eh, e_t, ert, Et, e_m, erm, Em,
                                 table, kho, khi, ktd, kmd, dact,
                                 hop, hon, how, hoc, hip, hin, hiw, hic,
                                 tp, tn, tw, tc, mp, mn, mw, mc,
                                 stamp, scounter, acc,
                                 go, mo, gi, mi, gt, mt, gm_, mm_, ug, um)
            else:
                side[m] = 0
                logq += math.log(1.0 - p1)
        else:
            ts = true_side[m]
            side[m] = ts
            if ts == 1:
                logq += math.log(p1)
            else:
                logq += math.log(1.0 - p1)
    return ddl, logq
