"""Pure-Python kernels; the reference semantics for the compiled twins.

Both implementations draw from the raw 64-bit stream of a numpy
``BitGenerator`` with identical arithmetic, so a given seed yields the
same trajectory under either backend.
"""

from __future__ import annotations

from ._layout import (
    EVENTS_FULL,
    NEED_GROW,
    PATH_FULL,
    SP_COMPLETE_HI,
    SP_COMPLETE_LO,
    SP_LEVEL_HI,
    SP_LEVEL_LO,
    SP_MAX_STEPS,
    SP_NEW_EDGE,
    SP_USE_MASK,
    SP_VCOUNT,
    SP_VERTEX_FIBER,
    SP_VERTEX_LEVEL,
    ST_DRIFT,
    ST_ECOUNT,
    ST_FIBER,
    ST_LEVEL,
    ST_LO,
    ST_MAXLEV,
    ST_MINLEV,
    ST_NEVENTS,
    ST_NLEV,
    ST_NPATH,
    ST_STEP,
    ST_VCOUNT,
    STOP_COMPLETE,
    STOP_EXIT,
    STOP_HI,
    STOP_LO,
    STOP_MAX,
    STOP_NEW_EDGE,
    STOP_VCOUNT,
    STOP_VERTEX,
    TWO53_INV,
)

BACKEND = "python"


def bounded_uint64(raw, total: int) -> int:
    """Uniform integer in [0, total) by rejection on the raw stream."""
    threshold = ((1 << 64) - total) % total
    r = raw()
    while r < threshold:
        r = raw()
    return r % total


def uniform01(raw) -> float:
    return float(raw() >> 11) * TWO53_INV


def _entry_status(st, stop, lvlcount, G, EG):
    z = st[ST_LEVEL]
    if z >= stop[SP_LEVEL_HI]:
        return STOP_HI
    if z <= stop[SP_LEVEL_LO]:
        return STOP_LO
    if stop[SP_VERTEX_FIBER] >= 0 and z == stop[SP_VERTEX_LEVEL] and st[ST_FIBER] == stop[SP_VERTEX_FIBER]:
        return STOP_VERTEX
    if stop[SP_VCOUNT] > 0 and st[ST_VCOUNT] >= stop[SP_VCOUNT]:
        return STOP_VCOUNT
    lo, nlev = st[ST_LO], st[ST_NLEV]
    full = G + EG
    for lev in range(max(stop[SP_COMPLETE_LO], lo), min(stop[SP_COMPLETE_HI], lo + nlev - 1) + 1):
        if lvlcount[lev - lo] == full:
            return STOP_COMPLETE
    if st[ST_STEP] >= stop[SP_MAX_STEPS]:
        return STOP_MAX
    return -1


def orrw_run(st, crossed, visited, lvlcount, fib_indptr, fib_indices, fib_eid,
             G, EG, dnum, dden, bitgen, stop, amask, vmask, events, path):
    """Advance the once-reinforced walk until a stop condition or a buffer
    limit; see ``_layout`` for the meaning of every slot."""
    status = _entry_status(st, stop, lvlcount, G, EG)
    if status >= 0:
        return status
    raw = bitgen.random_raw
    ES = G + EG
    full = G + EG
    lo = int(st[ST_LO])
    nlev = int(st[ST_NLEV])
    z = int(st[ST_LEVEL])
    g = int(st[ST_FIBER])
    n = int(st[ST_STEP])
    drift = int(st[ST_DRIFT])
    vcount = int(st[ST_VCOUNT])
    ecount = int(st[ST_ECOUNT])
    minlev = int(st[ST_MINLEV])
    maxlev = int(st[ST_MAXLEV])
    nev = int(st[ST_NEVENTS])
    npath = int(st[ST_NPATH])
    max_steps = int(stop[SP_MAX_STEPS])
    hi = int(stop[SP_LEVEL_HI])
    lo_t = int(stop[SP_LEVEL_LO])
    vt_lev = int(stop[SP_VERTEX_LEVEL])
    vt_fib = int(stop[SP_VERTEX_FIBER])
    stop_new = bool(stop[SP_NEW_EDGE])
    c_lo = int(stop[SP_COMPLETE_LO])
    c_hi = int(stop[SP_COMPLETE_HI])
    vtarget = int(stop[SP_VCOUNT])
    use_mask = bool(stop[SP_USE_MASK])
    ev_cap = events.shape[0] if events is not None else 0
    path_cap = path.shape[0] if path is not None else 0
    dnum = int(dnum)
    dden = int(dden)
    status = STOP_MAX
    while True:
        if n >= max_steps:
            status = STOP_MAX
            break
        zi = z - lo
        if zi <= 0 or zi >= nlev - 1:
            status = NEED_GROW
            break
        if events is not None and nev >= ev_cap:
            status = EVENTS_FULL
            break
        if path is not None and npath >= path_cap:
            status = PATH_FULL
            break
        base = zi * ES
        w_right = dden + dnum * int(crossed[base + g])
        w_left = dden + dnum * int(crossed[base - ES + g])
        total = w_right + w_left
        k0 = int(fib_indptr[g])
        k1 = int(fib_indptr[g + 1])
        for k in range(k0, k1):
            total += dden + dnum * int(crossed[base + G + fib_eid[k]])
        u = bounded_uint64(raw, total)
        if u < w_right:
            slot = base + g
            nz, ng = z + 1, g
        else:
            u -= w_right
            if u < w_left:
                slot = base - ES + g
                nz, ng = z - 1, g
            else:
                u -= w_left
                slot = -1
                ng = g
                for k in range(k0, k1):
                    s = base + G + int(fib_eid[k])
                    w = dden + dnum * int(crossed[s])
                    if u < w:
                        slot = s
                        ng = int(fib_indices[k])
                        break
                    u -= w
                nz = z
        n += 1
        new = crossed[slot] == 0
        exit_hit = False
        if use_mask and vmask[zi * G + g] and not amask[slot]:
            exit_hit = True
        new_vertical = False
        if new:
            crossed[slot] = 1
            ecount += 1
            if nz != z:
                drift += nz - z
            else:
                lvlcount[zi] += 1
                new_vertical = True
            if events is not None:
                events[nev, 0] = n
                events[nev, 1] = z
                events[nev, 2] = g
                events[nev, 3] = nz
                events[nev, 4] = ng
                nev += 1
        z, g = nz, ng
        zi = z - lo
        new_vertex = False
        if not visited[zi * G + g]:
            visited[zi * G + g] = 1
            vcount += 1
            lvlcount[zi] += 1
            new_vertex = True
            if z < minlev:
                minlev = z
            if z > maxlev:
                maxlev = z
        if path is not None:
            path[npath, 0] = z
            path[npath, 1] = g
            path[npath, 2] = 1 if new else 0
            npath += 1
        if exit_hit:
            status = STOP_EXIT
            break
        if stop_new and new:
            status = STOP_NEW_EDGE
            break
        if vt_fib >= 0 and z == vt_lev and g == vt_fib:
            status = STOP_VERTEX
            break
        if z >= hi:
            status = STOP_HI
            break
        if z <= lo_t:
            status = STOP_LO
            break
        if (new_vertex or new_vertical) and c_lo <= z <= c_hi and lvlcount[zi] == full:
            status = STOP_COMPLETE
            break
        if vtarget > 0 and vcount >= vtarget:
            status = STOP_VCOUNT
            break
    st[ST_LEVEL] = z
    st[ST_FIBER] = g
    st[ST_STEP] = n
    st[ST_DRIFT] = drift
    st[ST_VCOUNT] = vcount
    st[ST_ECOUNT] = ecount
    st[ST_MINLEV] = minlev
    st[ST_MAXLEV] = maxlev
    st[ST_NEVENTS] = nev
    st[ST_NPATH] = npath
    return status


def network_walks(indptr, indices, cumw, esign, eids, start, absorbing, count_mask,
                  max_steps, bitgen, out_end, out_steps, out_count, net_sum, net_sumsq,
                  track):
    """Run ``len(out_end)`` independent walks on a finite network.

    Each walk starts at ``start`` and stops on an absorbing vertex
    (``out_end`` = that vertex) or after ``max_steps`` (``out_end`` = -1).
    ``out_count`` is the number of times n <= stop with ``count_mask`` set.
    With ``track`` set, per-walk net crossings of every edge (in canonical
    orientation) are accumulated into ``net_sum`` and ``net_sumsq``.
    """
    raw = bitgen.random_raw
    nwalks = len(out_end)
    m = len(net_sum)
    cur = [0] * m
    mark = [False] * m
    touched = []
    for w in range(nwalks):
        x = int(start)
        steps = 0
        count = 1 if count_mask[x] else 0
        end = -1
        while True:
            if absorbing[x]:
                end = x
                break
            if steps >= max_steps:
                break
            k0 = int(indptr[x])
            k1 = int(indptr[x + 1])
            u = uniform01(raw) * float(cumw[k1 - 1])
            k = k0
            while k < k1 - 1 and u >= cumw[k]:
                k += 1
            if track:
                e = int(eids[k])
                if not mark[e]:
                    mark[e] = True
                    touched.append(e)
                cur[e] += int(esign[k])
            x = int(indices[k])
            steps += 1
            if count_mask[x]:
                count += 1
        out_end[w] = end
        out_steps[w] = steps
        out_count[w] = count
        if track:
            for e in touched:
                c = cur[e]
                net_sum[e] += c
                net_sumsq[e] += c * c
                cur[e] = 0
                mark[e] = False
            touched.clear()
