# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``_kernels_py`` for the reference semantics."""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t
from libc.stdlib cimport free, malloc
from libc.string cimport memset
from numpy.random cimport bitgen_t

BACKEND = "cython"

cdef enum:
    ST_LEVEL = 0
    ST_FIBER = 1
    ST_STEP = 2
    ST_DRIFT = 3
    ST_VCOUNT = 4
    ST_ECOUNT = 5
    ST_MINLEV = 6
    ST_MAXLEV = 7
    ST_LO = 8
    ST_NLEV = 9
    ST_NEVENTS = 10
    ST_NPATH = 11
    SP_MAX_STEPS = 0
    SP_LEVEL_HI = 1
    SP_LEVEL_LO = 2
    SP_VERTEX_LEVEL = 3
    SP_VERTEX_FIBER = 4
    SP_NEW_EDGE = 5
    SP_COMPLETE_LO = 6
    SP_COMPLETE_HI = 7
    SP_VCOUNT = 8
    SP_USE_MASK = 9
    STOP_MAX = 0
    STOP_HI = 1
    STOP_LO = 2
    STOP_VERTEX = 3
    STOP_NEW_EDGE = 4
    STOP_EXIT = 5
    STOP_COMPLETE = 6
    STOP_VCOUNT = 7
    NEED_GROW = 10
    EVENTS_FULL = 11
    PATH_FULL = 12

cdef double TWO53_INV = 1.0 / 9007199254740992.0


cdef bitgen_t* _bitgen(object bitgen) except NULL:
    capsule = bitgen.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("invalid bit generator capsule")
    return <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline uint64_t _bounded(bitgen_t* rng, uint64_t total) nogil:
    cdef uint64_t threshold = (<uint64_t>0 - total) % total
    cdef uint64_t r = rng.next_uint64(rng.state)
    while r < threshold:
        r = rng.next_uint64(rng.state)
    return r % total


def bounded_uint64_c(object bitgen, uint64_t total):
    """Single bounded draw; exposed for the backend-identity tests."""
    cdef bitgen_t* rng = _bitgen(bitgen)
    with bitgen.lock:
        return _bounded(rng, total)


cdef int _entry_status(int64_t[::1] st, int64_t[::1] stop, int32_t[::1] lvlcount,
                       int64_t full):
    cdef int64_t z = st[ST_LEVEL]
    cdef int64_t lo = st[ST_LO], nlev = st[ST_NLEV], lev, a, b
    if z >= stop[SP_LEVEL_HI]:
        return STOP_HI
    if z <= stop[SP_LEVEL_LO]:
        return STOP_LO
    if stop[SP_VERTEX_FIBER] >= 0 and z == stop[SP_VERTEX_LEVEL] and st[ST_FIBER] == stop[SP_VERTEX_FIBER]:
        return STOP_VERTEX
    if stop[SP_VCOUNT] > 0 and st[ST_VCOUNT] >= stop[SP_VCOUNT]:
        return STOP_VCOUNT
    a = max(stop[SP_COMPLETE_LO], lo)
    b = min(stop[SP_COMPLETE_HI], lo + nlev - 1)
    lev = a
    while lev <= b:
        if lvlcount[lev - lo] == full:
            return STOP_COMPLETE
        lev += 1
    if st[ST_STEP] >= stop[SP_MAX_STEPS]:
        return STOP_MAX
    return -1


def orrw_run(int64_t[::1] st, uint8_t[::1] crossed, uint8_t[::1] visited,
             int32_t[::1] lvlcount, int64_t[::1] fib_indptr, int64_t[::1] fib_indices,
             int64_t[::1] fib_eid, int64_t G, int64_t EG, int64_t dnum, int64_t dden,
             object bitgen, int64_t[::1] stop, uint8_t[::1] amask, uint8_t[::1] vmask,
             int64_t[:, ::1] events, int64_t[:, ::1] path):
    cdef int64_t full = G + EG
    cdef int status = _entry_status(st, stop, lvlcount, full)
    if status >= 0:
        return status
    cdef bitgen_t* rng = _bitgen(bitgen)
    cdef bint has_events = events is not None
    cdef bint has_path = path is not None
    cdef int64_t ev_cap = events.shape[0] if has_events else 0
    cdef int64_t path_cap = path.shape[0] if has_path else 0
    cdef int64_t ES = G + EG
    cdef int64_t lo = st[ST_LO], nlev = st[ST_NLEV]
    cdef int64_t z = st[ST_LEVEL], g = st[ST_FIBER], n = st[ST_STEP]
    cdef int64_t drift = st[ST_DRIFT], vcount = st[ST_VCOUNT], ecount = st[ST_ECOUNT]
    cdef int64_t minlev = st[ST_MINLEV], maxlev = st[ST_MAXLEV]
    cdef int64_t nev = st[ST_NEVENTS], npath = st[ST_NPATH]
    cdef int64_t max_steps = stop[SP_MAX_STEPS], hi = stop[SP_LEVEL_HI], lo_t = stop[SP_LEVEL_LO]
    cdef int64_t vt_lev = stop[SP_VERTEX_LEVEL], vt_fib = stop[SP_VERTEX_FIBER]
    cdef bint stop_new = stop[SP_NEW_EDGE] != 0
    cdef int64_t c_lo = stop[SP_COMPLETE_LO], c_hi = stop[SP_COMPLETE_HI]
    cdef int64_t vtarget = stop[SP_VCOUNT]
    cdef bint use_mask = stop[SP_USE_MASK] != 0
    cdef uint64_t udnum = <uint64_t> dnum, udden = <uint64_t> dden
    cdef uint64_t w_right, w_left, total, u, w
    cdef int64_t zi, base, k, k0, k1, slot, s, nz, ng
    cdef bint new, exit_hit, new_vertex, new_vertical

    with bitgen.lock, nogil:
        while True:
            if n >= max_steps:
                status = STOP_MAX
                break
            zi = z - lo
            if zi <= 0 or zi >= nlev - 1:
                status = NEED_GROW
                break
            if has_events and nev >= ev_cap:
                status = EVENTS_FULL
                break
            if has_path and npath >= path_cap:
                status = PATH_FULL
                break
            base = zi * ES
            w_right = udden + udnum * crossed[base + g]
            w_left = udden + udnum * crossed[base - ES + g]
            total = w_right + w_left
            k0 = fib_indptr[g]
            k1 = fib_indptr[g + 1]
            for k in range(k0, k1):
                total += udden + udnum * crossed[base + G + fib_eid[k]]
            u = _bounded(rng, total)
            if u < w_right:
                slot = base + g
                nz = z + 1
                ng = g
            else:
                u -= w_right
                if u < w_left:
                    slot = base - ES + g
                    nz = z - 1
                    ng = g
                else:
                    u -= w_left
                    slot = -1
                    ng = g
                    for k in range(k0, k1):
                        s = base + G + fib_eid[k]
                        w = udden + udnum * crossed[s]
                        if u < w:
                            slot = s
                            ng = fib_indices[k]
                            break
                        u -= w
                    nz = z
            n += 1
            new = crossed[slot] == 0
            exit_hit = use_mask and vmask[zi * G + g] != 0 and amask[slot] == 0
            new_vertical = False
            if new:
                crossed[slot] = 1
                ecount += 1
                if nz != z:
                    drift += nz - z
                else:
                    lvlcount[zi] += 1
                    new_vertical = True
                if has_events:
                    events[nev, 0] = n
                    events[nev, 1] = z
                    events[nev, 2] = g
                    events[nev, 3] = nz
                    events[nev, 4] = ng
                    nev += 1
            z = nz
            g = ng
            zi = z - lo
            new_vertex = False
            if visited[zi * G + g] == 0:
                visited[zi * G + g] = 1
                vcount += 1
                lvlcount[zi] += 1
                new_vertex = True
                if z < minlev:
                    minlev = z
                if z > maxlev:
                    maxlev = z
            if has_path:
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
            if (new_vertex or new_vertical) and c_lo <= z and z <= c_hi and lvlcount[zi] == full:
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


def network_walks(int64_t[::1] indptr, int64_t[::1] indices, double[::1] cumw,
                  int64_t[::1] esign, int64_t[::1] eids, int64_t start,
                  uint8_t[::1] absorbing, uint8_t[::1] count_mask, int64_t max_steps,
                  object bitgen, int64_t[::1] out_end, int64_t[::1] out_steps,
                  int64_t[::1] out_count, double[::1] net_sum, double[::1] net_sumsq,
                  bint track):
    cdef bitgen_t* rng = _bitgen(bitgen)
    cdef int64_t nwalks = out_end.shape[0]
    cdef int64_t m = net_sum.shape[0]
    cdef int64_t w, x, steps, count, end, k, k0, k1, e, i, ntouched
    cdef double u, c
    cdef int64_t* cur = <int64_t*> malloc(max(m, 1) * sizeof(int64_t))
    cdef int64_t* touched = <int64_t*> malloc(max(m, 1) * sizeof(int64_t))
    cdef uint8_t* mark = <uint8_t*> malloc(max(m, 1))
    if cur == NULL or touched == NULL or mark == NULL:
        free(cur)
        free(touched)
        free(mark)
        raise MemoryError()
    memset(cur, 0, max(m, 1) * sizeof(int64_t))
    memset(mark, 0, max(m, 1))
    try:
        with bitgen.lock, nogil:
            for w in range(nwalks):
                x = start
                steps = 0
                count = 1 if count_mask[x] else 0
                end = -1
                ntouched = 0
                while True:
                    if absorbing[x]:
                        end = x
                        break
                    if steps >= max_steps:
                        break
                    k0 = indptr[x]
                    k1 = indptr[x + 1]
                    u = (<double>(rng.next_uint64(rng.state) >> 11)) * TWO53_INV * cumw[k1 - 1]
                    k = k0
                    while k < k1 - 1 and u >= cumw[k]:
                        k += 1
                    if track:
                        e = eids[k]
                        if mark[e] == 0:
                            mark[e] = 1
                            touched[ntouched] = e
                            ntouched += 1
                        cur[e] += esign[k]
                    x = indices[k]
                    steps += 1
                    if count_mask[x]:
                        count += 1
                out_end[w] = end
                out_steps[w] = steps
                out_count[w] = count
                if track:
                    for i in range(ntouched):
                        e = touched[i]
                        c = <double> cur[e]
                        net_sum[e] += c
                        net_sumsq[e] += c * c
                        cur[e] = 0
                        mark[e] = 0
    finally:
        free(cur)
        free(touched)
        free(mark)
