"""Independent reference implementations used only by the tests.

Nothing here imports the solvers or kernels under test; each oracle
recomputes its quantity from the definitions with exact arithmetic or a
plain loop.
"""

from __future__ import annotations

from fractions import Fraction


def _neighbors(v, fiber):
    z, g = v
    out = [(z + 1, g), (z - 1, g)]
    for a, b in sorted(fiber.edges):
        if a == g:
            out.append((z, b))
        elif b == g:
            out.append((z, a))
    return out


def _key(u, v):
    return (u, v) if u <= v else (v, u)


def solve_exact(M, rhs):
    """Gaussian elimination over Fractions; M is square and invertible."""
    n = len(M)
    A = [list(row) + [rhs[i]] for i, row in enumerate(M)]
    for c in range(n):
        p = next(r for r in range(c, n) if A[r][c] != 0)
        A[c], A[p] = A[p], A[c]
        piv = A[c][c]
        A[c] = [x / piv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c] != 0:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [A[i][n] for i in range(n)]


def fraction_exit_law(A, delta, a, fiber) -> dict:
    """Exact law of the first edge leaving A, as {DirectedEdge-like (tail, head): Fraction}.

    Absorption probabilities h_f(v) solve h_f(v) = sum_w P(v,w) h_f(w) inside A
    with h_f = 1 on the exit edge f; one linear system per exit edge.
    """
    verts = sorted(tuple(v) for v in A.vertices)
    idx = {v: i for i, v in enumerate(verts)}
    edges = {_key(tuple(u), tuple(v)) for u, v in A.edges}
    delta = Fraction(delta)
    exits, rows = [], []
    for v in verts:
        w = {}
        for u in _neighbors(v, fiber):
            w[u] = 1 + delta if _key(v, u) in edges else Fraction(1)
            if _key(v, u) not in edges:
                exits.append((v, u))
        tot = sum(w.values())
        rows.append({u: c / tot for u, c in w.items()})
    n = len(verts)
    M = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for i, v in enumerate(verts):
        for u, p in rows[i].items():
            if _key(v, u) in edges:
                M[i][idx[u]] -= p
    out = {}
    for f in exits:
        tail, head = f
        rhs = [Fraction(0)] * n
        rhs[idx[tail]] = rows[idx[tail]][head]
        h = solve_exact(M, rhs)
        out[f] = h[idx[tuple(a)]]
    return out


def orrw_exact_laws(fiber, delta, n_steps, start=(0, 0)):
    """Exact law of (position, signed fresh horizontal count) after each of
    1..n_steps steps, by enumerating every path with its probability."""
    delta = Fraction(delta)
    frontier = {(tuple(start), frozenset(), 0): Fraction(1)}
    laws = []
    for _ in range(n_steps):
        nxt: dict = {}
        for (x, crossed, bal), p in frontier.items():
            nbrs = _neighbors(x, fiber)
            w = [1 + delta if _key(x, y) in crossed else Fraction(1) for y in nbrs]
            tot = sum(w)
            for y, wy in zip(nbrs, w):
                e = _key(x, y)
                fresh = e not in crossed
                nb = bal + ((y[0] - x[0]) if fresh else 0)
                key = (y, crossed | {e} if fresh else crossed, nb)
                nxt[key] = nxt.get(key, 0) + p * wy / tot
        frontier = nxt
        law: dict = {}
        for (y, _c, b), p in frontier.items():
            law[(y, b)] = law.get((y, b), 0) + p
        laws.append(law)
    return laws


def naive_orrw_path(fiber, delta, n_steps, bitgen, start=(0, 0)):
    """Step-by-step reinforced walk with a set of crossed edges, drawing from
    the raw 64-bit stream with the same rejection rule as the kernels.

    Neighbour order: right, left, then fiber neighbours in increasing order.
    """
    delta = Fraction(delta)
    num, den = delta.numerator, delta.denominator
    adj = {g: [] for g in range(fiber.vertex_count)}
    for a, b in fiber.edges:
        adj[a].append(b)
        adj[b].append(a)
    crossed = set()
    x = tuple(start)
    out = []
    for _ in range(n_steps):
        z, g = x
        nbrs = [(z + 1, g), (z - 1, g)] + [(z, h) for h in sorted(adj[g])]
        w = [den + num * (_key(x, y) in crossed) for y in nbrs]
        total = sum(w)
        threshold = (2**64 - total) % total
        r = int(bitgen.random_raw())
        while r < threshold:
            r = int(bitgen.random_raw())
        u = r % total
        for y, wy in zip(nbrs, w):
            if u < wy:
                break
            u -= wy
        fresh = _key(x, y) not in crossed
        crossed.add(_key(x, y))
        out.append((y[0], y[1], int(fresh)))
        x = y
    return out


def srw_ruin(x: int, target: int) -> Fraction:
    """P(simple walk from x hits target before 0)."""
    return Fraction(x, target)


def point_range_growth_law(delta, n_vertices):
    """Exact law of the (left, right) extents of the range of the reinforced
    walk on Z when it first holds ``n_vertices`` vertices.

    Inside the range every edge has conductance 1 + delta and the two fresh
    edges just outside have conductance 1.  From an endpoint the walk escapes
    outward before touching the other end with probability s = L/(L+1+delta)
    (a two-resistor voltage divider); bouncing between the ends gives the
    probability s / (1 - (1-s)^2) that the next new vertex is on the same side.
    """
    delta = Fraction(delta)
    # state: (left, right, at_right) with right - left = L edges crossed
    states = {(0, 0, True): Fraction(1)}
    for _ in range(n_vertices - 1):
        nxt: dict = {}
        for (lo, hi, at_right), p in states.items():
            L = hi - lo
            if L == 0:
                nxt[(0, 1, True)] = nxt.get((0, 1, True), 0) + p / 2
                nxt[(-1, 0, False)] = nxt.get((-1, 0, False), 0) + p / 2
                continue
            r_in = L / (1 + delta)
            s = r_in / (r_in + 1)
            q = s / (1 - (1 - s) * (1 - s))
            same = (lo, hi + 1, True) if at_right else (lo - 1, hi, False)
            other = (lo - 1, hi, False) if at_right else (lo, hi + 1, True)
            nxt[same] = nxt.get(same, 0) + p * q
            nxt[other] = nxt.get(other, 0) + p * (1 - q)
        states = nxt
    law: dict = {}
    for (lo, hi, _r), p in states.items():
        law[(lo, hi)] = law.get((lo, hi), 0) + p
    return law
