"""Pure-Python state-space kernels.

Reference implementation of the exploration and synthesis fixpoint kernels.
`mldes.engine._kernels` is the compiled twin; both must produce identical
arrays (same discovery order, same ties) so the backends are interchangeable.

Composed states are keyed by their component-coordinate tuple, so this
backend has no packed-key capacity limit.
"""

from __future__ import annotations

import numpy as np

OP_NOT = -1
OP_AND = -2
OP_OR = -3
ATOM_STRIDE = 1_000_000


def _eval_program(code, start, stop, cur):
    """Evaluate one RPN invariant program against coordinate tuple ``cur``."""
    stack = []
    for k in range(start, stop):
        op = code[k]
        if op >= 0:
            stack.append(cur[op // ATOM_STRIDE] == op % ATOM_STRIDE)
        elif op == OP_NOT:
            stack[-1] = not stack[-1]
        elif op == OP_AND:
            b = stack.pop()
            stack[-1] = stack[-1] and b
        else:
            b = stack.pop()
            stack[-1] = stack[-1] or b
    return stack[-1]


def explore(
    trans,
    state_offset,
    in_alpha,
    initial,
    marked,
    is_plant,
    controllable,
    inv_ptr,
    inv_code,
    budget,
    track_unc,
):
    """Breadth-first exploration of the synchronous product.

    Returns ``(coords, marked, t_ptr, t_ev, t_dst, u_ptr, u_ev, u_dst)``.
    The ``u_*`` arrays list, per product state, the uncontrollable events
    enabled by the plant components there; the entry's target is the product
    successor, or -1 when a requirement or invariant cuts the event.

    Raises ``ValueError`` when ``budget`` (> 0) is exceeded.
    """
    n_comps, n_events = in_alpha.shape
    trans_l = trans.tolist()
    offset = state_offset.tolist()
    marked_l = marked.tolist()
    plant_l = [bool(x) for x in is_plant.tolist()]
    ctrl_l = [bool(x) for x in controllable.tolist()]
    iptr = inv_ptr.tolist()
    icode = inv_code.tolist()

    owners = [[] for _ in range(n_events)]
    plant_owners = [[] for _ in range(n_events)]
    alpha_l = in_alpha.tolist()
    for c in range(n_comps):
        row = alpha_l[c]
        for e in range(n_events):
            if row[e]:
                owners[e].append(c)
                if plant_l[c]:
                    plant_owners[e].append(c)

    start = tuple(initial.tolist())
    index = {start: 0}
    coords_out = [start]
    marked_out = [1 if all(marked_l[offset[c] + start[c]] for c in range(n_comps)) else 0]
    t_ptr = [0]
    t_ev: list[int] = []
    t_dst: list[int] = []
    u_ptr = [0]
    u_ev: list[int] = []
    u_dst: list[int] = []

    x = 0
    while x < len(coords_out):
        cur = coords_out[x]
        for e in range(n_events):
            enabled = True
            target = None
            for c in owners[e]:
                t = trans_l[offset[c] + cur[c]][e]
                if t < 0:
                    enabled = False
                    break
            if enabled:
                if iptr[e] < iptr[e + 1] and not _eval_program(
                    icode, iptr[e], iptr[e + 1], cur
                ):
                    enabled = False
            if enabled:
                nxt = tuple(
                    trans_l[offset[c] + cur[c]][e] if alpha_l[c][e] else cur[c]
                    for c in range(n_comps)
                )
                target = index.get(nxt)
                if target is None:
                    target = len(coords_out)
                    if budget > 0 and target >= budget:
                        raise ValueError("state budget exceeded")
                    index[nxt] = target
                    coords_out.append(nxt)
                    marked_out.append(
                        1
                        if all(marked_l[offset[c] + nxt[c]] for c in range(n_comps))
                        else 0
                    )
                t_ev.append(e)
                t_dst.append(target)
            if track_unc and not ctrl_l[e] and plant_owners[e]:
                plant_ok = True
                for c in plant_owners[e]:
                    if trans_l[offset[c] + cur[c]][e] < 0:
                        plant_ok = False
                        break
                if plant_ok:
                    u_ev.append(e)
                    u_dst.append(target if enabled else -1)
        t_ptr.append(len(t_ev))
        u_ptr.append(len(u_ev))
        x += 1

    n = len(coords_out)
    return (
        np.array(coords_out, dtype=np.int32).reshape(n, n_comps),
        np.array(marked_out, dtype=np.uint8),
        np.array(t_ptr, dtype=np.int64),
        np.array(t_ev, dtype=np.int32),
        np.array(t_dst, dtype=np.int32),
        np.array(u_ptr, dtype=np.int64),
        np.array(u_ev, dtype=np.int32),
        np.array(u_dst, dtype=np.int32),
    )


def supcn(t_ptr, t_ev, t_dst, marked, u_ptr, u_dst):
    """Greatest fixpoint of nonblocking + controllable state deletion.

    Repeatedly removes states that cannot reach a marked state within the
    surviving set, and states where a plant-enabled uncontrollable event is
    cut or leads outside the surviving set.  Returns the survivor mask.
    """
    n = len(t_ptr) - 1
    tp = t_ptr.tolist()
    td = t_dst.tolist()
    up = u_ptr.tolist()
    ud = u_dst.tolist()
    mk = marked.tolist()

    # reverse adjacency (counting sort by target)
    indeg = [0] * (n + 1)
    for d in td:
        indeg[d + 1] += 1
    rev_ptr = [0] * (n + 1)
    acc = 0
    for i in range(n + 1):
        acc += indeg[i]
        rev_ptr[i] = acc
    fill = rev_ptr[:-1].copy() if n else []
    rev_src = [0] * len(td)
    for x in range(n):
        for k in range(tp[x], tp[x + 1]):
            d = td[k]
            rev_src[fill[d]] = x
            fill[d] += 1

    good = [1] * n
    while True:
        core = [0] * n
        stack = [i for i in range(n) if good[i] and mk[i]]
        for i in stack:
            core[i] = 1
        while stack:
            y = stack.pop()
            for k in range(rev_ptr[y], rev_ptr[y + 1]):
                x = rev_src[k]
                if good[x] and not core[x]:
                    core[x] = 1
                    stack.append(x)
        changed = False
        for i in range(n):
            if good[i] and not core[i]:
                good[i] = 0
                changed = True
        for x in range(n):
            if good[x]:
                for k in range(up[x], up[x + 1]):
                    d = ud[k]
                    if d < 0 or not good[d]:
                        good[x] = 0
                        changed = True
                        break
        if not changed:
            break
    return np.array(good, dtype=np.uint8)


def reach_order(t_ptr, t_ev, t_dst, good):
    """BFS renumbering of states reachable from state 0 within ``good``.

    Returns ``(order, count)`` where ``order[i]`` is the new index of state
    ``i`` or -1 when unreachable/excluded.
    """
    n = len(t_ptr) - 1
    order = np.full(n, -1, dtype=np.int32)
    if n == 0 or not good[0]:
        return order, 0
    tp = t_ptr.tolist()
    td = t_dst.tolist()
    gd = good.tolist()
    order_l = [-1] * n
    order_l[0] = 0
    queue = [0]
    count = 1
    qi = 0
    while qi < len(queue):
        x = queue[qi]
        qi += 1
        for k in range(tp[x], tp[x + 1]):
            d = td[k]
            if gd[d] and order_l[d] < 0:
                order_l[d] = count
                count += 1
                queue.append(d)
    return np.array(order_l, dtype=np.int32), count
