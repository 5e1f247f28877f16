# distutils: language = c++
# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled state-space kernels (C++/Cython).

Twin of ``kernels_py``: identical discovery order and results.  Composed
states are keyed by a packed mixed-radix int64, so the caller must ensure
the full state-space capacity fits below 2**62 (the dispatcher falls back
to the pure backend otherwise).
"""

from cython.operator cimport dereference as deref
from libcpp.vector cimport vector
from libcpp.unordered_map cimport unordered_map
from libc.stdint cimport int32_t, int64_t, uint8_t

import numpy as np

cdef enum:
    OP_NOT = -1
    OP_AND = -2
    OP_OR = -3
    ATOM_STRIDE = 1000000


cdef inline bint _eval_program(const int32_t[:] code, int start, int stop,
                               const int32_t* cur) noexcept nogil:
    # NB: writes into the stack avoid conditional expressions; Cython routes
    # `vec[i] = x if c else y` through a dangling fake-reference temporary.
    cdef int k, op
    cdef int sp = 0
    # worst-case stack depth equals program length
    cdef vector[int] stack
    stack.resize(stop - start)
    cdef int a, b
    for k in range(start, stop):
        op = code[k]
        if op >= 0:
            if cur[op // ATOM_STRIDE] == op % ATOM_STRIDE:
                stack[sp] = 1
            else:
                stack[sp] = 0
            sp += 1
        elif op == OP_NOT:
            a = stack[sp - 1]
            if a:
                stack[sp - 1] = 0
            else:
                stack[sp - 1] = 1
        elif op == OP_AND:
            b = stack[sp - 1]
            sp -= 1
            a = stack[sp - 1]
            if a and b:
                stack[sp - 1] = 1
            else:
                stack[sp - 1] = 0
        else:
            b = stack[sp - 1]
            sp -= 1
            a = stack[sp - 1]
            if a or b:
                stack[sp - 1] = 1
            else:
                stack[sp - 1] = 0
    return stack[sp - 1] != 0


def explore(trans, state_offset, in_alpha, initial, marked, is_plant,
            controllable, inv_ptr, inv_code, budget, track_unc):
    """See ``kernels_py.explore``."""
    cdef const int32_t[:, :] trans_v = trans
    cdef const int32_t[:] offset_v = state_offset
    cdef const uint8_t[:, :] alpha_v = in_alpha
    cdef const int32_t[:] initial_v = initial
    cdef const uint8_t[:] marked_v = marked
    cdef const uint8_t[:] plant_v = is_plant
    cdef const uint8_t[:] ctrl_v = controllable
    cdef const int32_t[:] iptr_v = inv_ptr
    cdef const int32_t[:] icode_v = inv_code
    cdef int n_comps = alpha_v.shape[0]
    cdef int n_events = alpha_v.shape[1]
    cdef int64_t budget_c = budget
    cdef bint track = track_unc

    # per-event owner lists, flattened
    cdef vector[int32_t] owners
    cdef vector[int32_t] owner_ptr
    cdef vector[int32_t] plant_owners
    cdef vector[int32_t] plant_owner_ptr
    cdef int c, e
    owner_ptr.push_back(0)
    plant_owner_ptr.push_back(0)
    for e in range(n_events):
        for c in range(n_comps):
            if alpha_v[c, e]:
                owners.push_back(c)
                if plant_v[c]:
                    plant_owners.push_back(c)
        owner_ptr.push_back(<int32_t>owners.size())
        plant_owner_ptr.push_back(<int32_t>plant_owners.size())

    # mixed-radix strides for state packing
    cdef vector[int64_t] stride
    stride.resize(n_comps)
    cdef int64_t acc = 1
    for c in range(n_comps):
        stride[c] = acc
        acc *= offset_v[c + 1] - offset_v[c]

    cdef vector[int32_t] coords
    cdef vector[uint8_t] marked_out
    cdef vector[int64_t] t_ptr
    cdef vector[int32_t] t_ev
    cdef vector[int32_t] t_dst
    cdef vector[int64_t] u_ptr
    cdef vector[int32_t] u_ev
    cdef vector[int32_t] u_dst
    cdef unordered_map[int64_t, int32_t] index

    cdef int64_t key = 0
    cdef uint8_t mk = 1
    cdef int32_t s
    for c in range(n_comps):
        s = initial_v[c]
        coords.push_back(s)
        key += s * stride[c]
        if not marked_v[offset_v[c] + s]:
            mk = 0
    index[key] = 0
    marked_out.push_back(mk)
    t_ptr.push_back(0)
    u_ptr.push_back(0)

    cdef int64_t x = 0
    cdef int64_t n = 1
    cdef const int32_t* cur
    cdef bint enabled, plant_ok
    cdef int32_t t, target
    cdef int k
    cdef int64_t nkey
    cdef vector[int32_t] nxt
    nxt.resize(n_comps)
    cdef unordered_map[int64_t, int32_t].iterator it

    while x < n:
        cur = &coords[x * n_comps]
        for e in range(n_events):
            enabled = True
            target = -1
            for k in range(owner_ptr[e], owner_ptr[e + 1]):
                c = owners[k]
                if trans_v[offset_v[c] + cur[c], e] < 0:
                    enabled = False
                    break
            if enabled and iptr_v[e] < iptr_v[e + 1]:
                enabled = _eval_program(icode_v, iptr_v[e], iptr_v[e + 1], cur)
            if enabled:
                nkey = 0
                mk = 1
                for c in range(n_comps):
                    if alpha_v[c, e]:
                        t = trans_v[offset_v[c] + cur[c], e]
                    else:
                        t = cur[c]
                    nxt[c] = t
                    nkey += t * stride[c]
                it = index.find(nkey)
                if it != index.end():
                    target = deref(it).second
                else:
                    if budget_c > 0 and n >= budget_c:
                        raise ValueError("state budget exceeded")
                    target = <int32_t>n
                    index[nkey] = target
                    for c in range(n_comps):
                        coords.push_back(nxt[c])
                        if not marked_v[offset_v[c] + nxt[c]]:
                            mk = 0
                    marked_out.push_back(mk)
                    n += 1
                    cur = &coords[x * n_comps]  # vector may have reallocated
                t_ev.push_back(e)
                t_dst.push_back(target)
            if track and not ctrl_v[e] and plant_owner_ptr[e] < plant_owner_ptr[e + 1]:
                plant_ok = True
                for k in range(plant_owner_ptr[e], plant_owner_ptr[e + 1]):
                    c = plant_owners[k]
                    if trans_v[offset_v[c] + cur[c], e] < 0:
                        plant_ok = False
                        break
                if plant_ok:
                    u_ev.push_back(e)
                    u_dst.push_back(target if enabled else -1)
        t_ptr.push_back(<int64_t>t_ev.size())
        u_ptr.push_back(<int64_t>u_ev.size())
        x += 1

    coords_np = np.empty((n, n_comps), dtype=np.int32)
    cdef int32_t[:, :] coords_np_v = coords_np
    for x in range(n):
        for c in range(n_comps):
            coords_np_v[x, c] = coords[x * n_comps + c]
    return (
        coords_np,
        _vec_u8(marked_out),
        _vec_i64(t_ptr),
        _vec_i32(t_ev),
        _vec_i32(t_dst),
        _vec_i64(u_ptr),
        _vec_i32(u_ev),
        _vec_i32(u_dst),
    )


cdef _vec_i32(vector[int32_t]& v):
    out = np.empty(v.size(), dtype=np.int32)
    cdef int32_t[:] ov = out
    cdef size_t i
    for i in range(v.size()):
        ov[i] = v[i]
    return out


cdef _vec_i64(vector[int64_t]& v):
    out = np.empty(v.size(), dtype=np.int64)
    cdef int64_t[:] ov = out
    cdef size_t i
    for i in range(v.size()):
        ov[i] = v[i]
    return out


cdef _vec_u8(vector[uint8_t]& v):
    out = np.empty(v.size(), dtype=np.uint8)
    cdef uint8_t[:] ov = out
    cdef size_t i
    for i in range(v.size()):
        ov[i] = v[i]
    return out


def supcn(t_ptr, t_ev, t_dst, marked, u_ptr, u_dst):
    """See ``kernels_py.supcn``."""
    cdef const int64_t[:] tp = t_ptr
    cdef const int32_t[:] td = t_dst
    cdef const int64_t[:] up = u_ptr
    cdef const int32_t[:] ud = u_dst
    cdef const uint8_t[:] mk = marked
    cdef int64_t n = tp.shape[0] - 1
    cdef int64_t nt = td.shape[0]

    cdef vector[int64_t] rev_ptr
    cdef vector[int32_t] rev_src
    cdef vector[int64_t] fill
    rev_ptr.resize(n + 1)
    rev_src.resize(nt)
    fill.resize(n)
    cdef int64_t i, k, x, y, d
    for i in range(n + 1):
        rev_ptr[i] = 0
    for k in range(nt):
        rev_ptr[td[k] + 1] += 1
    for i in range(n):
        rev_ptr[i + 1] += rev_ptr[i]
    for i in range(n):
        fill[i] = rev_ptr[i]
    for x in range(n):
        for k in range(tp[x], tp[x + 1]):
            d = td[k]
            rev_src[fill[d]] = <int32_t>x
            fill[d] += 1

    good_np = np.ones(n, dtype=np.uint8)
    cdef uint8_t[:] good = good_np
    cdef vector[uint8_t] core
    cdef vector[int64_t] stack
    core.resize(n)
    cdef bint changed
    while True:
        for i in range(n):
            core[i] = 0
        stack.clear()
        for i in range(n):
            if good[i] and mk[i]:
                core[i] = 1
                stack.push_back(i)
        while stack.size() > 0:
            y = stack.back()
            stack.pop_back()
            for k in range(rev_ptr[y], rev_ptr[y + 1]):
                x = rev_src[k]
                if good[x] and not core[x]:
                    core[x] = 1
                    stack.push_back(x)
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
    return good_np


def reach_order(t_ptr, t_ev, t_dst, good):
    """See ``kernels_py.reach_order``."""
    cdef const int64_t[:] tp = t_ptr
    cdef const int32_t[:] td = t_dst
    cdef const uint8_t[:] gd = good
    cdef int64_t n = tp.shape[0] - 1
    order_np = np.full(n, -1, dtype=np.int32)
    cdef int32_t[:] order = order_np
    if n == 0 or not gd[0]:
        return order_np, 0
    cdef vector[int64_t] queue
    queue.push_back(0)
    order[0] = 0
    cdef int64_t qi = 0, x, k, d
    cdef int32_t count = 1
    while qi < <int64_t>queue.size():
        x = queue[qi]
        qi += 1
        for k in range(tp[x], tp[x + 1]):
            d = td[k]
            if gd[d] and order[d] < 0:
                order[d] = count
                count += 1
                queue.push_back(d)
    return order_np, int(count)
