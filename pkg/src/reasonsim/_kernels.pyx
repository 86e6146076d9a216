# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: box-QP projected Newton and lattice A*.

Mirrors ``_kernels_py`` operation for operation.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, floor, fabs, INFINITY
from libc.stdlib cimport malloc, realloc, free

cnp.import_array()

cdef double ARMIJO = 0.1
cdef double STEP_DEC = 0.6
cdef double MIN_STEP = 1e-22


cdef inline double _clip(double v, double lo, double hi) nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


cdef double _objective(const double[:, ::1] H, const double[::1] g, double[::1] x, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, j
    cdef double quad = 0.0, lin = 0.0, row
    for i in range(n):
        row = 0.0
        for j in range(n):
            row += H[i, j] * x[j]
        quad += x[i] * row
        lin += g[i] * x[i]
    return 0.5 * quad + lin


cdef double _residual(const double[:, ::1] H, const double[::1] g, const double[::1] lo,
                      const double[::1] hi, double[::1] x, double[::1] grad, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, j
    cdef double r = 0.0, acc, e
    for i in range(n):
        acc = g[i]
        for j in range(n):
            acc += H[i, j] * x[j]
        grad[i] = acc
        e = fabs(x[i] - _clip(x[i] - acc, lo[i], hi[i]))
        if e > r:
            r = e
    return r


def solve_box_qp(H, g, lower, upper, x0, double tol=1e-8, int max_iter=100):
    """Minimize 0.5 x'Hx + g'x subject to lower <= x <= upper.

    Returns ``(x, iterations, residual, converged)``.
    """
    cdef const double[:, ::1] Hv = np.ascontiguousarray(H, dtype=np.float64)
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef const double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef const double[::1] hi = np.ascontiguousarray(upper, dtype=np.float64)
    cdef Py_ssize_t n = gv.shape[0]
    x_arr = np.empty(n)
    cdef double[::1] x = x_arr
    cdef double[::1] grad = np.empty(n)
    cdef double[::1] search = np.empty(n)
    cdef double[::1] xc = np.empty(n)
    cdef double[::1] rhs = np.empty(n)
    cdef double[:, ::1] chol = np.empty((n, n))
    cdef Py_ssize_t[::1] fidx = np.empty(n, dtype=np.intp)
    cdef unsigned char[::1] isfree = np.empty(n, dtype=np.uint8)
    cdef const double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    cdef Py_ssize_t i, j, k, nf, a, b
    cdef double value, vc, res, s, sdotg, step
    cdef int it = 0
    cdef bint clamped

    for i in range(n):
        x[i] = _clip(x0v[i], lo[i], hi[i])
    value = _objective(Hv, gv, x, n)
    while True:
        res = _residual(Hv, gv, lo, hi, x, grad, n)
        if res <= tol:
            return x_arr, it, res, True
        if it >= max_iter:
            return x_arr, it, res, False
        nf = 0
        for i in range(n):
            clamped = (x[i] <= lo[i] and grad[i] > 0) or (x[i] >= hi[i] and grad[i] < 0)
            search[i] = 0.0
            isfree[i] = not clamped
            if not clamped:
                fidx[nf] = i
                nf += 1
        # rhs_f = g_f + H_fc x_c
        for a in range(nf):
            i = fidx[a]
            s = gv[i]
            for j in range(n):
                if not isfree[j]:
                    s += Hv[i, j] * x[j]
            rhs[a] = s
        # Cholesky of H_ff (lower)
        for a in range(nf):
            for b in range(a + 1):
                s = Hv[fidx[a], fidx[b]]
                for k in range(b):
                    s -= chol[a, k] * chol[b, k]
                if a == b:
                    if s <= 0.0:
                        return x_arr, it, res, False
                    chol[a, a] = sqrt(s)
                else:
                    chol[a, b] = s / chol[b, b]
        # forward then backward substitution
        for a in range(nf):
            s = rhs[a]
            for k in range(a):
                s -= chol[a, k] * rhs[k]
            rhs[a] = s / chol[a, a]
        for a in range(nf - 1, -1, -1):
            s = rhs[a]
            for k in range(a + 1, nf):
                s -= chol[k, a] * rhs[k]
            rhs[a] = s / chol[a, a]
        for a in range(nf):
            i = fidx[a]
            search[i] = -rhs[a] - x[i]
        sdotg = 0.0
        for i in range(n):
            sdotg += search[i] * grad[i]
        if sdotg >= 0.0:
            return x_arr, it, res, False
        step = 1.0
        for i in range(n):
            xc[i] = _clip(x[i] + step * search[i], lo[i], hi[i])
        vc = _objective(Hv, gv, xc, n)
        while (vc - value) > ARMIJO * step * sdotg:
            step *= STEP_DEC
            if step < MIN_STEP:
                return x_arr, it, res, False
            for i in range(n):
                xc[i] = _clip(x[i] + step * search[i], lo[i], hi[i])
            vc = _objective(Hv, gv, xc, n)
        for i in range(n):
            x[i] = xc[i]
        value = vc
        it += 1


cdef struct HeapItem:
    double f
    double h
    long long seq
    long long state


cdef inline bint _less(HeapItem* a, HeapItem* b) nogil:
    if a.f != b.f:
        return a.f < b.f
    if a.h != b.h:
        return a.h < b.h
    return a.seq < b.seq


cdef class _Heap:
    cdef HeapItem* data
    cdef Py_ssize_t size
    cdef Py_ssize_t cap

    def __cinit__(self, Py_ssize_t cap=1024):
        self.data = <HeapItem*> malloc(cap * sizeof(HeapItem))
        if self.data == NULL:
            raise MemoryError()
        self.size = 0
        self.cap = cap

    def __dealloc__(self):
        free(self.data)

    cdef int push(self, double f, double h, long long seq, long long state) except -1:
        cdef HeapItem* grown
        cdef Py_ssize_t i, parent
        cdef HeapItem item
        if self.size == self.cap:
            grown = <HeapItem*> realloc(self.data, 2 * self.cap * sizeof(HeapItem))
            if grown == NULL:
                raise MemoryError()
            self.data = grown
            self.cap *= 2
        item.f = f
        item.h = h
        item.seq = seq
        item.state = state
        i = self.size
        self.size += 1
        while i > 0:
            parent = (i - 1) >> 1
            if _less(&item, &self.data[parent]):
                self.data[i] = self.data[parent]
                i = parent
            else:
                break
        self.data[i] = item
        return 0

    cdef HeapItem pop(self) nogil:
        cdef HeapItem top = self.data[0]
        cdef HeapItem last
        cdef Py_ssize_t i = 0, c
        self.size -= 1
        if self.size > 0:
            last = self.data[self.size]
            while True:
                c = 2 * i + 1
                if c >= self.size:
                    break
                if c + 1 < self.size and _less(&self.data[c + 1], &self.data[c]):
                    c += 1
                if _less(&self.data[c], &last):
                    self.data[i] = self.data[c]
                    i = c
                else:
                    break
            self.data[i] = last
        return top


def lattice_astar(
    int nx, int ny, int nh, int nk, double ox, double oy, double res,
    const int[:, ::1] end_dix, const int[:, ::1] end_diy, const int[:, ::1] end_ih,
    const int[:, ::1] prim_k, const double[:, ::1] prim_len,
    const double[:, :, ::1] sdx, const double[:, :, ::1] sdy, const double[::1] kappa,
    double fx0, double fy0, double fres,
    const double[:, ::1] pen, const unsigned char[:, ::1] prohibited, const unsigned char[:, ::1] blocked,
    double w1, double w2, double w3, double w4,
    int six, int siy, int sih, int sik, double gx, double gy, double gtol, long long max_expansions,
):
    """A* over (ix, iy, heading, incoming-curvature) lattice states.

    Same contract as ``_kernels_py.lattice_astar``.
    """
    cdef Py_ssize_t n_prims = end_dix.shape[1]
    cdef Py_ssize_t n_samples = sdx.shape[2]
    cdef Py_ssize_t fny = pen.shape[0], fnx = pen.shape[1]
    cdef long long n_states = <long long> nx * ny * nh * nk
    gcost_arr = np.full(n_states, np.inf)
    parent_arr = np.full(n_states, -1, dtype=np.int64)
    pprim_arr = np.full(n_states, -1, dtype=np.int32)
    closed_arr = np.zeros(n_states, dtype=np.uint8)
    cdef double[::1] gcost = gcost_arr
    cdef long long[::1] parent = parent_arr
    cdef int[::1] pprim = pprim_arr
    cdef unsigned char[::1] closed = closed_arr
    cdef _Heap heap = _Heap(4096)
    cdef HeapItem top
    cdef long long s, t, rest, seq = 1, expansions = 0
    cdef int ix, iy, ih, ik, jx, jy, jh, kp
    cdef Py_ssize_t p, q, cx, cy
    cdef double px, py, dx, dy, d, h0, ht, g_here, g_new, k_prev, pen_sum, cost
    cdef long proh_cnt
    cdef bint feasible

    s = ((<long long> sih * ny + siy) * nx + six) * nk + sik
    gcost[s] = 0.0
    dx = (ox + six * res) - gx
    dy = (oy + siy * res) - gy
    d = sqrt(dx * dx + dy * dy) - gtol
    h0 = w1 * d if d > 0.0 else 0.0
    heap.push(h0, h0, 0, s)
    while heap.size > 0:
        top = heap.pop()
        s = top.state
        if closed[s]:
            continue
        closed[s] = 1
        ik = <int> (s % nk)
        rest = s // nk
        ix = <int> (rest % nx)
        rest = rest // nx
        iy = <int> (rest % ny)
        ih = <int> (rest // ny)
        px = ox + ix * res
        py = oy + iy * res
        dx = px - gx
        dy = py - gy
        if sqrt(dx * dx + dy * dy) <= gtol:
            return _unwind(gcost[s], s, parent_arr, pprim_arr, expansions)
        expansions += 1
        if expansions > max_expansions:
            break
        g_here = gcost[s]
        k_prev = kappa[ik]
        for p in range(n_prims):
            jx = ix + end_dix[ih, p]
            jy = iy + end_diy[ih, p]
            if jx < 0 or jx >= nx or jy < 0 or jy >= ny:
                continue
            pen_sum = 0.0
            proh_cnt = 0
            feasible = True
            for q in range(n_samples):
                cx = <Py_ssize_t> floor((px + sdx[ih, p, q] - fx0) / fres)
                cy = <Py_ssize_t> floor((py + sdy[ih, p, q] - fy0) / fres)
                if cx < 0 or cx >= fnx or cy < 0 or cy >= fny or blocked[cy, cx]:
                    feasible = False
                    break
                pen_sum += pen[cy, cx]
                proh_cnt += prohibited[cy, cx]
            if not feasible:
                continue
            kp = prim_k[ih, p]
            cost = w1 * prim_len[ih, p] + w2 * fabs(kappa[kp] - k_prev) + w3 * pen_sum + w4 * proh_cnt
            jh = end_ih[ih, p]
            t = ((<long long> jh * ny + jy) * nx + jx) * nk + kp
            if closed[t]:
                continue
            g_new = g_here + cost
            if g_new < gcost[t]:
                gcost[t] = g_new
                parent[t] = s
                pprim[t] = <int> p
                dx = (ox + jx * res) - gx
                dy = (oy + jy * res) - gy
                d = sqrt(dx * dx + dy * dy) - gtol
                ht = w1 * d if d > 0.0 else 0.0
                heap.push(g_new + ht, ht, seq, t)
                seq += 1
    return INFINITY, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int32), expansions


def _unwind(double cost, long long s, parent_arr, pprim_arr, long long expansions):
    cdef long long[::1] parent = parent_arr
    cdef int[::1] pprim = pprim_arr
    states = [s]
    prims = []
    while parent[s] >= 0:
        prims.append(pprim[s])
        s = parent[s]
        states.append(s)
    states.reverse()
    prims.reverse()
    return cost, np.array(states, dtype=np.int64), np.array(prims, dtype=np.int32), expansions
