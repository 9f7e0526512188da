# distutils: language = c++
# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled CDCL enumeration kernel.

Same algorithm, tie-breaking and output as :mod:`unigen._kernel_py`; the
search loop runs without the GIL so independent enumerations can proceed on
separate threads.
"""

from libc.stdint cimport int8_t, int32_t, uint8_t
from libc.math cimport pow
from libcpp.vector cimport vector
from libcpp.pair cimport pair
from libcpp.algorithm cimport sort as std_sort
from posix.time cimport clock_gettime, timespec, CLOCK_MONOTONIC

import numpy as np

STATUS_BOUND = 0
STATUS_EXHAUSTED = 1
STATUS_TIMEOUT = 2

cdef enum:
    UNDEF = 2
    LEARNT = 1
    DELETED = 2
    HDR = 3
    RESTART_BASE = 100
    TIME_CHECK = 256

cdef double VAR_DECAY = 0.95


cdef inline double _now() noexcept nogil:
    cdef timespec ts
    clock_gettime(CLOCK_MONOTONIC, &ts)
    return ts.tv_sec + ts.tv_nsec * 1e-9


cdef double _luby(double y, int x) noexcept nogil:
    cdef int size = 1, seq = 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return pow(y, seq)


cdef class _Solver:
    cdef int nvars
    cdef vector[int] arena
    cdef vector[vector[int]] watches
    cdef vector[int8_t] assigns
    cdef vector[int] level
    cdef vector[int] reason
    cdef vector[int8_t] polarity
    cdef vector[int8_t] seen
    cdef vector[double] activity
    cdef double var_inc
    cdef vector[int] trail
    cdef vector[int] trail_lim
    cdef int qhead
    cdef vector[int] learnts
    cdef bint unsat
    cdef vector[int] heap
    cdef vector[int] heap_idx
    cdef double max_learnts
    cdef long conflicts
    # scratch buffers
    cdef vector[int] out
    cdef vector[int] kept
    cdef vector[int] tmp

    def __cinit__(self, int num_vars, const int32_t[::1] priority_vars):
        cdef int v
        self.nvars = num_vars
        self.watches.resize(2 * num_vars)
        self.assigns.assign(num_vars, UNDEF)
        self.level.assign(num_vars, 0)
        self.reason.assign(num_vars, -1)
        self.polarity.assign(num_vars, 1)
        self.seen.assign(num_vars, 0)
        self.activity.assign(num_vars, 0.0)
        self.heap_idx.assign(num_vars, -1)
        self.var_inc = 1.0
        self.qhead = 0
        self.unsat = False
        self.max_learnts = 2000.0
        self.conflicts = 0
        for v in range(priority_vars.shape[0]):
            self.activity[priority_vars[v]] = 1.0
        for v in range(num_vars):
            self.heap_insert(v)

    # ---- heap ----

    cdef inline bint less(self, int a, int b) noexcept nogil:
        cdef double aa = self.activity[a], ab = self.activity[b]
        return aa > ab or (aa == ab and a < b)

    cdef void percolate_up(self, int i) noexcept nogil:
        cdef int x = self.heap[i], p
        while i > 0:
            p = (i - 1) >> 1
            if not self.less(x, self.heap[p]):
                break
            self.heap[i] = self.heap[p]
            self.heap_idx[self.heap[i]] = i
            i = p
        self.heap[i] = x
        self.heap_idx[x] = i

    cdef void percolate_down(self, int i) noexcept nogil:
        cdef int x = self.heap[i], c
        cdef int n = <int>self.heap.size()
        while 2 * i + 1 < n:
            c = 2 * i + 1
            if c + 1 < n and self.less(self.heap[c + 1], self.heap[c]):
                c += 1
            if not self.less(self.heap[c], x):
                break
            self.heap[i] = self.heap[c]
            self.heap_idx[self.heap[i]] = i
            i = c
        self.heap[i] = x
        self.heap_idx[x] = i

    cdef void heap_insert(self, int v) noexcept nogil:
        if self.heap_idx[v] >= 0:
            return
        self.heap.push_back(v)
        self.heap_idx[v] = <int>self.heap.size() - 1
        self.percolate_up(<int>self.heap.size() - 1)

    cdef int heap_pop(self) noexcept nogil:
        cdef int top = self.heap[0]
        cdef int last = self.heap.back()
        self.heap.pop_back()
        self.heap_idx[top] = -1
        if self.heap.size() > 0:
            self.heap[0] = last
            self.heap_idx[last] = 0
            self.percolate_down(0)
        return top

    cdef void bump(self, int v) noexcept nogil:
        cdef int u
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(self.nvars):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100
        if self.heap_idx[v] >= 0:
            self.percolate_up(self.heap_idx[v])

    # ---- assignment ----

    cdef inline int value(self, int lit) noexcept nogil:
        cdef int a = self.assigns[lit >> 1]
        if a == UNDEF:
            return UNDEF
        return a ^ (lit & 1)

    cdef inline void enqueue(self, int lit, int cref) noexcept nogil:
        cdef int v = lit >> 1
        self.assigns[v] = (lit & 1) ^ 1
        self.level[v] = <int>self.trail_lim.size()
        self.reason[v] = cref
        self.trail.push_back(lit)

    cdef void cancel_until(self, int lvl) noexcept nogil:
        cdef int stop, k, lit, v
        if <int>self.trail_lim.size() <= lvl:
            return
        stop = self.trail_lim[lvl]
        k = <int>self.trail.size() - 1
        while k >= stop:
            lit = self.trail[k]
            v = lit >> 1
            self.assigns[v] = UNDEF
            self.reason[v] = -1
            self.polarity[v] = lit & 1
            self.heap_insert(v)
            k -= 1
        self.trail.resize(stop)
        self.trail_lim.resize(lvl)
        self.qhead = stop

    # ---- clauses ----

    cdef int attach_new(self, vector[int]& lits, bint learnt, int lbd) noexcept nogil:
        cdef int cref = <int>self.arena.size()
        cdef size_t k
        self.arena.push_back(<int>lits.size())
        self.arena.push_back(LEARNT if learnt else 0)
        self.arena.push_back(lbd)
        for k in range(lits.size()):
            self.arena.push_back(lits[k])
        self.watches[lits[0]].push_back(cref)
        self.watches[lits[1]].push_back(cref)
        return cref

    cdef void add_blocking(self, vector[int]& lits) noexcept nogil:
        """Add a clause falsified by the current model, backjumping only as far
        as needed: to where it turns unit, or where two of its literals are free."""
        cdef int top = 0, lv, j, k, lit
        cdef size_t i
        for i in range(lits.size()):
            lv = self.level[lits[i] >> 1]
            if lv > top:
                top = lv
        if top == 0:
            self.unsat = True
            return
        self.kept.clear()
        self.tmp.clear()
        for i in range(lits.size()):
            if self.level[lits[i] >> 1] == top:
                self.kept.push_back(lits[i])
            else:
                self.tmp.push_back(lits[i])
        if self.kept.size() > 1:
            for i in range(self.tmp.size()):
                self.kept.push_back(self.tmp[i])
            self.cancel_until(top - 1)
            self.attach_new(self.kept, False, 0)
            return
        lit = self.kept[0]
        if self.tmp.size() == 0:
            self.cancel_until(0)
            self.enqueue(lit, -1)
            return
        j = 0
        for k in range(1, <int>self.tmp.size()):
            if self.level[self.tmp[k] >> 1] > self.level[self.tmp[j] >> 1]:
                j = k
        self.kept.push_back(self.tmp[j])
        for k in range(<int>self.tmp.size()):
            if k != j:
                self.kept.push_back(self.tmp[k])
        self.cancel_until(self.level[self.tmp[j] >> 1])
        self.enqueue(lit, self.attach_new(self.kept, False, 0))

    cdef bint add_clause(self, vector[int]& lits) noexcept nogil:
        cdef size_t k, n
        cdef int lit, val
        if self.unsat:
            return False
        std_sort(lits.begin(), lits.end())
        self.tmp.clear()
        n = lits.size()
        for k in range(n):
            lit = lits[k]
            if k + 1 < n and lits[k + 1] == lit:
                continue
            if k + 1 < n and lits[k + 1] == (lit ^ 1):
                return True
            val = self.value(lit)
            if val == 1:
                return True
            if val == UNDEF:
                self.tmp.push_back(lit)
        if self.tmp.size() == 0:
            self.unsat = True
            return False
        if self.tmp.size() == 1:
            self.enqueue(self.tmp[0], -1)
            if self.propagate() != -1:
                self.unsat = True
                return False
            return True
        self.attach_new(self.tmp, False, 0)
        return True

    cdef int propagate(self) noexcept nogil:
        cdef int confl = -1
        cdef int p, false_lit, cr, c0, first, a, size, k, lk
        cdef size_t i, j, n
        cdef bint found
        cdef vector[int]* ws
        cdef int* arena
        while self.qhead < <int>self.trail.size():
            p = self.trail[self.qhead]
            self.qhead += 1
            false_lit = p ^ 1
            ws = &self.watches[false_lit]
            arena = self.arena.data()
            i = 0
            j = 0
            n = ws.size()
            while i < n:
                cr = ws[0][i]
                i += 1
                if arena[cr + 1] & DELETED:
                    continue
                c0 = cr + HDR
                if arena[c0] == false_lit:
                    arena[c0] = arena[c0 + 1]
                    arena[c0 + 1] = false_lit
                first = arena[c0]
                a = self.assigns[first >> 1]
                if a != UNDEF and (a ^ (first & 1)) == 1:
                    ws[0][j] = cr
                    j += 1
                    continue
                size = arena[cr]
                found = False
                for k in range(c0 + 2, c0 + size):
                    lk = arena[k]
                    a = self.assigns[lk >> 1]
                    if a == UNDEF or (a ^ (lk & 1)) == 1:
                        arena[c0 + 1] = lk
                        arena[k] = false_lit
                        self.watches[lk].push_back(cr)
                        found = True
                        break
                if found:
                    continue
                ws[0][j] = cr
                j += 1
                a = self.assigns[first >> 1]
                if a != UNDEF:
                    confl = cr
                    self.qhead = <int>self.trail.size()
                    while i < n:
                        ws[0][j] = ws[0][i]
                        j += 1
                        i += 1
                else:
                    self.enqueue(first, cr)
            ws.resize(j)
            if confl != -1:
                break
        return confl

    cdef int analyze(self, int confl, int* bt_out) noexcept nogil:
        """Fill self.kept with the learnt clause; return its LBD."""
        cdef int dl = <int>self.trail_lim.size()
        cdef int path_c = 0, p = -1, index = <int>self.trail.size() - 1
        cdef int size, base, start, k, q, v, r, rs, t, u, mi, bt, tmpl
        cdef bint redundant, found_lvl
        cdef int* arena
        self.out.clear()
        self.out.push_back(-1)
        while True:
            arena = self.arena.data()
            size = arena[confl]
            base = confl + HDR
            start = 0 if p == -1 else 1
            for k in range(base + start, base + size):
                q = arena[k]
                v = q >> 1
                if not self.seen[v] and self.level[v] > 0:
                    self.bump(v)
                    self.seen[v] = 1
                    if self.level[v] >= dl:
                        path_c += 1
                    else:
                        self.out.push_back(q)
            while not self.seen[self.trail[index] >> 1]:
                index -= 1
            p = self.trail[index]
            index -= 1
            confl = self.reason[p >> 1]
            self.seen[p >> 1] = 0
            path_c -= 1
            if path_c == 0:
                break
        self.out[0] = p ^ 1

        arena = self.arena.data()
        self.kept.clear()
        self.kept.push_back(self.out[0])
        for k in range(1, <int>self.out.size()):
            q = self.out[k]
            r = self.reason[q >> 1]
            if r == -1:
                self.kept.push_back(q)
                continue
            rs = arena[r]
            redundant = True
            for t in range(r + HDR + 1, r + HDR + rs):
                u = arena[t] >> 1
                if not self.seen[u] and self.level[u] > 0:
                    redundant = False
                    break
            if not redundant:
                self.kept.push_back(q)
        for k in range(<int>self.out.size()):
            self.seen[self.out[k] >> 1] = 0

        bt = 0
        if self.kept.size() > 1:
            mi = 1
            for k in range(2, <int>self.kept.size()):
                if self.level[self.kept[k] >> 1] > self.level[self.kept[mi] >> 1]:
                    mi = k
            tmpl = self.kept[1]
            self.kept[1] = self.kept[mi]
            self.kept[mi] = tmpl
            bt = self.level[self.kept[1] >> 1]
        bt_out[0] = bt

        # LBD: number of distinct decision levels
        self.tmp.clear()
        for k in range(<int>self.kept.size()):
            v = self.level[self.kept[k] >> 1]
            found_lvl = False
            for t in range(<int>self.tmp.size()):
                if self.tmp[t] == v:
                    found_lvl = True
                    break
            if not found_lvl:
                self.tmp.push_back(v)
        return <int>self.tmp.size()

    cdef bint locked(self, int cr) noexcept nogil:
        cdef int first = self.arena[cr + HDR]
        return self.reason[first >> 1] == cr and self.value(first) == 1

    cdef void reduce_db(self) noexcept nogil:
        cdef vector[pair[int, int]] ranked
        cdef size_t k, half
        cdef int cr, lbd
        for k in range(self.learnts.size()):
            cr = self.learnts[k]
            ranked.push_back(pair[int, int](-self.arena[cr + 2], cr))
        std_sort(ranked.begin(), ranked.end())
        half = ranked.size() // 2
        self.learnts.clear()
        for k in range(ranked.size()):
            cr = ranked[k].second
            lbd = -ranked[k].first
            if k < half and lbd > 2 and not self.locked(cr):
                self.arena[cr + 1] |= DELETED
            else:
                self.learnts.push_back(cr)
        std_sort(self.learnts.begin(), self.learnts.end())

    cdef int solve(self, double deadline) noexcept nogil:
        cdef int restarts = 0, confl, bt, lbd, cr, v, lit
        cdef double budget = _luby(2, restarts) * RESTART_BASE
        cdef long conflicts_here = 0
        if self.unsat:
            return 0
        while True:
            confl = self.propagate()
            if confl != -1:
                self.conflicts += 1
                conflicts_here += 1
                if self.trail_lim.size() == 0:
                    self.unsat = True
                    return 0
                lbd = self.analyze(confl, &bt)
                self.cancel_until(bt)
                if self.kept.size() == 1:
                    self.enqueue(self.kept[0], -1)
                else:
                    cr = self.attach_new(self.kept, True, lbd)
                    self.learnts.push_back(cr)
                    self.enqueue(self.kept[0], cr)
                self.var_inc /= VAR_DECAY
                if deadline > 0 and self.conflicts % TIME_CHECK == 0:
                    if _now() > deadline:
                        self.cancel_until(0)
                        return -1
                if conflicts_here >= budget:
                    restarts += 1
                    budget = _luby(2, restarts) * RESTART_BASE
                    conflicts_here = 0
                    self.cancel_until(0)
            else:
                if <double>(<long>self.learnts.size() - <long>self.trail.size()) >= self.max_learnts:
                    self.reduce_db()
                    self.max_learnts *= 1.1
                lit = -1
                while self.heap.size() > 0:
                    v = self.heap_pop()
                    if self.assigns[v] == UNDEF:
                        lit = 2 * v + self.polarity[v]
                        break
                if lit == -1:
                    return 1
                self.trail_lim.push_back(<int>self.trail.size())
                self.enqueue(lit, -1)

    cdef int run(self, const int32_t[::1] clauses, const int32_t[::1] blk,
                 int n_out, long bound, double deadline,
                 vector[uint8_t]& rows, long* count) noexcept nogil:
        cdef vector[int] cur
        cdef Py_ssize_t k
        cdef int lit, v, res, status = 0
        cdef long found = 0
        for k in range(clauses.shape[0]):
            lit = clauses[k]
            if lit == 0:
                if not self.add_clause(cur):
                    break
                cur.clear()
            else:
                v = (lit if lit > 0 else -lit) - 1
                cur.push_back(2 * v + (1 if lit < 0 else 0))
        while found < bound:
            res = self.solve(deadline)
            if res == 0:
                status = 1
                break
            if res == -1:
                status = 2
                break
            for v in range(n_out):
                rows.push_back(<uint8_t>self.assigns[v])
            found += 1
            if found == bound:
                break
            cur.clear()
            for k in range(blk.shape[0]):
                v = blk[k]
                cur.push_back(2 * v + self.assigns[v])
            self.add_blocking(cur)
        count[0] = found
        return status


def enumerate_models(int num_vars, clauses, block_vars, int n_out, long bound, budget):
    """Enumerate up to ``bound`` models distinct on ``block_vars``.

    Arguments and result match :func:`unigen._kernel_py.enumerate_models`.
    """
    cdef const int32_t[::1] cl = np.ascontiguousarray(clauses, dtype=np.int32)
    cdef const int32_t[::1] blk = np.ascontiguousarray(block_vars, dtype=np.int32) - 1
    cdef double deadline = 0.0
    cdef vector[uint8_t] rows
    cdef long count = 0
    cdef int status
    cdef _Solver solver = _Solver(num_vars, blk)
    if budget is not None and budget > 0:
        deadline = _now() + budget
    with nogil:
        status = solver.run(cl, blk, n_out, bound, deadline, rows, &count)
    models = np.empty((count, n_out), dtype=np.uint8)
    cdef uint8_t[:, ::1] mv = models
    cdef long r
    cdef int c
    for r in range(count):
        for c in range(n_out):
            mv[r, c] = rows[r * n_out + c]
    return models, status
