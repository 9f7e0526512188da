"""Pure-Python CDCL enumeration kernel.

Fallback for :mod:`unigen._kernel` (the compiled build of the same
algorithm). Both kernels follow identical branching, learning, restart and
clause-deletion rules, so with equal inputs they return the same models in
the same order.

Literals are encoded internally as ``2 * var + sign`` with 0-based ``var``
and ``sign == 1`` for negation. Clause storage is a flat arena; each clause
occupies ``[size, flags, lbd, lit_0, ..., lit_{size-1}]``.
"""

import time

import numpy as np

STATUS_BOUND = 0
STATUS_EXHAUSTED = 1
STATUS_TIMEOUT = 2

_UNDEF = 2
_LEARNT = 1
_DELETED = 2
_HDR = 3

_VAR_DECAY = 0.95
_RESTART_BASE = 100
_TIME_CHECK = 256


def luby(y, x):
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return y ** seq


class _Solver:
    def __init__(self, num_vars, priority_vars):
        self.nvars = num_vars
        self.arena = []
        self.watches = [[] for _ in range(2 * num_vars)]
        self.assigns = [_UNDEF] * num_vars
        self.level = [0] * num_vars
        self.reason = [-1] * num_vars
        self.polarity = [1] * num_vars
        self.seen = [0] * num_vars
        self.activity = [0.0] * num_vars
        self.var_inc = 1.0
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        self.learnts = []
        self.unsat = False
        self.heap = []
        self.heap_idx = [-1] * num_vars
        for v in priority_vars:
            self.activity[v] = 1.0
        for v in range(num_vars):
            self._heap_insert(v)
        self.max_learnts = 2000.0
        self.conflicts = 0

    # ---- heap keyed on activity (max-heap, ties to smaller index) ----

    def _less(self, a, b):
        aa = self.activity[a]
        ab = self.activity[b]
        return aa > ab or (aa == ab and a < b)

    def _percolate_up(self, i):
        heap, idx = self.heap, self.heap_idx
        x = heap[i]
        while i > 0:
            p = (i - 1) >> 1
            if not self._less(x, heap[p]):
                break
            heap[i] = heap[p]
            idx[heap[i]] = i
            i = p
        heap[i] = x
        idx[x] = i

    def _percolate_down(self, i):
        heap, idx = self.heap, self.heap_idx
        x = heap[i]
        n = len(heap)
        while 2 * i + 1 < n:
            c = 2 * i + 1
            if c + 1 < n and self._less(heap[c + 1], heap[c]):
                c += 1
            if not self._less(heap[c], x):
                break
            heap[i] = heap[c]
            idx[heap[i]] = i
            i = c
        heap[i] = x
        idx[x] = i

    def _heap_insert(self, v):
        if self.heap_idx[v] >= 0:
            return
        self.heap.append(v)
        self.heap_idx[v] = len(self.heap) - 1
        self._percolate_up(len(self.heap) - 1)

    def _heap_pop(self):
        heap = self.heap
        top = heap[0]
        last = heap.pop()
        self.heap_idx[top] = -1
        if heap:
            heap[0] = last
            self.heap_idx[last] = 0
            self._percolate_down(0)
        return top

    def _bump(self, v):
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(self.nvars):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100
        if self.heap_idx[v] >= 0:
            self._percolate_up(self.heap_idx[v])

    # ---- assignment ----

    def _value(self, lit):
        a = self.assigns[lit >> 1]
        if a == _UNDEF:
            return _UNDEF
        return a ^ (lit & 1)

    def _enqueue(self, lit, cref):
        v = lit >> 1
        self.assigns[v] = (lit & 1) ^ 1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = cref
        self.trail.append(lit)

    def _cancel_until(self, lvl):
        if len(self.trail_lim) <= lvl:
            return
        stop = self.trail_lim[lvl]
        trail = self.trail
        for k in range(len(trail) - 1, stop - 1, -1):
            lit = trail[k]
            v = lit >> 1
            self.assigns[v] = _UNDEF
            self.reason[v] = -1
            self.polarity[v] = lit & 1
            self._heap_insert(v)
        del trail[stop:]
        del self.trail_lim[lvl:]
        self.qhead = stop

    # ---- clauses ----

    def _attach_new(self, lits, learnt, lbd):
        cref = len(self.arena)
        self.arena.append(len(lits))
        self.arena.append(_LEARNT if learnt else 0)
        self.arena.append(lbd)
        self.arena.extend(lits)
        self.watches[lits[0]].append(cref)
        self.watches[lits[1]].append(cref)
        return cref

    def add_blocking(self, lits):
        """Add a clause falsified by the current model, backjumping only as far
        as needed: to where it turns unit, or where two of its literals are free."""
        levels = [self.level[l >> 1] for l in lits]
        top = max(levels)
        if top == 0:
            self.unsat = True
            return
        at_top = [l for l, lv in zip(lits, levels) if lv == top]
        rest = [l for l, lv in zip(lits, levels) if lv < top]
        if len(at_top) > 1:
            self._cancel_until(top - 1)
            self._attach_new(at_top + rest, False, 0)
            return
        if not rest:
            self._cancel_until(0)
            self._enqueue(at_top[0], -1)
            return
        j = 0
        for k in range(1, len(rest)):
            if self.level[rest[k] >> 1] > self.level[rest[j] >> 1]:
                j = k
        self._cancel_until(self.level[rest[j] >> 1])
        cref = self._attach_new([at_top[0], rest[j]] + rest[:j] + rest[j + 1:], False, 0)
        self._enqueue(at_top[0], cref)

    def add_clause(self, lits):
        """Add a clause at decision level 0; returns False once unsat."""
        if self.unsat:
            return False
        lits = sorted(set(lits))
        out = []
        for k, lit in enumerate(lits):
            if k + 1 < len(lits) and lits[k + 1] == (lit ^ 1):
                return True
            val = self._value(lit)
            if val == 1:
                return True
            if val == _UNDEF:
                out.append(lit)
        if not out:
            self.unsat = True
            return False
        if len(out) == 1:
            self._enqueue(out[0], -1)
            if self._propagate() != -1:
                self.unsat = True
                return False
            return True
        self._attach_new(out, False, 0)
        return True

    def _propagate(self):
        arena = self.arena
        assigns = self.assigns
        trail = self.trail
        watches = self.watches
        confl = -1
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            false_lit = p ^ 1
            ws = watches[false_lit]
            i = j = 0
            n = len(ws)
            while i < n:
                cr = ws[i]
                i += 1
                if arena[cr + 1] & _DELETED:
                    continue
                c0 = cr + _HDR
                if arena[c0] == false_lit:
                    arena[c0] = arena[c0 + 1]
                    arena[c0 + 1] = false_lit
                first = arena[c0]
                a = assigns[first >> 1]
                if a != _UNDEF and (a ^ (first & 1)) == 1:
                    ws[j] = cr
                    j += 1
                    continue
                size = arena[cr]
                found = False
                for k in range(c0 + 2, c0 + size):
                    lk = arena[k]
                    a = assigns[lk >> 1]
                    if a == _UNDEF or (a ^ (lk & 1)) == 1:
                        arena[c0 + 1] = lk
                        arena[k] = false_lit
                        watches[lk].append(cr)
                        found = True
                        break
                if found:
                    continue
                ws[j] = cr
                j += 1
                a = assigns[first >> 1]
                if a != _UNDEF:
                    confl = cr
                    self.qhead = len(trail)
                    while i < n:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                else:
                    self._enqueue(first, cr)
            del ws[j:]
            if confl != -1:
                break
        return confl

    def _analyze(self, confl):
        arena = self.arena
        seen = self.seen
        level = self.level
        trail = self.trail
        dl = len(self.trail_lim)
        out = [-1]
        path_c = 0
        p = -1
        index = len(trail) - 1
        while True:
            size = arena[confl]
            base = confl + _HDR
            start = 0 if p == -1 else 1
            for k in range(base + start, base + size):
                q = arena[k]
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    self._bump(v)
                    seen[v] = 1
                    if level[v] >= dl:
                        path_c += 1
                    else:
                        out.append(q)
            while not seen[trail[index] >> 1]:
                index -= 1
            p = trail[index]
            index -= 1
            confl = self.reason[p >> 1]
            seen[p >> 1] = 0
            path_c -= 1
            if path_c == 0:
                break
        out[0] = p ^ 1

        # local minimisation: drop literals implied by the rest of the clause
        kept = [out[0]]
        for k in range(1, len(out)):
            q = out[k]
            r = self.reason[q >> 1]
            if r == -1:
                kept.append(q)
                continue
            rs = arena[r]
            redundant = True
            for t in range(r + _HDR + 1, r + _HDR + rs):
                u = arena[t] >> 1
                if not seen[u] and level[u] > 0:
                    redundant = False
                    break
            if not redundant:
                kept.append(q)
        for q in out:
            seen[q >> 1] = 0

        bt = 0
        if len(kept) > 1:
            mi = 1
            for k in range(2, len(kept)):
                if level[kept[k] >> 1] > level[kept[mi] >> 1]:
                    mi = k
            kept[1], kept[mi] = kept[mi], kept[1]
            bt = level[kept[1] >> 1]
        levels = set()
        for q in kept:
            levels.add(level[q >> 1])
        return kept, bt, len(levels)

    def _locked(self, cr):
        first = self.arena[cr + _HDR]
        return self.reason[first >> 1] == cr and self._value(first) == 1

    def _reduce_db(self):
        arena = self.arena
        ranked = sorted((-arena[cr + 2], cr) for cr in self.learnts)
        half = len(ranked) // 2
        keep = []
        for k, (neg_lbd, cr) in enumerate(ranked):
            if k < half and -neg_lbd > 2 and not self._locked(cr):
                arena[cr + 1] |= _DELETED
            else:
                keep.append(cr)
        self.learnts = sorted(keep)

    def solve(self, deadline):
        """Return 1 (sat), 0 (unsat) or -1 (timeout)."""
        if self.unsat:
            return 0
        restarts = 0
        budget = luby(2, restarts) * _RESTART_BASE
        conflicts_here = 0
        while True:
            confl = self._propagate()
            if confl != -1:
                self.conflicts += 1
                conflicts_here += 1
                if not self.trail_lim:
                    self.unsat = True
                    return 0
                learnt, bt, lbd = self._analyze(confl)
                self._cancel_until(bt)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], -1)
                else:
                    cr = self._attach_new(learnt, True, lbd)
                    self.learnts.append(cr)
                    self._enqueue(learnt[0], cr)
                self.var_inc /= _VAR_DECAY
                if deadline > 0 and self.conflicts % _TIME_CHECK == 0:
                    if time.monotonic() > deadline:
                        self._cancel_until(0)
                        return -1
                if conflicts_here >= budget:
                    restarts += 1
                    budget = luby(2, restarts) * _RESTART_BASE
                    conflicts_here = 0
                    self._cancel_until(0)
            else:
                if len(self.learnts) - len(self.trail) >= self.max_learnts:
                    self._reduce_db()
                    self.max_learnts *= 1.1
                lit = -1
                while self.heap:
                    v = self._heap_pop()
                    if self.assigns[v] == _UNDEF:
                        lit = 2 * v + self.polarity[v]
                        break
                if lit == -1:
                    return 1
                self.trail_lim.append(len(self.trail))
                self._enqueue(lit, -1)


def enumerate_models(num_vars, clauses, block_vars, n_out, bound, budget):
    """Enumerate up to ``bound`` models distinct on ``block_vars``.

    ``clauses`` is a flat sequence of DIMACS literals with 0 terminators over
    variables ``1..num_vars``; ``block_vars`` are 1-based. Returns
    ``(models, status)`` where ``models`` is a ``(k, n_out)`` uint8 array
    holding the first ``n_out`` variables of each model.
    """
    deadline = time.monotonic() + budget if budget and budget > 0 else 0.0
    blk = [int(v) - 1 for v in block_vars]
    solver = _Solver(num_vars, blk)
    cur = []
    for lit in clauses:
        lit = int(lit)
        if lit == 0:
            if not solver.add_clause(cur):
                break
            cur = []
        else:
            v = abs(lit) - 1
            cur.append(2 * v + (1 if lit < 0 else 0))
    rows = []
    status = STATUS_BOUND
    while len(rows) < bound:
        res = solver.solve(deadline)
        if res == 0:
            status = STATUS_EXHAUSTED
            break
        if res == -1:
            status = STATUS_TIMEOUT
            break
        rows.append(solver.assigns[:n_out])
        if len(rows) == bound:
            break
        solver.add_blocking([2 * v + solver.assigns[v] for v in blk])
    models = np.array(rows, dtype=np.uint8).reshape(len(rows), n_out)
    return models, status
