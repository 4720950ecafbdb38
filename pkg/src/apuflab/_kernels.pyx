# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: SMO for the linear SVM dual and the greedy challenge constructor."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int8_t

cnp.import_array()

cdef extern from *:
    int popcount64 "__builtin_popcountll"(unsigned long long) nogil

cdef double TAU = 1e-12
cdef double INF = float("inf")


cdef class _Solver:
    cdef int mode
    cdef const uint64_t[:, ::1] P
    cdef const double[:, ::1] X
    cdef double d
    cdef const double[::1] y
    cdef double C, eps
    cdef double[::1] alpha, G, QD, Ki, Kj, acc
    cdef cnp.intp_t[::1] act
    cdef Py_ssize_t l, nact

    cdef inline double kern(self, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
        cdef Py_ssize_t k
        cdef int h = 0
        cdef double s = 0.0
        if self.mode == 0:
            for k in range(self.P.shape[1]):
                h += popcount64(self.P[a, k] ^ self.P[b, k])
            return self.d - 2.0 * h
        for k in range(self.X.shape[1]):
            s = s + self.X[a, k] * self.X[b, k]
        return s

    cdef void row(self, Py_ssize_t i, double[::1] out) noexcept nogil:
        cdef Py_ssize_t p, t
        for p in range(self.nact):
            t = self.act[p]
            out[t] = self.kern(t, i)

    cdef inline bint in_up(self, Py_ssize_t t) noexcept nogil:
        return (self.y[t] > 0 and self.alpha[t] < self.C) or (self.y[t] < 0 and self.alpha[t] > 0)

    cdef inline bint in_low(self, Py_ssize_t t) noexcept nogil:
        return (self.y[t] > 0 and self.alpha[t] > 0) or (self.y[t] < 0 and self.alpha[t] < self.C)

    cdef void activate_all(self) noexcept nogil:
        cdef Py_ssize_t t
        for t in range(self.l):
            self.act[t] = t
        self.nact = self.l

    cdef int select(self, Py_ssize_t* out_i, Py_ssize_t* out_j) noexcept nogil:
        """Second-order working-set selection on the active set; returns 1 when optimal."""
        cdef Py_ssize_t p, t, i = -1, j = -1
        cdef double Gmax = -INF, Gmax2 = -INF, yG, grad_diff, quad, obj, obj_min = INF
        for p in range(self.nact):
            t = self.act[p]
            if self.in_up(t):
                yG = self.y[t] * self.G[t]
                if -yG >= Gmax:
                    Gmax = -yG
                    i = t
        if i == -1:
            return 1
        self.row(i, self.Ki)
        for p in range(self.nact):
            t = self.act[p]
            if self.in_low(t):
                yG = self.y[t] * self.G[t]
                if yG >= Gmax2:
                    Gmax2 = yG
                grad_diff = Gmax + yG
                if grad_diff > 0:
                    quad = (self.QD[i] + self.QD[t]) - 2.0 * self.Ki[t]
                    if not quad > 0:
                        quad = TAU
                    obj = -(grad_diff * grad_diff) / quad
                    if obj <= obj_min:
                        obj_min = obj
                        j = t
        if Gmax + Gmax2 < self.eps or j == -1:
            return 1
        out_i[0] = i
        out_j[0] = j
        return 0

    cdef void reconstruct(self) noexcept nogil:
        cdef Py_ssize_t s, t, p, q = 0
        cdef double c
        if self.nact == self.l:
            return
        # inactive indices in ascending order, stored after the active block
        for t in range(self.l):
            if q < self.nact and self.act[q] == t:
                q += 1
            else:
                self.acc[t] = 0.0
        for s in range(self.l):
            if self.alpha[s] > 0:
                c = self.alpha[s] * self.y[s]
                q = 0
                for t in range(self.l):
                    if q < self.nact and self.act[q] == t:
                        q += 1
                    else:
                        self.acc[t] = self.acc[t] + c * self.kern(t, s)
        q = 0
        for t in range(self.l):
            if q < self.nact and self.act[q] == t:
                q += 1
            else:
                self.G[t] = self.y[t] * self.acc[t] - 1.0

    cdef bint shrink(self, bint unshrunk) noexcept nogil:
        cdef Py_ssize_t p, t, keep = 0
        cdef double Gmax1 = -INF, Gmax2 = -INF, yG
        cdef bint up, low
        for p in range(self.nact):
            t = self.act[p]
            yG = self.y[t] * self.G[t]
            if self.in_up(t) and -yG > Gmax1:
                Gmax1 = -yG
            if self.in_low(t) and yG > Gmax2:
                Gmax2 = yG
        if not unshrunk and Gmax1 + Gmax2 <= self.eps * 10:
            unshrunk = True
            self.reconstruct()
            self.activate_all()
        for p in range(self.nact):
            t = self.act[p]
            yG = self.y[t] * self.G[t]
            up = self.in_up(t)
            low = self.in_low(t)
            if (up and not low and yG > Gmax2) or (low and not up and -yG > Gmax1):
                continue
            self.act[keep] = t
            keep += 1
        self.nact = keep
        return unshrunk

    cdef Py_ssize_t run(self, Py_ssize_t max_iter, bint shrinking) noexcept nogil:
        cdef Py_ssize_t it = 0, counter, i = 0, j = 0, p, t
        cdef bint unshrunk = False
        cdef double old_ai, old_aj, ai, aj, delta, diff, s, ci, cj, quad
        cdef const double[::1] y = self.y
        cdef double C = self.C
        counter = min(self.l, 1000) + 1
        while it < max_iter:
            counter -= 1
            if counter == 0:
                counter = min(self.l, 1000)
                if shrinking:
                    unshrunk = self.shrink(unshrunk)
            if self.select(&i, &j):
                if self.nact == self.l:
                    break
                self.reconstruct()
                self.activate_all()
                if self.select(&i, &j):
                    break
                counter = 1
            self.row(j, self.Kj)

            old_ai = self.alpha[i]
            old_aj = self.alpha[j]
            quad = (self.QD[i] + self.QD[j]) - 2.0 * self.kern(i, j)
            if quad <= 0:
                quad = TAU
            ai = old_ai
            aj = old_aj
            if y[i] != y[j]:
                delta = (-self.G[i] - self.G[j]) / quad
                diff = ai - aj
                ai = ai + delta
                aj = aj + delta
                if diff > 0:
                    if aj < 0:
                        aj = 0.0
                        ai = diff
                else:
                    if ai < 0:
                        ai = 0.0
                        aj = -diff
                if diff > 0:
                    if ai > C:
                        ai = C
                        aj = C - diff
                else:
                    if aj > C:
                        aj = C
                        ai = C + diff
            else:
                delta = (self.G[i] - self.G[j]) / quad
                s = ai + aj
                ai = ai - delta
                aj = aj + delta
                if s > C:
                    if ai > C:
                        ai = C
                        aj = s - C
                else:
                    if aj < 0:
                        aj = 0.0
                        ai = s
                if s > C:
                    if aj > C:
                        aj = C
                        ai = s - C
                else:
                    if ai < 0:
                        ai = 0.0
                        aj = s
            self.alpha[i] = ai
            self.alpha[j] = aj
            ci = y[i] * (ai - old_ai)
            cj = y[j] * (aj - old_aj)
            for p in range(self.nact):
                t = self.act[p]
                self.G[t] = self.G[t] + y[t] * (ci * self.Ki[t] + cj * self.Kj[t])
            it += 1
        return it


cdef _Solver _make(int mode, const double[::1] y, double C, double eps, double[::1] alpha, double[::1] G):
    cdef _Solver sv = _Solver.__new__(_Solver)
    cdef Py_ssize_t l = y.shape[0]
    sv.mode = mode
    sv.y = y
    sv.C = C
    sv.eps = eps
    sv.alpha = alpha
    sv.G = G
    sv.l = l
    sv.Ki = np.empty(l)
    sv.Kj = np.empty(l)
    sv.acc = np.zeros(l)
    sv.act = np.arange(l, dtype=np.intp)
    sv.nact = l
    return sv


def smo_binary(const uint64_t[:, ::1] packed, Py_ssize_t d, const double[::1] y, double C,
               double eps, Py_ssize_t max_iter, double[::1] alpha, double[::1] G, bint shrinking=True):
    cdef _Solver sv = _make(0, y, C, eps, alpha, G)
    cdef Py_ssize_t it
    sv.P = packed
    sv.X = np.empty((1, 1))
    sv.d = <double>d
    sv.QD = np.full(y.shape[0], <double>d)
    with nogil:
        it = sv.run(max_iter, shrinking)
    return it


def smo_dense(X, const double[::1] y, double C, double eps, Py_ssize_t max_iter,
              double[::1] alpha, double[::1] G, bint shrinking=True):
    cdef _Solver sv = _make(1, y, C, eps, alpha, G)
    cdef Py_ssize_t it
    Xc = np.ascontiguousarray(X, dtype=np.float64)
    sv.X = Xc
    sv.P = np.empty((1, 1), dtype=np.uint64)
    sv.QD = np.einsum("ij,ij->i", Xc, Xc)
    with nogil:
        it = sv.run(max_iter, shrinking)
    return it


def greedy_challenge(const double[::1] w, order, double target):
    cdef Py_ssize_t n = w.shape[0] - 1
    cdef const cnp.intp_t[::1] ordv = np.ascontiguousarray(order, dtype=np.intp)
    out = np.ones(n + 1, dtype=np.int8)
    cdef int8_t[::1] phi = out
    cdef double acc = w[n], wi
    cdef Py_ssize_t k, i
    cdef int s
    for k in range(ordv.shape[0]):
        i = ordv[k]
        wi = w[i]
        s = 1 if wi >= 0 else -1
        if not acc < target:
            s = -s
        phi[i] = s
        acc = acc + s * wi
    return out
