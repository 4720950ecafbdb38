"""
Pure-Python/numpy versions of the hot kernels.

Behaviour is bit-for-bit identical to the compiled ``_kernels`` extension on +/-1 data:
same working-set selection (ties go to the last index), same shrinking schedule, same
floating-point expression order.
"""
import numpy as np

TAU = 1e-12


def _last_argmax(values):
    return values.size - 1 - int(np.argmax(values[::-1]))


def _last_argmin(values):
    return values.size - 1 - int(np.argmin(values[::-1]))


def _pair_step(i, j, y, C, alpha, G, QD, Kij):
    """Analytic two-variable update; returns y_i*d_alpha_i and y_j*d_alpha_j."""
    old_ai, old_aj = alpha[i], alpha[j]
    quad = (QD[i] + QD[j]) - 2.0 * Kij
    if quad <= 0:
        quad = TAU
    ai, aj = old_ai, old_aj
    if y[i] != y[j]:
        delta = (-G[i] - G[j]) / quad
        diff = ai - aj
        ai += delta
        aj += delta
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
        delta = (G[i] - G[j]) / quad
        s = ai + aj
        ai -= delta
        aj += delta
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
    alpha[i] = ai
    alpha[j] = aj
    return y[i] * (ai - old_ai), y[j] * (aj - old_aj)


class _Solver:
    def __init__(self, X, y, C, eps, alpha, G):
        self.X, self.y, self.C, self.eps = X, y, C, eps
        self.alpha, self.G = alpha, G
        self.QD = np.einsum("ij,ij->i", X, X)
        self.l = y.shape[0]
        self.set_active(np.arange(self.l))

    def set_active(self, act):
        self.act = act
        self.Xa = self.X[act]

    def masks(self):
        a, y, C = self.alpha[self.act], self.y[self.act], self.C
        pos = y > 0
        return np.where(pos, a < C, a > 0), np.where(pos, a > 0, a < C)

    def select(self):
        """Second-order working-set selection on the active set; None when optimal."""
        act, y = self.act, self.y[self.act]
        up, low = self.masks()
        if not up.any():
            return None
        yG = y * self.G[act]
        cand = np.where(up, -yG, -np.inf)
        p = _last_argmax(cand)
        Gmax = cand[p]
        i = int(act[p])
        Ki = self.Xa @ self.X[i]
        Gmax2 = np.max(np.where(low, yG, -np.inf))
        grad_diff = Gmax + yG
        ok = low & (grad_diff > 0)
        if Gmax + Gmax2 < self.eps or not ok.any():
            return None
        quad = (self.QD[i] + self.QD[act]) - 2.0 * Ki
        quad = np.where(quad > 0, quad, TAU)
        obj = np.where(ok, -(grad_diff * grad_diff) / quad, np.inf)
        j = int(act[_last_argmin(obj)])
        return i, j, Ki

    def reconstruct(self):
        inact = np.setdiff1d(np.arange(self.l), self.act, assume_unique=True)
        if inact.size == 0:
            return
        Xin = self.X[inact]
        acc = np.zeros(inact.size)
        for s in np.flatnonzero(self.alpha > 0):
            acc += (self.alpha[s] * self.y[s]) * (Xin @ self.X[s])
        self.G[inact] = self.y[inact] * acc - 1.0

    def shrink(self, unshrunk):
        act, y = self.act, self.y[self.act]
        up, low = self.masks()
        yG = y * self.G[act]
        Gmax1 = np.max(np.where(up, -yG, -np.inf))
        Gmax2 = np.max(np.where(low, yG, -np.inf))
        if not unshrunk and Gmax1 + Gmax2 <= self.eps * 10:
            unshrunk = True
            self.reconstruct()
            self.set_active(np.arange(self.l))
            act, y = self.act, self.y
            up, low = self.masks()
            yG = y * self.G
        drop = (up & ~low & (yG > Gmax2)) | (low & ~up & (-yG > Gmax1))
        if drop.any():
            self.set_active(act[~drop])
        return unshrunk

    def run(self, max_iter, shrinking):
        it = 0
        counter = min(self.l, 1000) + 1
        unshrunk = False
        while it < max_iter:
            counter -= 1
            if counter == 0:
                counter = min(self.l, 1000)
                if shrinking:
                    unshrunk = self.shrink(unshrunk)
            sel = self.select()
            if sel is None:
                if self.act.size == self.l:
                    break
                self.reconstruct()
                self.set_active(np.arange(self.l))
                sel = self.select()
                if sel is None:
                    break
                counter = 1
            i, j, Ki = sel
            Kj = self.Xa @ self.X[j]
            Kij = float(self.X[i] @ self.X[j])
            ci, cj = _pair_step(i, j, self.y, self.C, self.alpha, self.G, self.QD, Kij)
            act = self.act
            self.G[act] = self.G[act] + self.y[act] * (ci * Ki + cj * Kj)
            it += 1
        return it


def smo_dense(X, y, C, eps, max_iter, alpha, G, shrinking=True):
    """
    SMO for the linear-kernel soft-margin SVM dual with a free bias.

    :param X: float64 array (l, d)
    :param y: float64 labels (l,), +/-1
    :param C: box constraint
    :param eps: stopping tolerance on the maximal KKT violation
    :param max_iter: iteration cap
    :param alpha: float64 (l,), feasible start, updated in place
    :param G: float64 (l,), dual gradient at ``alpha``, updated in place
    :param shrinking: drop bounded variables that cannot move from the working set
    :return: number of iterations performed
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    return _Solver(X, y, C, eps, alpha, G).run(max_iter, shrinking)


def unpack(packed, columns):
    """Sign bits back to a +/-1 float matrix with ``columns`` columns (padding bits read as +1)."""
    bits = np.unpackbits(np.ascontiguousarray(packed).view(np.uint8), axis=1, bitorder="little")[:, :columns]
    return 1.0 - 2.0 * bits.astype(np.float64)


def smo_binary(packed, d, y, C, eps, max_iter, alpha, G, shrinking=True):
    """
    Same as :func:`smo_dense` for +/-1 data given as packed sign bits.

    Dot products are ``d - 2 * hamming``, so ``packed`` may omit columns that are constant
    across all rows as long as ``d`` counts them.

    :param packed: uint64 array (l, words); bit set where the coordinate is -1
    :param d: full feature dimension
    """
    width = packed.shape[1] * 64
    X = unpack(packed, min(d, width))
    if d > width:
        # constant columns contribute +1 to every dot product
        X = np.hstack([X, np.ones((X.shape[0], d - width))])
    return smo_dense(X, y, C, eps, max_iter, alpha, G, shrinking)


def greedy_challenge(w, order, target):
    """
    Build a challenge whose delay sum w.Phi tracks ``target``.

    Phi_{n+1} is fixed to +1; the remaining coordinates are visited in ``order`` and each one
    pushes the running sum toward the target.

    :param w: float64 weights, length n+1
    :param order: permutation of range(n)
    :param target: desired value of w.Phi
    :return: int8 challenge of length n+1
    """
    n = w.shape[0] - 1
    phi = np.ones(n + 1, dtype=np.int8)
    wl = w.tolist()
    acc = wl[n]
    for i in np.asarray(order).tolist():
        wi = wl[i]
        s = 1 if wi >= 0 else -1
        if not acc < target:
            s = -s
        phi[i] = s
        acc += s * wi
    return phi
