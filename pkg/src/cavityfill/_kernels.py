"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import: numba when importable, unless the
environment variable CAVITYFILL_NUMBA is "0". Both implementations are kept
importable so benchmarks and tests can compare them directly.

Within one backend results are bit-reproducible. Across backends the knn
kernel is bit-identical (the numpy path accumulates squared distances in the
same dimension order as the numba loops); the trainer agrees to roundoff per
step but long runs drift apart, because numpy's vectorized exp/tanh and the
scalar libm calls numba emits differ by one ulp on some inputs.
"""

import os

import numpy as np

RELU = 0
TANH = 1

try:
    from numba import njit
    from numba.typed import List as _TypedList
    _HAVE_NUMBA = True
except ImportError:
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and os.environ.get("CAVITYFILL_NUMBA", "1") != "0"
BACKEND = "numba" if USE_NUMBA else "numpy"


def _adam_epochs_numpy(ws, bs, mw, vw, mb, vb, x, labels, perms, batch_size,
                       lr, beta1, beta2, adam_eps, act):
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        return _adam_epochs_numpy_inner(ws, bs, mw, vw, mb, vb, x, labels,
                                        perms, batch_size, lr, beta1, beta2,
                                        adam_eps, act)


def _adam_epochs_numpy_inner(ws, bs, mw, vw, mb, vb, x, labels, perms,
                             batch_size, lr, beta1, beta2, adam_eps, act):
    # divergence shows up as a non-finite loss, caught below; the float
    # warnings on that path are expected, hence the errstate in the wrapper
    n = x.shape[0]
    n_layers = len(ws)
    b1t = 1.0
    b2t = 1.0
    for epoch in range(perms.shape[0]):
        perm = perms[epoch]
        for batch_index, start in enumerate(range(0, n, batch_size)):
            idx = perm[start:start + batch_size]
            xb = x[idx]
            yb = labels[idx]
            bsz = xb.shape[0]
            acts = [xb]
            a = xb
            for l in range(n_layers - 1):
                z = np.dot(a, ws[l]) + bs[l]
                a = np.maximum(z, 0.0) if act == RELU else np.tanh(z)
                acts.append(a)
            logits = np.dot(a, ws[-1]) + bs[-1]
            shifted = logits - logits.max(axis=1, keepdims=True)
            e = np.exp(shifted)
            probs = e / e.sum(axis=1, keepdims=True)
            rows = np.arange(bsz)
            loss = -np.log(probs[rows, yb]).sum() / bsz
            if not np.isfinite(loss):
                return epoch, batch_index
            delta = probs
            delta[rows, yb] -= 1.0
            delta *= 1.0 / bsz
            b1t *= beta1
            b2t *= beta2
            c1 = 1.0 / (1.0 - b1t)
            c2 = 1.0 / (1.0 - b2t)
            for l in range(n_layers - 1, -1, -1):
                gw = np.dot(acts[l].T, delta)
                gb = delta.sum(axis=0)
                if l > 0:
                    back = np.dot(delta, ws[l].T)
                    al = acts[l]
                    if act == RELU:
                        back[al <= 0.0] = 0.0
                    else:
                        back *= 1.0 - al * al
                    delta = back
                for p, m_, v_, g in ((ws[l], mw[l], vw[l], gw),
                                     (bs[l], mb[l], vb[l], gb)):
                    m_ += (1.0 - beta1) * (g - m_)
                    v_ += (1.0 - beta2) * (g * g - v_)
                    p -= lr * (m_ * c1) / (np.sqrt(v_ * c2) + adam_eps)
    return -1, -1


def _knn_numpy(x, k):
    n, d = x.shape
    d2 = np.zeros((n, n))
    # accumulate one dimension at a time, matching the numba inner loop order
    for t in range(d):
        diff = x[:, t][:, None] - x[:, t][None, :]
        d2 += diff * diff
    np.fill_diagonal(d2, np.inf)
    out = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        out[i] = np.argsort(d2[i], kind="stable")[:k]
    return out


if _HAVE_NUMBA:

    @njit(cache=True)
    def _adam_epochs_numba(ws, bs, mw, vw, mb, vb, x, labels, perms, batch_size,
                           lr, beta1, beta2, adam_eps, act):
        n = x.shape[0]
        n_layers = len(ws)
        n_classes = ws[n_layers - 1].shape[1]
        b1t = 1.0
        b2t = 1.0
        for epoch in range(perms.shape[0]):
            perm = perms[epoch]
            start = 0
            batch_index = 0
            while start < n:
                stop = min(start + batch_size, n)
                bsz = stop - start
                xb = np.empty((bsz, x.shape[1]))
                yb = np.empty(bsz, dtype=np.int64)
                for i in range(bsz):
                    r = perm[start + i]
                    yb[i] = labels[r]
                    for j in range(x.shape[1]):
                        xb[i, j] = x[r, j]
                acts = _TypedList()
                acts.append(xb)
                a = xb
                for l in range(n_layers - 1):
                    z = np.dot(a, ws[l]) + bs[l]
                    if act == RELU:
                        a = np.maximum(z, 0.0)
                    else:
                        a = np.tanh(z)
                    acts.append(a)
                logits = np.dot(a, ws[n_layers - 1]) + bs[n_layers - 1]
                probs = np.empty_like(logits)
                loss = 0.0
                for i in range(bsz):
                    m = logits[i, 0]
                    for j in range(1, n_classes):
                        if logits[i, j] > m:
                            m = logits[i, j]
                    s = 0.0
                    for j in range(n_classes):
                        e = np.exp(logits[i, j] - m)
                        probs[i, j] = e
                        s += e
                    for j in range(n_classes):
                        probs[i, j] /= s
                    loss -= np.log(probs[i, yb[i]])
                loss /= bsz
                if not np.isfinite(loss):
                    return epoch, batch_index
                delta = probs
                inv = 1.0 / bsz
                for i in range(bsz):
                    delta[i, yb[i]] -= 1.0
                for i in range(bsz):
                    for j in range(n_classes):
                        delta[i, j] *= inv
                b1t *= beta1
                b2t *= beta2
                c1 = 1.0 / (1.0 - b1t)
                c2 = 1.0 / (1.0 - b2t)
                for l in range(n_layers - 1, -1, -1):
                    gw = np.dot(acts[l].T, delta)
                    gb = np.sum(delta, axis=0)
                    if l > 0:
                        back = np.dot(delta, ws[l].T)
                        al = acts[l]
                        if act == RELU:
                            for i in range(bsz):
                                for j in range(al.shape[1]):
                                    if al[i, j] <= 0.0:
                                        back[i, j] = 0.0
                        else:
                            for i in range(bsz):
                                for j in range(al.shape[1]):
                                    back[i, j] *= 1.0 - al[i, j] * al[i, j]
                        delta = back
                    w = ws[l]
                    mwl = mw[l]
                    vwl = vw[l]
                    for i in range(w.shape[0]):
                        for j in range(w.shape[1]):
                            g = gw[i, j]
                            mwl[i, j] = beta1 * mwl[i, j] + (1.0 - beta1) * g
                            vwl[i, j] = beta2 * vwl[i, j] + (1.0 - beta2) * g * g
                            w[i, j] -= lr * (mwl[i, j] * c1) / (np.sqrt(vwl[i, j] * c2) + adam_eps)
                    b = bs[l]
                    mbl = mb[l]
                    vbl = vb[l]
                    for j in range(b.shape[0]):
                        g = gb[j]
                        mbl[j] = beta1 * mbl[j] + (1.0 - beta1) * g
                        vbl[j] = beta2 * vbl[j] + (1.0 - beta2) * g * g
                        b[j] -= lr * (mbl[j] * c1) / (np.sqrt(vbl[j] * c2) + adam_eps)
                start = stop
                batch_index += 1
        return -1, -1

    @njit(cache=True)
    def _knn_numba(x, k):
        n, d = x.shape
        out = np.empty((n, k), dtype=np.int64)
        dist = np.empty(n)
        for i in range(n):
            for j in range(n):
                s = 0.0
                for t in range(d):
                    diff = x[i, t] - x[j, t]
                    s += diff * diff
                dist[j] = s
            dist[i] = np.inf
            order = np.argsort(dist, kind="mergesort")
            for c in range(k):
                out[i, c] = order[c]
        return out

else:
    _adam_epochs_numba = None
    _knn_numba = None


def adam_epochs(weights, biases, x, labels, perms, batch_size, lr,
                beta1, beta2, adam_eps, act, force_backend=None):
    """Run Adam over pre-shuffled minibatch epochs.

    Inputs are never mutated. Returns (new_weights, new_biases, failure)
    where failure is None on success or (epoch, batch_index) of the first
    non-finite loss. perms is an (epochs, n) int64 array of row orders.
    """
    ws = [np.array(w, dtype=np.float64) for w in weights]
    bs = [np.array(b, dtype=np.float64) for b in biases]
    mw = [np.zeros_like(w) for w in ws]
    vw = [np.zeros_like(w) for w in ws]
    mb = [np.zeros_like(b) for b in bs]
    vb = [np.zeros_like(b) for b in bs]
    backend = BACKEND if force_backend is None else force_backend
    if backend == "numba":
        if not _HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not importable")
        args = []
        for group in (ws, bs, mw, vw, mb, vb):
            tl = _TypedList()
            for arr in group:
                tl.append(arr)
            args.append(tl)
        code = _adam_epochs_numba(*args, x, labels, perms, batch_size,
                                  lr, beta1, beta2, adam_eps, act)
    else:
        code = _adam_epochs_numpy(ws, bs, mw, vw, mb, vb, x, labels, perms,
                                  batch_size, lr, beta1, beta2, adam_eps, act)
    failure = None if code == (-1, -1) else code
    return ws, bs, failure


def knn_indices(x, k, force_backend=None):
    """Indices of each row's k nearest neighbors, self excluded.

    Euclidean distance, ties broken by lower row index. Bit-identical
    across backends. Requires 1 <= k < n.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n_rows")
    backend = BACKEND if force_backend is None else force_backend
    if backend == "numba":
        if not _HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not importable")
        return _knn_numba(x, k)
    return _knn_numpy(x, k)
