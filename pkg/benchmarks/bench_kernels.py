"""Compare the numba and numpy kernel paths on a campaign-shaped workload.

Run as: python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from cavityfill import _kernels
from cavityfill.rng import Stream


def _workload():
    rng = Stream(2024)
    n, d, classes = 4500, 16, 10
    x = rng.normals(n * d).reshape(n, d)
    centers = 3.0 * rng.normals(classes * d).reshape(classes, d)
    labels = rng.integers(classes, n)
    x += centers[labels]
    widths = [d, 64, 32, classes]
    weights = []
    biases = []
    for i in range(3):
        fan_in, fan_out = widths[i], widths[i + 1]
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        u = rng.uniforms(fan_in * fan_out)
        weights.append((2.0 * u - 1.0).reshape(fan_in, fan_out) * limit)
        biases.append(np.zeros(fan_out))
    epochs = 40
    perms = np.stack([Stream(100 + e).permutation(n) for e in range(epochs)])
    return weights, biases, x, labels, perms


def _time_adam(backend, weights, biases, x, labels, perms):
    t0 = time.perf_counter()
    ws, bs, failure = _kernels.adam_epochs(
        weights, biases, x, labels, perms, 128, 1e-3, 0.9, 0.999, 1e-8,
        _kernels.RELU, force_backend=backend)
    assert failure is None
    return time.perf_counter() - t0, ws


def _time_knn(backend, x, k, repeats=5):
    t0 = time.perf_counter()
    for _ in range(repeats):
        out = _kernels.knn_indices(x, k, force_backend=backend)
    return (time.perf_counter() - t0) / repeats, out


def main():
    weights, biases, x, labels, perms = _workload()
    if not _kernels.USE_NUMBA and _kernels._HAVE_NUMBA:
        print("note: CAVITYFILL_NUMBA=0 set; benchmarking both paths anyway")
    if not _kernels._HAVE_NUMBA:
        print("numba not importable; only the numpy path can run")
        t_np, _ = _time_adam("numpy", weights, biases, x, labels, perms)
        print(f"adam numpy: {t_np:.3f}s")
        return

    # compile outside the timed region
    _kernels.adam_epochs(weights, biases, x, labels, perms[:1], 128, 1e-3,
                         0.9, 0.999, 1e-8, _kernels.RELU, force_backend="numba")
    _kernels.knn_indices(x[:10], 3, force_backend="numba")

    t_nb, ws_nb = _time_adam("numba", weights, biases, x, labels, perms)
    t_np, ws_np = _time_adam("numpy", weights, biases, x, labels, perms)
    drift = max(np.abs(a - b).max() for a, b in zip(ws_nb, ws_np))
    print(f"adam ({perms.shape[0]} epochs, n={x.shape[0]}): "
          f"numba {t_nb:.3f}s  numpy {t_np:.3f}s  speedup {t_np / t_nb:.1f}x")
    print(f"  max parameter drift between paths: {drift:.3e}")

    k_nb, out_nb = _time_knn("numba", x[:800], 5)
    k_np, out_np = _time_knn("numpy", x[:800], 5)
    agree = "bit-identical" if np.array_equal(out_nb, out_np) else "DIFFER"
    print(f"knn (n=800, k=5): numba {k_nb * 1e3:.1f}ms  numpy {k_np * 1e3:.1f}ms  "
          f"speedup {k_np / k_nb:.1f}x  outputs {agree}")


if __name__ == "__main__":
    main()
