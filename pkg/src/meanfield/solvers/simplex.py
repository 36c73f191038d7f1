import numpy as np


def project_simplex(v):
    """Euclidean projection of ``v`` onto the probability simplex.

    Works on the last axis, so a batch of vectors can be projected at once.
    Uses the sort-and-threshold construction.
    """
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    u = -np.sort(-v, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    k = np.arange(1, n + 1)
    cond = u - css / k > 0
    # cond holds on a prefix; rho is its last index
    rho = n - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1)
    return np.maximum(v - theta, 0.0)
