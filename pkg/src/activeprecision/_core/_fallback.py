"""Pure numpy implementations of the hot kernels.

Signatures mirror ``_kernels.pyx`` exactly. Inputs are assumed validated,
C-contiguous float64.
"""

import numpy as np

BACKEND = "python"


def mod_matrix(R, C, w_r, w_c, r_gain, c_gain, scale):
    d = R.shape[1]
    fr = r_gain * (R @ w_r) / d
    fc = c_gain * (C @ w_c) / d
    g = (scale * r_gain * c_gain / d) * (R @ C.T)
    return fr[:, None] + fc[None, :] + g


def precision_matrix(R, C, w_r, w_c, r_gain, c_gain, scale, pi_min):
    return np.minimum(1.0, np.maximum(pi_min, mod_matrix(R, C, w_r, w_c, r_gain, c_gain, scale)))


def attention(Q, K, V, pi=None):
    S = (Q @ K.T) / np.sqrt(Q.shape[1])
    if pi is not None:
        S = S + np.log(pi)
    z = np.exp(S - S.max(axis=1, keepdims=True))
    A = z / z.sum(axis=1, keepdims=True)
    return A @ V, A


def row_weighted_sum(pi, E):
    return (pi * E).sum(axis=1)


def gaussian_code(x, centers, width, target_sq_norm):
    z = np.exp(-0.5 * ((x[:, None] - centers[None, :]) / width) ** 2)
    norm = np.sqrt((z * z).sum(axis=1, keepdims=True))
    return z * (np.sqrt(target_sq_norm) / np.maximum(norm, 1e-300))
