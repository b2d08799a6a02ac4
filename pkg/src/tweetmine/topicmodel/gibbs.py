"""Collapsed Gibbs sampling kernel for LDA."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def init_counts(words, doc_of, z, n_wk, n_dk, n_k):
    for i in range(words.shape[0]):
        k = z[i]
        n_wk[words[i], k] += 1
        n_dk[doc_of[i], k] += 1
        n_k[k] += 1


@njit(cache=True, nogil=True)
def sweep(words, doc_of, z, n_wk, n_dk, n_k, alpha, beta, vbeta, uniforms):
    """Resample every token once, in corpus order.

    The topic of token i is drawn from
    (n_dk[d,k] + alpha) * (n_wk[w,k] + beta) / (n_k[k] + V*beta)
    with the token's own assignment removed from the counts first.
    ``uniforms`` holds one U(0,1) draw per token.
    """
    K = n_k.shape[0]
    p = np.empty(K)
    for i in range(words.shape[0]):
        w = words[i]
        d = doc_of[i]
        k = z[i]
        n_wk[w, k] -= 1
        n_dk[d, k] -= 1
        n_k[k] -= 1
        total = 0.0
        for t in range(K):
            total += (n_dk[d, t] + alpha) * (n_wk[w, t] + beta) / (n_k[t] + vbeta)
            p[t] = total
        u = uniforms[i] * total
        k = 0
        while k < K - 1 and p[k] <= u:
            k += 1
        z[i] = k
        n_wk[w, k] += 1
        n_dk[d, k] += 1
        n_k[k] += 1


def sweep_reference(words, doc_of, z, n_wk, n_dk, n_k, alpha, beta, vbeta, uniforms):
    """Plain-Python twin of :func:`sweep` (slow), used to cross-check the kernel."""
    K = n_k.shape[0]
    for i in range(words.shape[0]):
        w, d, k = int(words[i]), int(doc_of[i]), int(z[i])
        n_wk[w, k] -= 1
        n_dk[d, k] -= 1
        n_k[k] -= 1
        weights = [(n_dk[d, t] + alpha) * (n_wk[w, t] + beta) / (n_k[t] + vbeta) for t in range(K)]
        cum, u = 0.0, uniforms[i] * sum_sequential(weights)
        k = K - 1
        for t in range(K):
            cum += weights[t]
            if cum > u:
                k = t
                break
        z[i] = k
        n_wk[w, k] += 1
        n_dk[d, k] += 1
        n_k[k] += 1


def sum_sequential(values):
    total = 0.0
    for v in values:
        total += v
    return total
