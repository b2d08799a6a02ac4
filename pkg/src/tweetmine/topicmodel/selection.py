"""Number-of-topics diagnostics: Arun (2010), Cao et al. (2009), Deveaud et al. (2014)."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import LdaModel, train
from .vocab import IndexedCorpus


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def arun2010(phi: np.ndarray, theta: np.ndarray, doc_lengths: np.ndarray) -> float:
    """Symmetric KL between the singular-value spectrum of ``phi`` and the topic proportions.

    Both vectors are normalized to sum to one and sorted in descending order,
    which makes the value independent of topic labels. Lower is better.
    """
    sv = np.linalg.svd(phi, compute_uv=False)
    sv = np.sort(sv)[::-1]
    cm1 = sv / sv.sum()
    cm2 = np.asarray(doc_lengths, dtype=float) @ theta
    cm2 = np.sort(cm2 / cm2.sum())[::-1]
    return _kl(cm1, cm2) + _kl(cm2, cm1)


def cao2009(phi: np.ndarray) -> float:
    """Mean pairwise cosine similarity between topic rows. Lower is better; NaN when K = 1."""
    K = phi.shape[0]
    if K < 2:
        return math.nan
    unit = phi / np.linalg.norm(phi, axis=1, keepdims=True)
    sim = unit @ unit.T
    iu = np.triu_indices(K, 1)
    return float(np.clip(sim[iu], -1.0, 1.0).mean())


def jensen_shannon(p: np.ndarray, q: np.ndarray) -> float:
    """Jensen-Shannon divergence in nats, in [0, ln 2]."""
    m = 0.5 * (p + q)
    return 0.5 * _kl(p, m) + 0.5 * _kl(q, m)


def deveaud2014(phi: np.ndarray) -> float:
    """Mean pairwise Jensen-Shannon divergence between topic rows. Higher is better; NaN when K = 1."""
    K = phi.shape[0]
    if K < 2:
        return math.nan
    total = 0.0
    for i in range(K):
        for j in range(i + 1, K):
            total += jensen_shannon(phi[i], phi[j])
    return total / (K * (K - 1) / 2)


@dataclass(frozen=True)
class SelectionRow:
    K: int
    arun: float
    cao: float
    deveaud: float


def model_metrics(model: LdaModel) -> SelectionRow:
    phi = model.phi()
    theta = model.theta()
    return SelectionRow(model.K, arun2010(phi, theta, model.doc_lengths), cao2009(phi), deveaud2014(phi))


def select_k(
    corpus: IndexedCorpus,
    k_candidates: Sequence[int],
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 1000,
    seed: int = 0,
    threads: int = 1,
) -> list[SelectionRow]:
    """Train one model per candidate K and tabulate the three diagnostics.

    Each candidate uses seed ``seed + K`` so results do not depend on the
    order or parallelism of the candidates.
    """
    if not k_candidates:
        raise ValueError("k_candidates is empty")

    def run(K: int) -> SelectionRow:
        return model_metrics(train(corpus, K, alpha, beta, iterations, seed + K))

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(run, k_candidates))
    return [run(K) for K in k_candidates]
