"""Categorical draws from head logits with temperature and excluded slots."""

from typing import Optional, Sequence

import numpy as np

from ..errors import AllProbabilityMassExcluded


def stream_uniforms(seed: int, stream_ids: Sequence[int], n: int) -> np.ndarray:
    """[len(stream_ids) x n] uniforms, one independent stream per row or sequence."""
    if len(stream_ids) == 0:
        return np.zeros((0, n))
    return np.stack([np.random.default_rng([int(seed), int(s)]).random(n) for s in stream_ids])


def tempered_probabilities(
    logits: np.ndarray,
    temperature: float,
    excluded: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """softmax(logits / T) with the excluded slots zeroed and the rest renormalised."""
    z = np.asarray(logits, dtype=np.float64) / temperature
    z -= z.max(axis=1, keepdims=True)
    probs = np.exp(z)
    probs /= probs.sum(axis=1, keepdims=True)
    if excluded:
        probs[:, list(excluded)] = 0.0
        total = probs.sum(axis=1, keepdims=True)
        if np.any(total <= 0.0):
            raise AllProbabilityMassExcluded(
                "every category with non-zero probability is excluded", excluded=list(excluded)
            )
        probs /= total
    return probs


def draw(
    logits: np.ndarray,
    uniforms: np.ndarray,
    temperature: float,
    excluded: Optional[Sequence[int]] = None,
    argmax_below: float = 1e-6,
) -> np.ndarray:
    """
    One category per row by inverse-CDF sampling; argmax when the
    temperature is below `argmax_below`.
    """
    n_classes = logits.shape[1]
    if excluded and len(set(excluded)) >= n_classes:
        raise AllProbabilityMassExcluded("every category is excluded", excluded=list(excluded))
    if temperature < argmax_below:
        scores = np.asarray(logits, dtype=np.float64).copy()
        if excluded:
            scores[:, list(excluded)] = -np.inf
        return scores.argmax(axis=1).astype(np.int64)
    probs = tempered_probabilities(logits, temperature, excluded)
    cdf = np.cumsum(probs, axis=1)
    picks = (cdf < uniforms[:, None]).sum(axis=1)
    picks = np.minimum(picks, n_classes - 1)
    if excluded:
        # float rounding at the top of the CDF can land on an excluded slot
        blocked = np.isin(picks, list(excluded))
        if blocked.any():
            picks[blocked] = probs[blocked].argmax(axis=1)
    return picks.astype(np.int64)
