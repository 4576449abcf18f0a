"""Locally weighted linear surrogate over frame-presence features."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .mutation import LabeledMutant
from .ranking import FrameRanking, rank_scores
from .similarity import ClassifierConfig

__all__ = ["SurrogateFit", "kernel_weights", "fit_surrogate", "design", "rank_lime"]


@dataclass(frozen=True)
class SurrogateFit:
    coef: np.ndarray
    intercept: float
    sigma: float
    lam: float


def kernel_weights(masked_fraction: np.ndarray, sigma: float = 0.25) -> np.ndarray:
    d = np.asarray(masked_fraction, dtype=float)
    return np.exp(-(d**2) / sigma**2)


def fit_surrogate(Z: np.ndarray, y: np.ndarray, w: np.ndarray, lam: float = 1e-3, sigma: float = float("nan")) -> SurrogateFit:
    """Weighted ridge regression with an unpenalized intercept.

    Features and target are centred with the weighted means, then
    ``(Zc' W Zc + lam I) beta = Zc' W yc`` is solved by Cholesky.
    """
    if lam <= 0:
        raise ValueError("ridge strength must be positive")
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    sw = w.sum()
    zbar = w @ Z / sw
    ybar = float(w @ y / sw)
    Zc = Z - zbar
    yc = y - ybar
    A = Zc.T @ (w[:, None] * Zc) + lam * np.eye(Z.shape[1])
    b = Zc.T @ (w * yc)
    beta = linalg.cho_solve(linalg.cho_factor(A), b)
    return SurrogateFit(beta, ybar - float(zbar @ beta), sigma, lam)


def design(mutants: Sequence[LabeledMutant], n_frames: int, cfg: ClassifierConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Presence indicators, oriented similarity targets and masked fractions."""
    Z = np.ones((len(mutants), n_frames))
    for row, m in enumerate(mutants):
        Z[row, list(m.mask.masked)] = 0.0
    y = np.array([cfg.goodness(m.verdict.score) for m in mutants])
    d = 1.0 - Z.mean(axis=1)
    return Z, y, d


def rank_lime(
    mutants: Sequence[LabeledMutant],
    n_frames: int,
    cfg: ClassifierConfig,
    sigma: float = 0.25,
    lam: float = 1e-3,
) -> FrameRanking:
    if len(mutants) < 2:
        raise ValueError("surrogate fit needs at least two mutants")
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    Z, y, d = design(mutants, n_frames, cfg)
    fit = fit_surrogate(Z, y, kernel_weights(d, sigma), lam, sigma)
    # exact zeros keep the tie-break deterministic when the target has no variance
    coef = np.where(np.abs(fit.coef) < 1e-12, 0.0, fit.coef)
    return rank_scores(coef)
