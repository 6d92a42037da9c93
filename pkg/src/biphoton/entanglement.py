"""Temporal entanglement of the beam-splitter output components.

Every joint amplitude produced by :mod:`biphoton.beamsplitter` is a sum of
two product terms, so its Schmidt spectrum has at most two nonzero
coefficients. This module gives the closed-form spectrum as a function of
``|J|`` and ``t^2``, a numerical Schmidt decomposition of a discretized
amplitude, and the Von Neumann entropy (in bits) of either.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .beamsplitter import (
    DEGENERATE_PROB,
    BeamSplitter,
    Outcome,
    TwoPhotonAmplitude,
    path_indistinguishability,
    probabilities_from_overlap,
)
from .errors import ComputationError, DegenerateOutcomeError, NormalizationError
from .waveforms import Sampled, TemporalShape, TimeGrid, sample

SCHMIDT_CUTOFF = 1e-8
ENTROPY_NORM_TOL = 1e-6


@dataclass(frozen=True)
class EntanglementReport:
    outcome: Outcome
    entropy: float
    lambda_sq_plus: float
    lambda_sq_minus: float
    J_abs: float
    t_sq: float


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """``F(tau1, tau2) = sum_k coefficients[k] * modes_a[k](tau1) * modes_b[k](tau2)``."""

    coefficients: np.ndarray
    modes_a: list[Sampled] = field(repr=False)
    modes_b: list[Sampled] = field(repr=False)
    grid: TimeGrid

    @property
    def lambda_sq(self) -> np.ndarray:
        return self.coefficients**2

    @property
    def rank(self) -> int:
        return len(self.coefficients)

    def entropy(self) -> float:
        return von_neumann_entropy(self.coefficients)

    def reconstruct(self) -> np.ndarray:
        a = np.array([m.values for m in self.modes_a])
        b = np.array([m.values for m in self.modes_b])
        return (a.T * self.coefficients) @ b

    def gram(self, family: str = "a") -> np.ndarray:
        modes = self.modes_a if family == "a" else self.modes_b
        m = np.array([x.values for x in modes])
        return (np.conj(m) * self.grid.weights) @ m.T


def _eq6a(J_abs: float, P: float) -> tuple[float, float]:
    JJ = 1.0 - J_abs * J_abs  # squared complement of |J|
    base = P * P + 0.5 * JJ * (1.0 - P * P)
    root = math.sqrt(J_abs * J_abs * JJ * (P - 1.0) ** 2 + (P - JJ * (P - 1.0)) ** 2)
    plus = (base + P * root) / (2.0 * base)
    minus = (base - P * root) / (2.0 * base)
    return min(max(plus, 0.0), 1.0), min(max(minus, 0.0), 1.0)


def schmidt_analytic(J_abs: float, bs: BeamSplitter, outcome) -> EntanglementReport:
    """Closed-form Schmidt spectrum and entropy of one output component.

    For ``|1,1>`` the spectrum depends on ``|J|`` and on ``t^2 - r^2``; for
    ``|2,0>`` and ``|0,2>`` it depends on ``|J|`` only:
    ``(1 +- |J|)^2 / (2 (1 + |J|^2))``.

    Raises
    ------
    DegenerateOutcomeError
        For ``|1,1>`` when its probability vanishes (``|J| = 1`` at ``t^2 = 1/2``).
    """
    outcome = Outcome.parse(outcome)
    if not 0.0 <= J_abs <= 1.0 + 1e-12:
        raise ValueError(f"|J| must lie in [0, 1], got {J_abs}")
    J_abs = min(float(J_abs), 1.0)
    if outcome is Outcome.OUT11:
        if probabilities_from_overlap(J_abs, bs).p11 <= DEGENERATE_PROB:
            raise DegenerateOutcomeError("P_11 vanishes at |J| = 1 with a balanced splitter")
        plus, minus = _eq6a(J_abs, path_indistinguishability(bs))
    else:
        d = 2.0 * (1.0 + J_abs * J_abs)
        plus, minus = (1.0 + J_abs) ** 2 / d, (1.0 - J_abs) ** 2 / d
    entropy = _entropy_from_sq([plus, minus])
    return EntanglementReport(outcome, entropy, plus, minus, J_abs, bs.t_sq)


def _entropy_from_sq(lam_sq) -> float:
    s = 0.0
    for p in lam_sq:
        if p > 0.0:
            s -= p * math.log2(p)
    return max(s, 0.0)


def von_neumann_entropy(coefficients: Sequence[float]) -> float:
    """``-sum lambda^2 log2 lambda^2`` for Schmidt coefficients ``lambda`` (not squared).

    Raises
    ------
    NormalizationError
        If ``sum lambda^2`` differs from 1 by more than ``1e-6``.
    """
    lam = np.abs(np.asarray(coefficients, dtype=float))
    total = float(np.sum(lam**2))
    if abs(total - 1.0) > ENTROPY_NORM_TOL:
        raise NormalizationError(f"sum of squared Schmidt coefficients is {total:.9g}, expected 1")
    return _entropy_from_sq(lam**2)


def _weighted_svd(m: np.ndarray, rank_guess: int = 8, seed: int = 0):
    """Thin SVD of ``m``, fast path for numerically low-rank matrices.

    A randomized range finder is tried first; if the captured subspace misses
    more than a ``1e-12`` fraction of the Frobenius norm, fall back to a full
    LAPACK SVD.
    """
    n = min(m.shape)
    if n > 4 * rank_guess:
        rng = np.random.default_rng(seed)
        probe = rng.standard_normal((m.shape[1], rank_guess)) + 1j * rng.standard_normal((m.shape[1], rank_guess))
        q, _ = np.linalg.qr(m @ probe)
        small = q.conj().T @ m
        resid = np.linalg.norm(m - q @ small)
        if resid <= 1e-12 * np.linalg.norm(m):
            u_s, s, vh = np.linalg.svd(small, full_matrices=False)
            return q @ u_s, s, vh
    try:
        return scipy.linalg.svd(m, full_matrices=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ComputationError(f"SVD failed: {exc}") from exc


def schmidt_numeric(amp: TwoPhotonAmplitude, cutoff: float = SCHMIDT_CUTOFF) -> SchmidtDecomposition:
    """Schmidt decomposition of a discretized joint amplitude.

    The matrix is symmetrically weighted by the square roots of the trapezoid
    weights before the SVD, so singular values approximate the continuum
    Schmidt coefficients and the returned modes have unit quadrature norm.
    On interior points this is the usual ``values * dtau`` scaling.
    """
    grid = amp.grid
    sw = np.sqrt(grid.weights)
    u, s, vh = _weighted_svd(sw[:, None] * amp.values * sw[None, :])
    keep = s > cutoff
    coeffs = s[keep]
    modes_a, modes_b = [], []
    for k in np.flatnonzero(keep):
        a = u[:, k] / sw
        b = vh[k, :] / sw
        # fix the SVD phase freedom: largest entry of mode a is real positive
        top = np.argmax(np.abs(a))
        ph = a[top] / abs(a[top])
        a = a / ph
        a[top] = abs(a[top])  # drop the rounding residue in the imaginary part
        modes_a.append(Sampled(grid, a))
        modes_b.append(Sampled(grid, b * ph))
    return SchmidtDecomposition(coeffs, modes_a, modes_b, grid)


def mode_overlaps(decomp: SchmidtDecomposition, shapes: Iterable[TemporalShape], family: str = "a") -> np.ndarray:
    """Matrix ``<mode_k | f_j>`` between Schmidt modes and arbitrary shapes.

    Useful where the Schmidt basis differs from the input basis, e.g. the
    ``|2,0>`` component of orthogonal input photons: entangled in the
    Schmidt basis yet a plain product in the ``{f1, f2}`` basis.
    """
    modes = decomp.modes_a if family == "a" else decomp.modes_b
    grid = decomp.grid
    m = np.array([x.values for x in modes])
    f = np.array([sample(s, grid).values for s in shapes])
    return (np.conj(m) * grid.weights) @ f.T


@dataclass(frozen=True)
class SurfaceRow:
    J_abs: float
    t_sq: float
    outcome: Outcome
    entropy: float | None


def entropy_surface(J_values: Sequence[float], t_sq_values: Sequence[float], outcome) -> list[SurfaceRow]:
    """Analytic entropy on the product of ``J_values`` and ``t_sq_values``.

    Rows are ordered with ``J_abs`` outermost. Degenerate cells carry
    ``entropy=None``.
    """
    outcome = Outcome.parse(outcome)
    rows = []
    for j in J_values:
        for t2 in t_sq_values:
            try:
                s = schmidt_analytic(float(j), BeamSplitter.from_t_sq(float(t2)), outcome).entropy
            except DegenerateOutcomeError:
                s = None
            rows.append(SurfaceRow(float(j), float(t2), outcome, s))
    return rows


SURFACE_HEADER = ("J_abs", "t_sq", "outcome", "entropy")


def _fmt(x: float) -> str:
    return format(x, ".17g")


def write_surface_csv(rows: Iterable[SurfaceRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SURFACE_HEADER)
    for r in rows:
        w.writerow([_fmt(r.J_abs), _fmt(r.t_sq), r.outcome.value, "" if r.entropy is None else _fmt(r.entropy)])
