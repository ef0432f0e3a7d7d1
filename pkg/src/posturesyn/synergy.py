"""Non-negative factorization of activation matrices and model selection.

The activation matrix V (muscles x condition cells) is approximated as W @ C
with both factors non-negative: columns of W are synergy vectors, rows of C
their activation coefficients across cells. Reconstruction quality is scored
as the percentage of squared signal energy explained; the model order is the
smallest rank whose score clears the criterion.

Updates are the classical multiplicative rule for the Frobenius objective,
best-of-N random restarts, with a small epsilon guarding denominators. The
actual inner loop lives in :mod:`posturesyn.kernels` (compiled when
available, NumPy otherwise).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .types import Bin, Direction

DEFAULT_RESTARTS = 20
DEFAULT_MAX_ITER = 5000
DEFAULT_TOL = 1e-8
DENOM_EPS = 1e-12
SCAN_MAX = 10


@dataclass(frozen=True)
class SynergySet:
    """Result of one factorization: V ~ W @ C.

    W is (muscles, n) with each column scaled to max 1 (the scale is folded
    into C); ``error_history`` holds the per-iteration reconstruction error
    of the winning restart.
    """

    W: np.ndarray
    C: np.ndarray
    n_syn: int
    vaf_total: float
    vaf_per_muscle: np.ndarray
    rng_seed: int
    restarts: int
    best_restart: int
    error_history: np.ndarray = field(repr=False)
    vaf_scan: dict[int, float] = field(default_factory=dict)
    column_labels: tuple = ()


@dataclass(frozen=True)
class SelectionResult:
    n_syn: int
    vaf_scan: dict[int, float]
    saturated: bool
    synergy_set: SynergySet


@dataclass(frozen=True)
class MatchResult:
    """Optimal pairing of two synergy sets by cosine similarity."""

    pairs: tuple[tuple[int, int], ...]
    cosines: tuple[float, ...]
    unmatched_a: tuple[int, ...]
    unmatched_b: tuple[int, ...]

    @property
    def min_cosine(self) -> float:
        return min(self.cosines)


def vaf(V: np.ndarray, V_r: np.ndarray) -> float:
    """Explained squared energy, percent: (1 - sum((V-Vr)^2)/sum(V^2)) * 100."""
    V = np.asarray(V, dtype=float)
    V_r = np.asarray(V_r, dtype=float)
    if V.shape != V_r.shape:
        raise ValueError(f"shape mismatch: {V.shape} vs {V_r.shape}")
    denom = float((V**2).sum())
    if denom == 0.0:
        raise ValueError("V is identically zero")
    return (1.0 - float(((V - V_r) ** 2).sum()) / denom) * 100.0


def vaf_rows(V: np.ndarray, V_r: np.ndarray) -> np.ndarray:
    """Per-muscle explained energy; NaN for all-zero rows (undefined)."""
    V = np.asarray(V, dtype=float)
    V_r = np.asarray(V_r, dtype=float)
    denom = (V**2).sum(axis=1)
    num = ((V - V_r) ** 2).sum(axis=1)
    out = np.full(V.shape[0], np.nan)
    nz = denom > 0
    out[nz] = (1.0 - num[nz] / denom[nz]) * 100.0
    return out


def _check_input(V: np.ndarray, n: int) -> np.ndarray:
    V = np.ascontiguousarray(V, dtype=float)
    if V.ndim != 2:
        raise ValueError("V must be a 2-d matrix")
    if np.any(V < 0):
        raise ValueError("V contains negative entries")
    if not np.any(V > 0):
        raise ValueError("V is identically zero")
    if not 1 <= n <= min(V.shape):
        raise ValueError(f"n={n} outside 1..min{V.shape}")
    return V


def nmf_factorize(
    V: np.ndarray,
    n: int,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    column_labels: tuple = (),
) -> SynergySet:
    """Best-of-restarts multiplicative-update factorization at rank ``n``.

    Deterministic for a fixed (seed, restarts): restart initializations are
    drawn sequentially from one generator and ties in final error keep the
    earliest restart.
    """
    V = _check_input(V, n)
    m, p = V.shape
    rng = np.random.default_rng(seed)
    scale = np.sqrt(V.mean() / n)

    best: tuple[float, int, np.ndarray, np.ndarray, np.ndarray] | None = None
    for r in range(restarts):
        W0 = rng.random((m, n)) * scale + 1e-6
        H0 = rng.random((n, p)) * scale + 1e-6
        errs = kernels.mu_factorize(V, W0, H0, max_iter, tol, DENOM_EPS)
        final = float(errs[-1])
        if best is None or final < best[0]:
            best = (final, r, W0, H0, np.asarray(errs))

    _, best_r, W, C, errs = best
    # fold column scales of W into C so each synergy vector has max 1
    scales = W.max(axis=0)
    W = W.copy()
    C = C.copy()
    for i in range(n):
        if scales[i] > 0:
            W[:, i] /= scales[i]
            C[i, :] *= scales[i]

    V_r = W @ C
    return SynergySet(
        W=W,
        C=C,
        n_syn=n,
        vaf_total=vaf(V, V_r),
        vaf_per_muscle=vaf_rows(V, V_r),
        rng_seed=seed,
        restarts=restarts,
        best_restart=best_r,
        error_history=errs,
        column_labels=tuple(column_labels),
    )


def select_n_syn(
    V: np.ndarray,
    criterion_vaf: float = 90.0,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    column_labels: tuple = (),
) -> SelectionResult:
    """Scan ranks 1..10 and keep the least rank whose score clears the bar.

    If no rank qualifies the scan saturates: the result carries the largest
    scanned rank and ``saturated=True``.
    """
    V = _check_input(V, 1)
    n_max = min(SCAN_MAX, *V.shape)
    scan: dict[int, float] = {}
    sets: dict[int, SynergySet] = {}
    for n in range(1, n_max + 1):
        s = nmf_factorize(
            V, n, seed=seed, restarts=restarts, max_iter=max_iter, tol=tol,
            column_labels=column_labels,
        )
        scan[n] = s.vaf_total
        sets[n] = s

    chosen = next((n for n in sorted(scan) if scan[n] > criterion_vaf), None)
    saturated = chosen is None
    if saturated:
        chosen = n_max
    best = sets[chosen]
    best = SynergySet(
        W=best.W, C=best.C, n_syn=best.n_syn, vaf_total=best.vaf_total,
        vaf_per_muscle=best.vaf_per_muscle, rng_seed=best.rng_seed,
        restarts=best.restarts, best_restart=best.best_restart,
        error_history=best.error_history, vaf_scan=scan,
        column_labels=best.column_labels,
    )
    return SelectionResult(chosen, scan, saturated, best)


def per_synergy_vaf(V: np.ndarray, s: SynergySet, mode: str = "rank1") -> np.ndarray:
    """Score each component's contribution.

    ``rank1`` (default) scores component i by reconstructing V from that
    component alone; order-independent. ``marginal`` scores it as the drop in
    total score when the component is removed from the full reconstruction.
    """
    V = np.asarray(V, dtype=float)
    full = s.W @ s.C
    out = np.empty(s.n_syn)
    for i in range(s.n_syn):
        rank1 = np.outer(s.W[:, i], s.C[i, :])
        if mode == "rank1":
            out[i] = vaf(V, rank1)
        elif mode == "marginal":
            out[i] = vaf(V, full) - vaf(V, full - rank1)
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return out


@dataclass(frozen=True)
class TuningCurves:
    """Per-synergy activation grids: ``grids[i][b, d]`` = coefficient of
    synergy i in time bin b and perturbation direction d."""

    grids: np.ndarray  # (n_syn, n_bins, n_directions)
    bins: tuple[Bin, ...]
    directions: tuple[Direction, ...]


def tuning_curves(s: SynergySet, column_labels=None) -> TuningCurves:
    """Arrange coefficient rows as (bin x direction) grids.

    Labels may be (bin, direction) or (subject, bin, direction); with a
    subject level the coefficients are averaged across subjects per cell.
    """
    labels = tuple(column_labels if column_labels is not None else s.column_labels)
    if len(labels) != s.C.shape[1]:
        raise ValueError(
            f"{len(labels)} column labels for {s.C.shape[1]} coefficient columns"
        )
    normalized = [lab if len(lab) == 3 else (None, *lab) for lab in labels]
    bins = tuple(dict.fromkeys(b for (_, b, _) in normalized))
    directions = tuple(dict.fromkeys(d for (_, _, d) in normalized))
    grids = np.zeros((s.n_syn, len(bins), len(directions)))
    counts = np.zeros((len(bins), len(directions)), dtype=int)
    b_idx = {b: i for i, b in enumerate(bins)}
    d_idx = {d: i for i, d in enumerate(directions)}
    for col, (_, b, d) in enumerate(normalized):
        grids[:, b_idx[b], d_idx[d]] += s.C[:, col]
        counts[b_idx[b], d_idx[d]] += 1
    if np.any(counts == 0):
        raise ValueError("column labels do not fill the bin x direction grid")
    grids /= counts[None, :, :]
    return TuningCurves(grids=grids, bins=bins, directions=directions)


def _cosine_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(A, axis=0)
    nb = np.linalg.norm(B, axis=0)
    sim = A.T @ B
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = sim / np.outer(na, nb)
    return np.where(np.isfinite(sim), sim, 0.0)


def match_synergies(a: SynergySet, b: SynergySet) -> MatchResult:
    """Pair synergy vectors across two sets, maximizing total cosine.

    Exhaustive search over assignments of the smaller set into the larger
    (factorial in the smaller rank; fine for rank <= 10). Ties keep the
    lexicographically smallest assignment.
    """
    if a.W.shape[0] != b.W.shape[0]:
        raise ValueError(
            f"muscle-row mismatch: {a.W.shape[0]} vs {b.W.shape[0]}"
        )
    sim = _cosine_matrix(a.W, b.W)
    n_a, n_b = a.n_syn, b.n_syn
    k = min(n_a, n_b)
    swap = n_a > n_b
    if swap:
        sim = sim.T
        n_a, n_b = n_b, n_a

    best_total, best_assign = -np.inf, None
    for assign in itertools.permutations(range(n_b), k):
        total = sim[range(k), assign].sum()
        if total > best_total + 1e-15:
            best_total, best_assign = total, assign

    pairs, cosines = [], []
    for i, j in enumerate(best_assign):
        pair = (j, i) if swap else (i, j)
        pairs.append(pair)
        cosines.append(float(sim[i, j]))
    used_small = set(range(k))
    used_big = set(best_assign)
    unmatched_small = tuple(sorted(set(range(k)) - used_small))
    unmatched_big = tuple(sorted(set(range(n_b)) - used_big))
    if swap:
        unmatched_a, unmatched_b = unmatched_big, unmatched_small
    else:
        unmatched_a, unmatched_b = unmatched_small, unmatched_big
    return MatchResult(
        pairs=tuple(pairs),
        cosines=tuple(cosines),
        unmatched_a=unmatched_a,
        unmatched_b=unmatched_b,
    )


def _labels_to_json(labels) -> list:
    out = []
    for lab in labels:
        out.append([x.value if hasattr(x, "value") else x for x in lab])
    return out


def save_synergy_set(s: SynergySet, path: str | Path) -> None:
    """Serialize a synergy set (and its scan) to JSON."""
    payload = {
        "n_syn": s.n_syn,
        "W": s.W.tolist(),
        "C": s.C.tolist(),
        "vaf_total": s.vaf_total,
        "vaf_per_muscle": [None if np.isnan(v) else v for v in s.vaf_per_muscle],
        "vaf_scan": {str(k): v for k, v in sorted(s.vaf_scan.items())},
        "rng_seed": s.rng_seed,
        "restarts": s.restarts,
        "best_restart": s.best_restart,
        "column_labels": _labels_to_json(s.column_labels),
        "kernel_backend": kernels.BACKEND,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
