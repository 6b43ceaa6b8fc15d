"""Recurrence quantification for binned LSA-count series.

Everything needed to turn a scalar count series into recurrence-based
complexity measures: z-normalization, time-delay embedding, recurrence
matrix construction, diagonal / vertical / white-vertical line statistics,
and the estimators used to choose embedding parameters (binned mutual
information for the delay, false nearest neighbors for the dimension,
phase-space diameter for sanity-checking the threshold).

All functions are pure; nothing here holds shared mutable state, so the
module is safe to call from worker threads.

Conventions (documented so results are comparable across tools):

* distances are compared against the threshold inclusively,
  ``R[i, j] = 1`` when ``dist <= epsilon``;
* diagonal statistics exclude the band ``|i - j| < max(theiler, 1)``,
  so the line of identity is never counted;
* vertical runs are taken over the full matrix; white-vertical runs of
  zeros that touch the top or bottom border are discarded because their
  true length is censored;
* entropies use the natural logarithm and are normalized over the lines
  that meet the relevant minimum length;
* any measure whose denominator is empty is defined as 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial.distance import cdist

MEASURE_NAMES = ("rr", "det", "l_max", "l_mean", "l_entr", "tt", "v_entr", "t2", "w_entr")

_NORM_METRICS = {"euclidean": "euclidean", "maximum": "chebyshev"}


class SeriesTooShortError(ValueError):
    """Series cannot be embedded with the requested (tau, m)."""


@dataclass(frozen=True)
class EmbedParams:
    """Embedding and recurrence parameters for one analysis.

    tau and m follow the usual delay-embedding meaning; epsilon is the
    recurrence threshold in z-normalized units.  theiler is the half-width
    of the diagonal band excluded from diagonal line statistics (the line
    of identity is excluded even when theiler is 0).
    """

    tau: int = 1
    m: int = 2
    epsilon: float = 0.2
    norm: str = "euclidean"
    theiler: int = 1
    l_min: int = 2
    v_min: int = 2

    def __post_init__(self):
        if self.tau < 1 or self.m < 1:
            raise ValueError("tau and m must be positive integers")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.norm not in _NORM_METRICS:
            raise ValueError(f"unknown norm {self.norm!r}; use 'euclidean' or 'maximum'")
        if self.theiler < 0:
            raise ValueError("theiler must be >= 0")
        if self.l_min < 2 or self.v_min < 2:
            raise ValueError("l_min and v_min must be >= 2")

    def min_series_length(self) -> int:
        return (self.m - 1) * self.tau + 2

    def n_points(self, n_samples: int) -> int:
        return n_samples - (self.m - 1) * self.tau


@dataclass(frozen=True)
class RqaMeasures:
    """The nine per-window recurrence measures, in CSV column order."""

    rr: float
    det: float
    l_max: float
    l_mean: float
    l_entr: float
    tt: float
    v_entr: float
    t2: float
    w_entr: float

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in MEASURE_NAMES)

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in MEASURE_NAMES}


@dataclass
class LineHistograms:
    """Length -> multiplicity maps for the three line families."""

    diagonal: dict[int, int] = field(default_factory=dict)
    vertical: dict[int, int] = field(default_factory=dict)
    white_vertical: dict[int, int] = field(default_factory=dict)


def znormalize(values) -> tuple[np.ndarray, bool]:
    """Shift to zero mean and scale to unit population standard deviation.

    Returns ``(normalized, degenerate)``; a zero-variance input maps to an
    all-zero vector with ``degenerate=True`` instead of faulting, which is
    what quiet OSPF windows need.  The input is pre-centered on its first
    element so that adding an integer constant to an integer-valued series
    leaves the output bit-identical.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("znormalize expects a non-empty 1-D series")
    y = x - x[0]
    centered = y - y.mean()
    sd = math.sqrt(float((centered * centered).mean()))
    if sd == 0.0:
        return np.zeros_like(x), True
    return centered / sd, False


def embed(values, tau: int, m: int) -> np.ndarray:
    """Time-delay embedding into m-dimensional points.

    Parameters
    ----------
    values : 1-D array
        Scalar series of length ``n_s``.
    tau : int
        Delay in samples.
    m : int
        Embedding dimension.

    Returns
    -------
    ndarray of shape ``(n_s - (m - 1) * tau, m)`` where row ``i`` is
    ``(x[i], x[i + tau], ..., x[i + (m - 1) * tau])``.

    Raises
    ------
    SeriesTooShortError
        If fewer than two embedded points would remain.
    """
    x = np.asarray(values, dtype=float)
    if tau < 1 or m < 1:
        raise ValueError("tau and m must be positive integers")
    n = x.size - (m - 1) * tau
    if n < 2:
        need = (m - 1) * tau + 2
        raise SeriesTooShortError(
            f"series of length {x.size} too short for tau={tau}, m={m}; "
            f"need at least {need} samples"
        )
    return np.stack([x[k * tau : k * tau + n] for k in range(m)], axis=1)


def recurrence_matrix(traj: np.ndarray, epsilon: float, norm: str = "euclidean") -> np.ndarray:
    """Boolean recurrence matrix of an embedded trajectory.

    ``R[i, j] = 1`` iff the distance between points i and j is at most
    epsilon (boundary inclusive, i.e. the Heaviside step maps 0 to 1).
    The result is symmetric with an all-ones main diagonal.
    """
    pts = np.asarray(traj, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] < 2:
        raise ValueError("need at least 2 trajectory points")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if norm not in _NORM_METRICS:
        raise ValueError(f"unknown norm {norm!r}; use 'euclidean' or 'maximum'")
    dist = cdist(pts, pts, metric=_NORM_METRICS[norm])
    return dist <= epsilon


def phase_space_diameter(traj: np.ndarray, norm: str = "euclidean") -> float:
    """Maximum pairwise distance of the trajectory, computed in blocks."""
    pts = np.asarray(traj, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] < 2:
        raise ValueError("need at least 2 trajectory points")
    metric = _NORM_METRICS[norm]
    best = 0.0
    step = 512
    for i in range(0, pts.shape[0], step):
        block = cdist(pts[i : i + step], pts, metric=metric)
        best = max(best, float(block.max()))
    return best


# --- line statistics -------------------------------------------------------
#
# Run lengths are extracted from a single gathered 1-D stream per line
# family, with -1 sentinels between diagonals/columns.  The gather indices
# depend only on (n, theiler), so they are built once and cached; the
# sliding-window detector reuses them for every window.


@lru_cache(maxsize=64)
def _gather_plan(n: int, theiler: int) -> tuple[np.ndarray, np.ndarray]:
    w = max(theiler, 1)
    sentinel = np.array([n * n], dtype=np.int64)  # index of the padded -1 slot
    diag_chunks: list[np.ndarray] = []
    for k in range(-(n - 1), n):
        if abs(k) < w:
            continue
        if k >= 0:
            idx = np.arange(n - k, dtype=np.int64) * (n + 1) + k
        else:
            idx = np.arange(n + k, dtype=np.int64) * (n + 1) - k * n
        diag_chunks.append(idx)
        diag_chunks.append(sentinel)
    diag_idx = np.concatenate(diag_chunks) if diag_chunks else sentinel.copy()

    col_chunks: list[np.ndarray] = []
    rows = np.arange(n, dtype=np.int64) * n
    for j in range(n):
        col_chunks.append(rows + j)
        col_chunks.append(sentinel)
    col_idx = np.concatenate(col_chunks)
    return diag_idx, col_idx


def _runs(stream: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Maximal runs of a sentinel-separated int8 stream: (values, lengths)."""
    change = np.flatnonzero(stream[1:] != stream[:-1]) + 1
    starts = np.concatenate(([0], change))
    lengths = np.diff(np.concatenate((starts, [stream.size])))
    return stream[starts], lengths


def _line_lengths(rm: np.ndarray, theiler: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Diagonal, vertical, and interior white-vertical run lengths of rm."""
    n = rm.shape[0]
    diag_idx, col_idx = _gather_plan(n, theiler)
    flat = np.empty(n * n + 1, dtype=np.int8)
    flat[: n * n] = rm.reshape(-1)
    flat[n * n] = -1

    dvals, dlens = _runs(flat[diag_idx])
    diag = dlens[dvals == 1]

    cvals, clens = _runs(flat[col_idx])
    vert = clens[cvals == 1]

    # White runs must be flanked by recurrence points on both sides; a run
    # next to a sentinel touches the matrix border and its length is censored.
    zero = cvals == 0
    if zero.any():
        left_ok = np.empty_like(zero)
        left_ok[0] = False
        left_ok[1:] = cvals[:-1] == 1
        right_ok = np.empty_like(zero)
        right_ok[-1] = False
        right_ok[:-1] = cvals[1:] == 1
        white = clens[zero & left_ok & right_ok]
    else:
        white = clens[:0]
    return diag, vert, white


def _entropy(lengths: np.ndarray) -> float:
    if lengths.size == 0:
        return 0.0
    counts = np.bincount(lengths)
    counts = counts[counts > 0]
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def line_histograms(rm: np.ndarray, theiler: int = 1) -> LineHistograms:
    """Histogram the three line families of a recurrence matrix.

    Diagonal runs exclude the band ``|i - j| < max(theiler, 1)``; white
    vertical runs touching the top/bottom border are dropped.
    """
    rm = np.asarray(rm, dtype=bool)
    diag, vert, white = _line_lengths(rm, theiler)

    def hist(lengths: np.ndarray) -> dict[int, int]:
        if lengths.size == 0:
            return {}
        uniq, counts = np.unique(lengths, return_counts=True)
        return {int(u): int(c) for u, c in zip(uniq, counts)}

    return LineHistograms(hist(diag), hist(vert), hist(white))


def _measures_from_lengths(
    rm_sum: int, n: int, diag: np.ndarray, vert: np.ndarray, white: np.ndarray,
    l_min: int, v_min: int,
) -> RqaMeasures:
    rr = rm_sum / float(n * n)

    total_diag_points = int(diag.sum())
    long_diag = diag[diag >= l_min]
    det = float(long_diag.sum()) / total_diag_points if total_diag_points else 0.0
    l_max = float(diag.max()) if diag.size else 0.0
    l_mean = float(long_diag.mean()) if long_diag.size else 0.0
    l_entr = _entropy(long_diag)

    long_vert = vert[vert >= v_min]
    tt = float(long_vert.mean()) if long_vert.size else 0.0
    v_entr = _entropy(long_vert)

    t2 = float(white.mean()) if white.size else 0.0
    w_entr = _entropy(white)

    return RqaMeasures(rr, det, l_max, l_mean, l_entr, tt, v_entr, t2, w_entr)


def rqa_measures(rm: np.ndarray, l_min: int = 2, v_min: int = 2, theiler: int = 1) -> RqaMeasures:
    """Compute the nine recurrence measures of a boolean matrix.

    Parameters
    ----------
    rm : (n, n) boolean array
        Recurrence matrix.
    l_min, v_min : int
        Minimum diagonal / vertical line lengths entering DET, L-MEAN,
        L-ENTR, TT and V-ENTR.  Both must be >= 2.
    theiler : int
        Diagonal exclusion half-width (the LOI is always excluded).

    Notes
    -----
    ``det`` is the fraction of counted diagonal-line points lying on lines
    of length >= l_min; ``t2`` and ``w_entr`` use every interior white run
    with no minimum length.  Empty denominators yield 0.
    """
    rm = np.asarray(rm, dtype=bool)
    if rm.ndim != 2 or rm.shape[0] != rm.shape[1]:
        raise ValueError("recurrence matrix must be square")
    if l_min < 2 or v_min < 2:
        raise ValueError("l_min and v_min must be >= 2")
    diag, vert, white = _line_lengths(rm, theiler)
    return _measures_from_lengths(int(rm.sum()), rm.shape[0], diag, vert, white, l_min, v_min)


def constant_window_measures(n_points: int) -> RqaMeasures:
    """Measure vector for a zero-variance window.

    A constant window produces the all-ones recurrence matrix, whose
    statistics have closed forms: every column is one vertical run of
    length n, there are no white runs, and the off-LOI diagonals have
    lengths 1..n-1 twice each.  ``det`` is reported as exactly 1 (the
    signal is perfectly deterministic); the raw all-ones matrix would give
    1 - 2/(n(n-1)), a finite-size artifact of the two corner diagonals.
    """
    n = n_points
    if n < 3:
        l_mean = 0.0
        l_entr = 0.0
        l_max = float(max(n - 1, 0))
    else:
        l_max = float(n - 1)
        l_mean = (n * (n - 1) / 2.0 - 1.0) / (n - 2)
        l_entr = math.log(n - 2)
    return RqaMeasures(
        rr=1.0, det=1.0, l_max=l_max, l_mean=l_mean, l_entr=l_entr,
        tt=float(n), v_entr=0.0, t2=0.0, w_entr=0.0,
    )


def measures_for_series(values, params: EmbedParams) -> tuple[RqaMeasures, bool]:
    """Z-normalize, embed, threshold and quantify one window of counts.

    Returns ``(measures, degenerate)``.  Degenerate (zero-variance)
    windows short-circuit to :func:`constant_window_measures` so quiet
    OSPF stretches never fault.
    """
    x = np.asarray(values, dtype=float)
    if x.size < params.min_series_length():
        raise SeriesTooShortError(
            f"window of {x.size} bins cannot be embedded with tau={params.tau}, "
            f"m={params.m}; need at least {params.min_series_length()}"
        )
    z, degenerate = znormalize(x)
    if degenerate:
        return constant_window_measures(params.n_points(x.size)), True
    traj = embed(z, params.tau, params.m)
    rm = recurrence_matrix(traj, params.epsilon, params.norm)
    return rqa_measures(rm, params.l_min, params.v_min, params.theiler), False


# --- embedding-parameter estimation ---------------------------------------


def mutual_information(values, tau_max: int, bins: int = 16) -> tuple[np.ndarray, bool]:
    """Binned mutual information of (x_t, x_{t+tau}) for tau = 1..tau_max.

    The joint histogram uses ``bins`` equal-width cells per axis spanning
    the [min, max] of the full series, and MI is in nats.  Returns
    ``(mi, degenerate)``; an all-equal series yields a zero vector with
    the degenerate flag set instead of an error.
    """
    x = np.asarray(values, dtype=float)
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if x.size <= tau_max + 1:
        raise SeriesTooShortError(
            f"series of length {x.size} too short for tau_max={tau_max}; "
            f"need more than {tau_max + 1} samples"
        )
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        return np.zeros(tau_max), True
    edges = np.linspace(lo, hi, bins + 1)
    mi = np.empty(tau_max)
    for tau in range(1, tau_max + 1):
        joint, _, _ = np.histogram2d(x[:-tau], x[tau:], bins=(edges, edges))
        pab = joint / joint.sum()
        pa = pab.sum(axis=1)
        pb = pab.sum(axis=0)
        nz = pab > 0
        ratio = pab[nz] / np.outer(pa, pb)[nz]
        mi[tau - 1] = max(float((pab[nz] * np.log(ratio)).sum()), 0.0)
    return mi, False


def estimate_delay(mi_curve) -> tuple[int, bool]:
    """First local minimum of an MI curve indexed tau = 1..len.

    MI(0) is treated as +inf and the final point is a boundary (it cannot
    be a minimum).  Returns ``(tau, fallback)`` where fallback means no
    interior minimum existed and tau = 1 was returned by convention.
    """
    mi = np.asarray(mi_curve, dtype=float)
    if mi.size == 0:
        raise ValueError("mi_curve must be non-empty")
    for t in range(1, mi.size):
        left = mi[t - 2] if t >= 2 else math.inf
        if mi[t - 1] < left and mi[t - 1] <= mi[t]:
            return t, False
    return 1, True


def false_nearest_neighbors(
    values, tau: int, m_max: int = 10, r_tol: float = 15.0, a_tol: float = 2.0
) -> np.ndarray:
    """Kennel-style false-nearest-neighbor fractions for m = 1..m_max.

    For each candidate dimension the nearest neighbor of every point
    (excluding itself) is found in the m-dimensional embedding; a pair is
    false when the extension coordinate grows the distance by more than
    ``r_tol`` times the m-dimensional distance, or the (m+1)-dimensional
    distance exceeds ``a_tol`` standard deviations of the series.  Pairs
    at zero m-dimensional distance are judged by the second criterion
    only; "zero" includes numerically-zero distances (below 1e-9 sigma),
    where the growth ratio would measure nothing but rounding noise.
    """
    x = np.asarray(values, dtype=float)
    if r_tol <= 0 or a_tol <= 0:
        raise ValueError("r_tol and a_tol must be > 0")
    if x.size - m_max * tau < 2:
        raise SeriesTooShortError(
            f"series of length {x.size} too short for FNN with tau={tau}, "
            f"m_max={m_max}; need at least {m_max * tau + 2} samples"
        )
    sd = float(x.std())
    fractions = np.empty(m_max)
    for m in range(1, m_max + 1):
        full = embed(x, tau, m + 1)
        base = full[:, :m]
        ext = full[:, m]
        nn = _nearest_neighbors(base)
        d_m = np.linalg.norm(base - base[nn], axis=1)
        extra = np.abs(ext - ext[nn])
        d_m1 = np.hypot(d_m, extra)
        crit1 = np.zeros(base.shape[0], dtype=bool)
        pos = d_m > 1e-9 * sd
        crit1[pos] = extra[pos] / d_m[pos] > r_tol
        crit2 = d_m1 > a_tol * sd
        fractions[m - 1] = float(np.mean(crit1 | crit2))
    return fractions


def _nearest_neighbors(points: np.ndarray) -> np.ndarray:
    """Index of each point's euclidean nearest neighbor, self excluded.

    Ties resolve to the lowest index, so results do not depend on any
    spatial-index implementation; count data is full of exact duplicates.
    """
    n = points.shape[0]
    nn = np.empty(n, dtype=np.int64)
    step = max(1, 2_000_000 // max(n, 1))
    for i in range(0, n, step):
        block = cdist(points[i : i + step], points)
        rows = np.arange(block.shape[0])
        block[rows, rows + i] = np.inf
        nn[i : i + step] = block.argmin(axis=1)
    return nn


def estimate_dimension(fnn, drop_threshold: float = 0.01) -> tuple[int, bool]:
    """Smallest m whose FNN fraction is a local minimum or under threshold.

    Returns ``(m, saturated)``; when neither condition occurs the last
    tested dimension is returned with the saturation flag set.
    """
    f = np.asarray(fnn, dtype=float)
    if f.size == 0:
        raise ValueError("fnn must be non-empty")
    if not 0.0 < drop_threshold < 1.0:
        raise ValueError("drop_threshold must be in (0, 1)")
    for m in range(1, f.size + 1):
        if f[m - 1] < drop_threshold:
            return m, False
        if 2 <= m <= f.size - 1 and f[m - 1] < f[m - 2] and f[m - 1] <= f[m]:
            return m, False
    return f.size, True
