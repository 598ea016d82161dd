"""Feature extraction from processed sessions, with PCA and RBF kernel PCA.

Each session becomes a fixed 12-dim vector: per channel the steady-state
response level (mean over the last quarter of the exposure window), the
maximum rise rate, and the area under the response across the exposure
window.  Both reductions run on the self-contained Jacobi eigensolver.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .eigen import jacobi_eigh, orient_columns
from .preprocess import ProcessedSession
from .sensors import BASELINE_S, EXPOSURE_S, GasMixture

N_FEATURES = 12
FEATURE_NAMES = tuple(
    f"{kind}_{ch}" for ch in range(4) for kind in ("steady", "slope", "area")
)
FEATURES_HEADER = ",".join(
    [f"f{i + 1}" for i in range(N_FEATURES)]
    + ["label", "acetone_ppm", "ethanol_ppm", "methanol_ppm"]
)

EIGENVALUE_FLOOR = 1e-10


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray  # 12 entries, channel-major (steady, slope, area)
    label: int
    mixture: GasMixture | None


def extract_features(proc: ProcessedSession,
                     exposure_start_s: float = BASELINE_S,
                     exposure_end_s: float = BASELINE_S + EXPOSURE_S) -> FeatureVector:
    """Deterministic 12-dim summary of one processed session."""
    rate = proc.sample_rate_hz
    i0 = int(round(exposure_start_s * rate))
    i1 = int(round(exposure_end_s * rate))
    if proc.n < i1 or i1 - i0 < 2:
        raise ValueError(
            f"session has {proc.n} samples, exposure window needs {i1}")
    dt = 1.0 / rate
    tail = max(1, (i1 - i0) // 4)

    values = np.empty(N_FEATURES)
    for ch in range(4):
        window = proc.channels[i0:i1, ch]
        steady = float(window[-tail:].mean())
        slope = float(np.max(np.diff(window)) / dt)
        area = float(np.trapezoid(window, dx=dt))
        values[3 * ch:3 * ch + 3] = (steady, slope, area)
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite feature values")
    return FeatureVector(values=values, label=proc.label, mixture=proc.mixture)


def stack_features(fvs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """FeatureVector list -> (n x 12 matrix, labels, n x 3 ppm targets)."""
    x = np.array([fv.values for fv in fvs], dtype=float)
    y = np.array([fv.label for fv in fvs], dtype=np.int64)
    conc = np.array(
        [(fv.mixture or GasMixture()).as_tuple() for fv in fvs], dtype=float)
    return x, y, conc


# --- PCA ------------------------------------------------------------------

@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # orthonormal rows, eigenvalue-descending
    eigenvalues: np.ndarray
    retained_k: int


def pca_fit(x, variance_threshold: float = 0.95) -> PcaModel:
    """Eigendecomposition of the population covariance of mean-centred data."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise ValueError("PCA needs at least 2 samples")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / n
    w, v = jacobi_eigh(cov)
    w = np.maximum(w, 0.0)
    v = orient_columns(v)
    total = float(w.sum())
    if total <= 0.0:
        retained = 1
    else:
        cum = np.cumsum(w) / total
        retained = int(np.searchsorted(cum, variance_threshold - 1e-12) + 1)
        retained = min(retained, w.size)
    return PcaModel(mean=mean, components=v.T, eigenvalues=w, retained_k=retained)


def pca_transform(model: PcaModel, x, k: int | None = None) -> np.ndarray:
    k = model.retained_k if k is None else k
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return (x - model.mean) @ model.components[:k].T


def pca_inverse_transform(model: PcaModel, scores) -> np.ndarray:
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    k = scores.shape[1]
    return scores @ model.components[:k] + model.mean


# --- kernel PCA -----------------------------------------------------------

@dataclass(frozen=True)
class KpcaModel:
    x_train: np.ndarray
    gamma: float
    alphas: np.ndarray        # centred-Gram eigenvectors scaled by 1/sqrt(eig)
    eigenvalues: np.ndarray   # retained, descending, above the numeric floor
    train_row_means: np.ndarray
    train_total_mean: float
    retained_k: int


def pairwise_sq_dists(a, b) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    d = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    return np.maximum(d, 0.0)


def default_gamma(x) -> float:
    """1 / (d * median pairwise squared distance), guarding degenerate data."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = x.shape[1]
    sq = pairwise_sq_dists(x, x)
    iu = np.triu_indices(sq.shape[0], k=1)
    med = float(np.median(sq[iu])) if iu[0].size else 0.0
    if med <= 0.0:
        return 1.0 / d
    return 1.0 / (d * med)


def rbf_kernel(a, b, gamma: float) -> np.ndarray:
    return np.exp(-gamma * pairwise_sq_dists(a, b))


def kpca_fit(x, gamma: float | None = None,
             variance_threshold: float = 0.95) -> KpcaModel:
    """RBF kernel PCA: eigendecomposition of the double-centred Gram matrix."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[0]
    if n < 2:
        raise ValueError("KPCA needs at least 2 samples")
    if gamma is None:
        gamma = default_gamma(x)
    if gamma <= 0:
        raise ValueError("gamma must be > 0")

    k = rbf_kernel(x, x, gamma)
    row_means = k.mean(axis=1)
    total_mean = float(k.mean())
    kc = k - row_means[:, None] - row_means[None, :] + total_mean

    w, v = jacobi_eigh(kc)
    v = orient_columns(v)
    floor = EIGENVALUE_FLOOR * max(float(w[0]), 0.0)
    keep = w > max(floor, 0.0)
    w, v = w[keep], v[:, keep]
    if w.size == 0:
        raise ValueError("centred Gram matrix has no positive eigenvalues")

    total = float(w.sum())
    cum = np.cumsum(w) / total
    retained = int(np.searchsorted(cum, variance_threshold - 1e-12) + 1)
    retained = min(retained, w.size)

    alphas = v / np.sqrt(w)[None, :]
    return KpcaModel(x_train=x.copy(), gamma=float(gamma), alphas=alphas,
                     eigenvalues=w, train_row_means=row_means,
                     train_total_mean=total_mean, retained_k=retained)


def kpca_transform(model: KpcaModel, x, k: int | None = None) -> np.ndarray:
    """Project new points with the centred out-of-sample kernel rows."""
    k_keep = model.retained_k if k is None else k
    kt = rbf_kernel(x, model.x_train, model.gamma)
    ktc = (kt
           - kt.mean(axis=1)[:, None]
           - model.train_row_means[None, :]
           + model.train_total_mean)
    return ktc @ model.alphas[:, :k_keep]


# --- feature CSV ----------------------------------------------------------

def write_features_csv(path, x, y, conc) -> None:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != N_FEATURES:
        raise ValueError(f"feature matrix must have {N_FEATURES} columns")
    conc = np.atleast_2d(np.asarray(conc, dtype=float))
    lines = [FEATURES_HEADER]
    for i in range(x.shape[0]):
        feats = ",".join(repr(float(v)) for v in x[i])
        c = [repr(float(v)) for v in conc[i]]
        lines.append(f"{feats},{int(y[i])},{c[0]},{c[1]},{c[2]}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_features_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line == FEATURES_HEADER:
            continue
        fields = line.split(",")
        if len(fields) != N_FEATURES + 4:
            raise ValueError(f"bad features row: {line!r}")
        rows.append([float(v) for v in fields])
    if not rows:
        raise ValueError(f"{path} contains no feature rows")
    m = np.array(rows, dtype=float)
    return m[:, :N_FEATURES], m[:, N_FEATURES].astype(np.int64), m[:, N_FEATURES + 1:]
