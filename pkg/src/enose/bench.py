"""End-to-end experiment harness over the built-in mixture tables.

Each experiment simulates labeled sessions for every mixture row, pushes
them through the wire-format ingest path, preprocessing, feature
extraction and PCA/KPCA reduction, then trains a one-vs-one SVM (or an
MLP for concentration regression) and scores a stratified held-out
split with exactly the table's train/test counts.

The base mixture ratios of every table are all acetone-dominant, so a
classifier would see a single class; every built-in table therefore
also carries the role-swapped (binary) or role-rotated (ternary)
counterpart of each base row, labeled by its own dominant gas.
Mixtures with tied concentrations keep the earlier gas in (acetone,
ethanol, methanol) order as their label.
"""

from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .acquisition import Session, frame_lines, parse_stream
from .features import (extract_features, kpca_fit, kpca_transform,
                       pca_fit, pca_transform, stack_features)
from .mlp import MlpConfig, evaluate_regression, mlp_forward, mlp_train
from .preprocess import FilterConfig, fit_standardizer, process_session
from .report import (RegressionReport, RunReport, classification_metrics)
from .sensors import (DEFAULT_DRIFT_RATE, DEFAULT_NOISE_SIGMA, GasMixture,
                      SAMPLE_RATE_HZ, default_sensor_array, dominant_gas_label,
                      session_seed, simulate_session, standard_protocol)
from .svm import SvmParams, svm_predict, svm_train_multiclass

log = logging.getLogger("enose.bench")


class StageError(RuntimeError):
    """Pipeline failure tagged with the stage it happened in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[stage={stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class ExperimentTable:
    id: str
    rows: tuple[GasMixture, ...]
    n_train: int
    n_test: int
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.rows:
            raise ValueError("experiment table has no rows")
        if self.n_train < 0 or self.n_test < 1:
            raise ValueError("bad split sizes")

    @property
    def n_total(self) -> int:
        return self.n_train + self.n_test


def _mirror_binary(pairs, gas_b: str) -> tuple[GasMixture, ...]:
    """Base (acetone, other) rows plus their role-swapped counterparts."""
    def mix(a: float, b: float) -> GasMixture:
        kw = {"acetone_ppm": a, f"{gas_b}_ppm": b}
        return GasMixture(**kw)

    rows = [mix(a, b) for a, b in pairs]
    rows += [mix(b, a) for a, b in pairs]
    return tuple(rows)


def _rotate_ternary(triples) -> tuple[GasMixture, ...]:
    """Base rows plus both cyclic role rotations of each."""
    rows = [GasMixture(a, e, m) for a, e, m in triples]
    rows += [GasMixture(m, a, e) for a, e, m in triples]   # ethanol-dominant
    rows += [GasMixture(e, m, a) for a, e, m in triples]   # methanol-dominant
    return tuple(rows)


_BINARY_PAIRS = (
    (100.0, 0.0), (99.0, 1.0), (90.0, 10.0), (50.0, 50.0),
    (50.0, 0.0), (49.5, 0.5), (45.0, 5.0), (25.0, 25.0),
)

_TERNARY_TRIPLES = (
    (200.0, 0.0, 0.0), (198.0, 1.0, 1.0), (180.0, 10.0, 10.0),
    (100.0, 50.0, 50.0), (100.0, 0.0, 0.0), (98.0, 0.5, 0.5),
    (90.0, 5.0, 5.0), (50.0, 25.0, 25.0),
)

_MIRROR_NOTE = ("rows 8+ are role-swapped counterparts of the base mixtures "
                "so both classes are populated")
_ROTATE_NOTE = ("rows 8+ are cyclic role rotations of the base mixtures "
                "so all three classes are populated")
_ODD_ROW_NOTE = ("row 98ppm/0.5ppm/0.5ppm kept as-is although its total "
                 "of 99 breaks the neighbouring 100-step pattern")

TABLES: dict[str, ExperimentTable] = {
    "binary_ethanol": ExperimentTable(
        id="binary_ethanol",
        rows=_mirror_binary(_BINARY_PAIRS, "ethanol"),
        n_train=600, n_test=80,
        notes=(_MIRROR_NOTE,),
    ),
    "binary_methanol": ExperimentTable(
        id="binary_methanol",
        rows=_mirror_binary(_BINARY_PAIRS, "methanol"),
        n_train=700, n_test=100,
        notes=(_MIRROR_NOTE,),
    ),
    "ternary": ExperimentTable(
        id="ternary",
        rows=_rotate_ternary(_TERNARY_TRIPLES),
        n_train=550, n_test=50,
        notes=(_ROTATE_NOTE, _ODD_ROW_NOTE),
    ),
}


def get_table(table_id: str) -> ExperimentTable:
    key = table_id.replace("-", "_")
    if key not in TABLES:
        raise KeyError(f"unknown table {table_id!r}; "
                       f"choose from {sorted(TABLES)}")
    return TABLES[key]


@dataclass(frozen=True)
class PipelineConfig:
    features: str = "pca"            # "pca" or "kpca"
    variance_threshold: float = 0.95
    svm_c: float = 10.0
    svm_kernel: str = "rbf"
    svm_gamma: float | None = None   # None: data-driven heuristic
    filter: FilterConfig = field(default_factory=FilterConfig)
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    drift_rate: float = DEFAULT_DRIFT_RATE
    tau_rise: float | None = None    # None: per-sensor defaults
    tau_fall: float | None = None
    sample_rate_hz: float = SAMPLE_RATE_HZ
    mlp_hidden: tuple[int, ...] = (16,)
    mlp_lr: float = 0.05
    mlp_epochs: int = 150

    def __post_init__(self):
        if self.features not in ("pca", "kpca"):
            raise ValueError("features must be 'pca' or 'kpca'")

    def echo(self) -> tuple[tuple[str, str], ...]:
        pairs = [
            ("features", self.features),
            ("variance_threshold", repr(self.variance_threshold)),
            ("svm_c", repr(self.svm_c)),
            ("svm_kernel", self.svm_kernel),
            ("svm_gamma", "auto" if self.svm_gamma is None else repr(self.svm_gamma)),
            ("window_m", str(self.filter.window_m)),
            ("baseline_degree", str(self.filter.baseline_degree)),
            ("noise_sigma", repr(self.noise_sigma)),
            ("drift_rate", repr(self.drift_rate)),
            ("tau_rise", "default" if self.tau_rise is None else repr(self.tau_rise)),
            ("tau_fall", "default" if self.tau_fall is None else repr(self.tau_fall)),
            ("sample_rate_hz", repr(self.sample_rate_hz)),
            ("mlp_hidden", " ".join(str(h) for h in self.mlp_hidden)),
            ("mlp_lr", repr(self.mlp_lr)),
            ("mlp_epochs", str(self.mlp_epochs)),
        ]
        return tuple(pairs)


def row_counts(total: int, n_rows: int) -> list[int]:
    """Split `total` sessions over rows; the remainder goes round-robin."""
    base, rem = divmod(total, n_rows)
    return [base + (1 if i < rem else 0) for i in range(n_rows)]


def sensor_array_for(config: PipelineConfig):
    """The default array with the config's noise/drift/time-constant overrides."""
    specs = default_sensor_array(noise_sigma=config.noise_sigma,
                                 drift_rate=config.drift_rate)
    overrides = {}
    if config.tau_rise is not None:
        overrides["tau_rise"] = config.tau_rise
    if config.tau_fall is not None:
        overrides["tau_fall"] = config.tau_fall
    if overrides:
        specs = tuple(dataclasses.replace(s, **overrides) for s in specs)
    return specs


def build_sessions(table: ExperimentTable, config: PipelineConfig,
                   seed: int) -> list[Session]:
    specs = sensor_array_for(config)
    counts = row_counts(table.n_total, len(table.rows))
    sessions: list[Session] = []
    for row_idx, (mix, count) in enumerate(zip(table.rows, counts)):
        proto = standard_protocol(mix, config.sample_rate_hz)
        label = dominant_gas_label(mix)
        for rep in range(count):
            frames = simulate_session(specs, proto,
                                      session_seed(seed, row_idx, rep))
            sessions.append(Session(frames=frames, label=label, mixture=mix,
                                    sample_rate_hz=config.sample_rate_hz))
    return sessions


def reingest(sessions: list[Session]) -> list[Session]:
    """Round-trip every session through the wire format parser."""
    return [
        parse_stream(frame_lines(s.frames), label=s.label, mixture=s.mixture,
                     sample_rate_hz=s.sample_rate_hz)
        for s in sessions
    ]


def stratified_split(y, n_train: int, n_test: int, seed: int):
    """Disjoint train/test indices with exact totals, stratified by class.

    Per-class test counts follow largest-remainder apportionment of the
    class frequencies, so the test set mirrors the class balance.
    """
    y = np.asarray(y, dtype=np.int64)
    n = y.size
    if n != n_train + n_test:
        raise ValueError(f"split {n_train}+{n_test} does not cover {n} samples")
    classes = np.unique(y)
    counts = {c: int((y == c).sum()) for c in classes}
    quotas = {c: n_test * counts[c] / n for c in classes}
    test_counts = {c: int(quotas[c]) for c in classes}
    short = n_test - sum(test_counts.values())
    for c in sorted(classes, key=lambda c: (quotas[c] - int(quotas[c]), -counts[c]),
                    reverse=True)[:short]:
        test_counts[c] += 1

    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xC0FFEE)))
    train_idx, test_idx = [], []
    for c in classes:
        members = np.flatnonzero(y == c)
        members = members[rng.permutation(members.size)]
        k = test_counts[c]
        test_idx.extend(members[:k])
        train_idx.extend(members[k:])
    train = np.sort(np.array(train_idx))
    test = np.sort(np.array(test_idx))
    if test.size != n_test or train.size != n_train:
        raise ValueError("per-class apportionment cannot hit the exact split")
    return train, test


def _stage(name: str, fn, *args, **kwargs):
    log.info("stage %s", name)
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


@dataclass(frozen=True)
class FeatureSplit:
    """Front half of an experiment: features, split and reduced matrices."""

    x: np.ndarray            # n x 12 raw feature matrix
    y: np.ndarray            # class labels
    conc: np.ndarray         # n x 3 ppm targets
    train_idx: np.ndarray
    test_idx: np.ndarray
    z_train: np.ndarray      # reduced training scores
    z_test: np.ndarray


def prepare_features(table: ExperimentTable, config: PipelineConfig,
                     seed: int) -> FeatureSplit:
    """Run generate -> ingest -> preprocess -> extract -> split -> reduce."""
    sessions = _stage("generate", build_sessions, table, config, seed)
    sessions = _stage("ingest", reingest, sessions)
    processed = _stage("preprocess",
                       lambda ss: [process_session(s, config.filter) for s in ss],
                       sessions)
    fvs = _stage("extract", lambda ps: [extract_features(p) for p in ps], processed)
    x, y, conc = stack_features(fvs)

    train_idx, test_idx = _stage("split", stratified_split, y,
                                 table.n_train, table.n_test, seed)
    std = _stage("standardize", fit_standardizer, x[train_idx])
    xs_train = std.transform(x[train_idx])
    xs_test = std.transform(x[test_idx])

    def reduce():
        if config.features == "pca":
            model = pca_fit(xs_train, config.variance_threshold)
            return pca_transform(model, xs_train), pca_transform(model, xs_test)
        model = kpca_fit(xs_train, variance_threshold=config.variance_threshold)
        return kpca_transform(model, xs_train), kpca_transform(model, xs_test)

    z_train, z_test = _stage("reduce", reduce)
    return FeatureSplit(x=x, y=y, conc=conc, train_idx=train_idx,
                        test_idx=test_idx, z_train=z_train, z_test=z_test)


def run_experiment(table_id: str | ExperimentTable,
                   config: PipelineConfig = PipelineConfig(),
                   seed: int = 0,
                   prepared: FeatureSplit | None = None) -> RunReport:
    """Full classification experiment; deterministic for a fixed seed."""
    t0 = time.perf_counter()
    table = get_table(table_id) if isinstance(table_id, str) else table_id
    fs = prepared if prepared is not None else prepare_features(table, config, seed)
    y, train_idx, test_idx = fs.y, fs.train_idx, fs.test_idx
    z_train, z_test = fs.z_train, fs.z_test

    params = SvmParams(c_penalty=config.svm_c, kernel=config.svm_kernel,
                       gamma=config.svm_gamma)
    model = _stage("train", svm_train_multiclass, z_train, y[train_idx], params)
    y_pred = _stage("score", svm_predict, model, z_test)

    y_test = y[test_idx]
    confusion, accuracy, precision, recall = classification_metrics(
        y_test, y_pred, model.classes)
    scores_2d = z_test[:, :2] if z_test.shape[1] >= 2 else np.column_stack(
        [z_test[:, 0], np.zeros(z_test.shape[0])])
    return RunReport(
        table_id=table.id, seed=seed, classes=model.classes,
        confusion=confusion, accuracy=accuracy,
        precision=precision, recall=recall,
        y_true=y_test, y_pred=y_pred, scores_2d=scores_2d,
        config_echo=(("n_train", str(table.n_train)),
                     ("n_test", str(table.n_test))) + config.echo(),
        notes=table.notes,
        wall_time_s=time.perf_counter() - t0,
    )


def run_regression_experiment(table_id: str | ExperimentTable,
                              config: PipelineConfig = PipelineConfig(),
                              seed: int = 0,
                              prepared: FeatureSplit | None = None) -> RegressionReport:
    """Same pipeline, but an MLP predicting the acetone concentration."""
    t0 = time.perf_counter()
    table = get_table(table_id) if isinstance(table_id, str) else table_id
    fs = prepared if prepared is not None else prepare_features(table, config, seed)
    train_idx, test_idx = fs.train_idx, fs.test_idx
    z_train, z_test = fs.z_train, fs.z_test

    acetone = fs.conc[:, 0]
    mlp_config = MlpConfig(input_dim=z_train.shape[1],
                           hidden_layers=config.mlp_hidden,
                           lr=config.mlp_lr, epochs=config.mlp_epochs, seed=seed)
    model = _stage("train", mlp_train, z_train, acetone[train_idx], mlp_config)
    preds = _stage("score", mlp_forward, model, z_test)
    metrics = evaluate_regression(model, z_test, acetone[test_idx])

    return RegressionReport(
        table_id=table.id, seed=seed,
        rmse_ppm=metrics["rmse_ppm"], mae_ppm=metrics["mae_ppm"], r2=metrics["r2"],
        y_true=acetone[test_idx], y_pred=preds,
        loss_trace=model.loss_trace,
        config_echo=(("n_train", str(table.n_train)),
                     ("n_test", str(table.n_test))) + config.echo(),
        notes=table.notes,
        wall_time_s=time.perf_counter() - t0,
    )
