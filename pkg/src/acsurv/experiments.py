"""Repeated-split evaluation protocol and report emission.

One repeat: stratified 90/10 outer split; feature pruning and the
imputation model are fit on the training fold only and applied to the
test fold; every configured algorithm is fit on the completed training
fold and scored on the completed test fold.  Calibration rows refit the
chosen algorithm on an inner 90/10 split of the training fold, fit one
Platt scaler per horizon on the inner validation part, and evaluate on
the untouched test fold.

Failures are per-cell: a model that blows up on one repeat leaves a gap
in that cell and the run keeps going.
"""

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import __version__
from .calibration import binarize_at_horizon, fit_platt
from .cox import CoxPH, PenalizedCox
from .ensemble import GradientBoostedCox, RandomSurvivalForest, predict_survival_any
from .errors import UndefinedMetricError
from .explain import TreeExplainer
from .impute import MiceImputer, drop_sparse_features, prune_correlated
from .metrics import (MetricValue, aggregate_ci, dynamic_auc, harrell_cindex,
                      integrated_brier, ipcw_cindex)
from .nonparametric import censoring_km, survival_target

PENALIZED_PRESETS = {
    "elastic": dict(alpha=3.4e-4, l1_ratio=1.0),
    "ridge": dict(alpha=2.24e-6, l1_ratio=1e-100),
    "lasso": dict(alpha=None, l1_ratio=0.9, alpha_min_ratio=0.01),
}

ALGORITHMS = ("coxph", "elastic", "ridge", "lasso", "gbm", "xgb", "rsf")

TABLE6_METRICS = ("cindex", "harrell", "auroc")
TABLE7_METRICS = ("dynamic_auroc", "ibs", "cindex", "harrell")


@dataclass(frozen=True)
class ExperimentConfig:
    algorithms: tuple = ("coxph", "xgb")
    n_repeats: int = 20
    train_fraction: float = 0.9
    inner_fraction: float = 0.9
    master_seed: int = 20
    horizons: tuple = (30, 91, 182, 365)
    cindex_estimator: str = "ipcw"      # fills the "C-index" column
    calibrate_algorithm: str = "xgb"
    table6_auc_horizon: float = 182.0
    sparse_cutoff: float = 0.75
    prune_threshold: float = 0.7
    mice_cycles: int = 10
    canary: bool = False
    model_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.train_fraction < 1 or not 0 < self.inner_fraction < 1:
            raise ValueError("split fractions must be in (0, 1)")
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be >= 1")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")
        if self.cindex_estimator not in ("ipcw", "harrell"):
            raise ValueError("cindex_estimator must be 'ipcw' or 'harrell'")
        if self.calibrate_algorithm not in self.algorithms:
            raise ValueError("calibrate_algorithm must be in algorithms")
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "horizons", tuple(float(h) for h in self.horizons))

    def to_dict(self):
        d = asdict(self)
        d["algorithms"] = list(self.algorithms)
        d["horizons"] = list(self.horizons)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["algorithms"] = tuple(d.get("algorithms", ("coxph", "xgb")))
        d["horizons"] = tuple(d.get("horizons", (30, 91, 182, 365)))
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @property
    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def build_model(name, overrides=None, random_state=None):
    params = dict(overrides or {})
    if name == "coxph":
        return CoxPH(**params)
    if name in PENALIZED_PRESETS:
        merged = {**PENALIZED_PRESETS[name], **params}
        return PenalizedCox(**merged)
    if name in ("gbm", "xgb"):
        return GradientBoostedCox(preset=name, random_state=random_state, **params)
    if name == "rsf":
        return RandomSurvivalForest(random_state=random_state, **params)
    raise ValueError(f"unknown algorithm {name!r}")


def data_hash(cohort):
    h = hashlib.sha256()
    vals = np.ascontiguousarray(np.nan_to_num(cohort.values, nan=-999.0))
    h.update(vals.tobytes())
    h.update(np.ascontiguousarray(cohort.time_days, dtype=np.int64).tobytes())
    h.update(np.ascontiguousarray(cohort.event, dtype=np.int64).tobytes())
    h.update("|".join(cohort.feature_names).encode())
    return h.hexdigest()[:16]


def stratified_split(event, fraction, rng):
    """Index split keeping the event fraction; returns (left, right)."""
    left, right = [], []
    for cls in (True, False):
        idx = np.flatnonzero(event == cls)
        idx = idx[rng.permutation(idx.size)]
        cut = int(round(idx.size * fraction))
        left.append(idx[:cut])
        right.append(idx[cut:])
    return np.sort(np.concatenate(left)), np.sort(np.concatenate(right))


@dataclass
class ExperimentReport:
    table6: dict            # algorithm -> metric -> MetricValue
    table7: dict            # horizon (str of float) -> metric -> MetricValue
    raw: dict               # per-repeat values, None where failed
    errors: list            # {repeat, algorithm, stage, error}
    canary: dict            # algorithm -> per-repeat importance summaries
    provenance: dict
    config: dict

    def to_dict(self):
        return {
            "schema_version": 1,
            "table6": {a: {m: v.to_dict() for m, v in row.items()}
                       for a, row in self.table6.items()},
            "table7": {h: {m: v.to_dict() for m, v in row.items()}
                       for h, row in self.table7.items()},
            "raw": self.raw,
            "errors": self.errors,
            "canary": self.canary,
            "provenance": self.provenance,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != 1:
            raise ValueError(f"unsupported report schema {d.get('schema_version')!r}")
        mv = MetricValue.from_dict
        return cls(
            table6={a: {m: mv(v) for m, v in row.items()}
                    for a, row in d["table6"].items()},
            table7={h: {m: mv(v) for m, v in row.items()}
                    for h, row in d["table7"].items()},
            raw=d["raw"],
            errors=d["errors"],
            canary=d["canary"],
            provenance=d["provenance"],
            config=d["config"],
        )


def _auto_tau(train_outcomes, test_outcomes):
    ev_te, tm_te = test_outcomes
    g = censoring_km(*train_outcomes)
    zeros = g.x[g.y <= 0]
    cap = float(zeros.min()) - 0.5 if zeros.size else np.inf
    if not ev_te.any():
        raise UndefinedMetricError("no events in test fold")
    return float(min(tm_te[ev_te].max(), cap))


def _risk_scores(model, X):
    return np.asarray(model.predict(X), dtype=float)


def _canary_importance(model, X_test, canary_idx):
    if not isinstance(model, GradientBoostedCox):
        return None
    counts = model.split_counts_
    explainer = TreeExplainer(model)
    phi = explainer.shap_values(X_test)
    return {
        "split_count": int(counts[canary_idx]),
        "mean_abs_shap": float(np.abs(phi[:, canary_idx]).mean()),
    }


def run_experiments(cohort, config):
    """Execute the repeated-split protocol and aggregate every cell."""
    event_all = cohort.event.astype(bool)
    time_all = cohort.time_days.astype(float)

    algs = list(config.algorithms)
    raw6 = {a: {m: [] for m in TABLE6_METRICS} for a in algs}
    raw7 = {f"{h:g}": {m: [] for m in TABLE7_METRICS} for h in config.horizons}
    errors = []
    canary_log = {a: [] for a in algs} if config.canary else {}

    repeat_seeds = np.random.SeedSequence(config.master_seed).spawn(config.n_repeats)
    for r, ss in enumerate(repeat_seeds):
        rng = np.random.default_rng(ss)
        tr_idx, te_idx = stratified_split(event_all, config.train_fraction, rng)
        fold = _prepare_fold(cohort, tr_idx, te_idx, config)
        model_seeds = {a: int(rng.integers(2**31)) for a in algs}

        ev_tr, tm_tr = event_all[tr_idx], time_all[tr_idx]
        ev_te, tm_te = event_all[te_idx], time_all[te_idx]
        y_tr = survival_target(ev_tr, tm_tr)
        g_train = censoring_km(ev_tr, tm_tr)

        fitted = {}
        for a in algs:
            Xtr, Xte = fold["train"], fold["test"]
            try:
                model = build_model(a, config.model_overrides.get(a),
                                    model_seeds[a])
                model.fit(Xtr, y_tr, feature_names=fold["features"])
                fitted[a] = model
            except Exception as exc:  # per-cell failure, run continues
                errors.append({"repeat": r, "algorithm": a, "stage": "fit",
                               "error": f"{type(exc).__name__}: {exc}"})
                for m in TABLE6_METRICS:
                    raw6[a][m].append(None)
                if config.canary:
                    canary_log[a].append(None)
                continue

            scores = _risk_scores(model, Xte)
            cells = {}
            try:
                if config.cindex_estimator == "ipcw":
                    tau = _auto_tau((ev_tr, tm_tr), (ev_te, tm_te))
                    cells["cindex"] = ipcw_cindex((ev_tr, tm_tr), scores,
                                                  (ev_te, tm_te), tau=tau)
                else:
                    cells["cindex"] = harrell_cindex(ev_te, tm_te, scores)
            except Exception as exc:
                cells["cindex"] = None
                errors.append({"repeat": r, "algorithm": a, "stage": "cindex",
                               "error": f"{type(exc).__name__}: {exc}"})
            try:
                cells["harrell"] = harrell_cindex(ev_te, tm_te, scores)
            except Exception as exc:
                cells["harrell"] = None
                errors.append({"repeat": r, "algorithm": a, "stage": "harrell",
                               "error": f"{type(exc).__name__}: {exc}"})
            try:
                cells["auroc"] = dynamic_auc(config.table6_auc_horizon, scores,
                                             (ev_te, tm_te), g_train)
            except Exception as exc:
                cells["auroc"] = None
                errors.append({"repeat": r, "algorithm": a, "stage": "auroc",
                               "error": f"{type(exc).__name__}: {exc}"})
            for m in TABLE6_METRICS:
                raw6[a][m].append(cells[m])
            if config.canary:
                canary_log[a].append(
                    _canary_importance(model, fold["test"], fold["canary_idx"])
                )

        _run_horizon_rows(config, fold, (ev_tr, tm_tr), (ev_te, tm_te),
                          g_train, rng, raw7, errors, r)

    table6 = {a: {m: aggregate_ci(raw6[a][m], name=m) for m in TABLE6_METRICS}
              for a in algs}
    table7 = {h: {m: aggregate_ci(raw7[h][m], name=m) for m in TABLE7_METRICS}
              for h in raw7}
    provenance = {
        "master_seed": config.master_seed,
        "config_hash": config.config_hash,
        "data_hash": data_hash(cohort),
        "n_repeats": config.n_repeats,
        "package_version": __version__,
    }
    return ExperimentReport(
        table6=table6,
        table7=table7,
        raw={"table6": raw6, "table7": raw7},
        errors=errors,
        canary=canary_log,
        provenance=provenance,
        config=config.to_dict(),
    )


def _prepare_fold(cohort, tr_idx, te_idx, config):
    """Train-fold-only pruning and imputation; returns completed matrices."""
    train_cohort = cohort.subset(tr_idx)
    train_cohort, _ = drop_sparse_features(train_cohort, config.sparse_cutoff)
    train_cohort, prune = prune_correlated(train_cohort, config.prune_threshold)
    features = list(train_cohort.feature_names)

    test_cohort = cohort.subset(te_idx).select_features(features)
    Xtr_raw = train_cohort.values
    Xte_raw = test_cohort.values

    if np.isnan(Xtr_raw).any() or np.isnan(Xte_raw).any():
        meta = train_cohort.feature_meta
        imputer = MiceImputer(cycles=config.mice_cycles,
                              random_state=config.master_seed)
        Xtr = imputer.fit_transform(Xtr_raw,
                                    ranges=[(m.lo, m.hi) for m in meta],
                                    feature_names=features)
        Xte = imputer.transform(Xte_raw)
    else:
        Xtr, Xte = Xtr_raw.copy(), Xte_raw.copy()

    canary_idx = None
    if config.canary:
        ev_te = cohort.event.astype(float)[te_idx]
        Xtr = np.column_stack([Xtr, np.zeros(Xtr.shape[0])])
        Xte = np.column_stack([Xte, ev_te])
        features = features + ["leak_canary"]
        canary_idx = len(features) - 1
    return {"train": Xtr, "test": Xte, "features": features,
            "prune": prune, "canary_idx": canary_idx}


def _run_horizon_rows(config, fold, train_out, test_out, g_train, rng,
                      raw7, errors, r):
    ev_tr, tm_tr = train_out
    ev_te, tm_te = test_out
    alg = config.calibrate_algorithm
    try:
        inner_tr, inner_val = stratified_split(ev_tr, config.inner_fraction, rng)
        Xtr = fold["train"]
        model = build_model(alg, config.model_overrides.get(alg),
                            int(rng.integers(2**31)))
        y_inner = survival_target(ev_tr[inner_tr], tm_tr[inner_tr])
        model.fit(Xtr[inner_tr], y_inner, feature_names=fold["features"])
        margins_val = _risk_scores(model, Xtr[inner_val])
        margins_te = _risk_scores(model, fold["test"])
    except Exception as exc:
        errors.append({"repeat": r, "algorithm": alg, "stage": "calibration_fit",
                       "error": f"{type(exc).__name__}: {exc}"})
        for h in raw7:
            for m in TABLE7_METRICS:
                raw7[h][m].append(None)
        return

    val_out = (ev_tr[inner_val], tm_tr[inner_val])
    for h in config.horizons:
        key = f"{h:g}"
        cells = dict.fromkeys(TABLE7_METRICS)
        try:
            labels, included = binarize_at_horizon(val_out, h)
            scaler = fit_platt(margins_val[included], labels[included],
                               horizon_days=h,
                               n_excluded=int((~included).sum()))
            p_te = scaler.predict(margins_te)
            cells["dynamic_auroc"] = dynamic_auc(h, margins_te,
                                                 (ev_te, tm_te), g_train)
            grid = np.linspace(max(1.0, h / 16.0), h, 16)
            curves = predict_survival_any(model, fold["test"], grid)
            cells["ibs"] = integrated_brier(grid, curves, (ev_te, tm_te), g_train)
            cells["cindex"] = ipcw_cindex((ev_tr, tm_tr), margins_te,
                                          (ev_te, tm_te), tau=h)
            cells["harrell"] = harrell_cindex(ev_te, tm_te, -p_te)
        except Exception as exc:
            errors.append({"repeat": r, "algorithm": alg,
                           "stage": f"horizon_{key}",
                           "error": f"{type(exc).__name__}: {exc}"})
        for m in TABLE7_METRICS:
            raw7[key][m].append(cells[m])


_T6_LABELS = {"cindex": "C-index", "harrell": "Harrell's C-index",
              "auroc": "AUROC"}
_T7_LABELS = {"dynamic_auroc": "Dynamic AUROC", "ibs": "IBS",
              "cindex": "C-index", "harrell": "Harrell's C-index"}
_HORIZON_NAMES = {30.0: "1 month", 91.0: "3 months", 182.0: "6 months",
                  365.0: "12 months"}


def export_report(report, fmt, path=None):
    """Render a report as json, csv, or markdown; optionally write it."""
    if fmt == "json":
        text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    elif fmt == "csv":
        text = _report_csv(report)
    elif fmt == "markdown":
        text = _report_markdown(report)
    else:
        raise ValueError(f"unknown format {fmt!r}; use json, csv, or markdown")
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _report_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["section", "row", "metric", "point", "ci_low",
                     "ci_high", "n_repeats"])
    for a, row in report.table6.items():
        for m, v in row.items():
            writer.writerow(["models", a, m, v.point, v.ci_low, v.ci_high,
                             v.n_repeats])
    for h, row in report.table7.items():
        for m, v in row.items():
            writer.writerow(["horizons", h, m, v.point, v.ci_low, v.ci_high,
                             v.n_repeats])
    return buf.getvalue()


def _markdown_table(headers, rows):
    out = ["| " + " | ".join(headers) + " |",
           "| " + " | ".join("---" for _ in headers) + " |"]
    for row in rows:
        out.append("| " + " | ".join(row) + " |")
    return "\n".join(out)


def _report_markdown(report):
    sections = []
    rows = []
    for a, row in sorted(report.table6.items(),
                         key=lambda kv: -kv[1]["cindex"].point
                         if np.isfinite(kv[1]["cindex"].point) else 1.0):
        rows.append([a] + [row[m].format() for m in TABLE6_METRICS])
    sections.append("## Model discrimination\n\n" + _markdown_table(
        ["Model"] + [_T6_LABELS[m] for m in TABLE6_METRICS], rows))

    rows = []
    for h, row in sorted(report.table7.items(), key=lambda kv: float(kv[0])):
        label = _HORIZON_NAMES.get(float(h), f"{h} days")
        rows.append([label] + [row[m].format() for m in TABLE7_METRICS])
    sections.append("## Calibrated horizon forecasts\n\n" + _markdown_table(
        ["Horizon"] + [_T7_LABELS[m] for m in TABLE7_METRICS], rows))

    prov = report.provenance
    sections.append(
        "Provenance: seed {master_seed}, config {config_hash}, "
        "data {data_hash}, {n_repeats} repeats, version {package_version}."
        .format(**prov)
    )
    if report.errors:
        sections.append(f"{len(report.errors)} cell failure(s) recorded.")
    return "\n\n".join(sections) + "\n"
