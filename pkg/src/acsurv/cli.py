"""Command-line entry points.

Every artifact-producing command writes under ``<out_dir>/<config-hash>/``
so a changed configuration never silently overwrites an earlier run.
"""

import json
import pathlib
import sys

import click
import numpy as np

from .calibration import binarize_at_horizon, calibration_curve, fit_platt
from .cohort import SimConfig, ingest_csv, simulate_cohort, write_cohort_csv
from .ensemble import predict_survival_any
from .experiments import (ExperimentConfig, build_model, export_report,
                          run_experiments, stratified_split)
from .impute import MiceImputer, drop_sparse_features, prune_correlated
from .metrics import harrell_cindex
from .nonparametric import censoring_km, survival_target
from .serving import (BundleHolder, ModelBundle, create_app,
                      feature_schema_from_names, load_bundle, save_bundle)

SEED_ENVVAR = "ACSURV_SEED"


def _run_dir(out_dir, config_hash):
    path = pathlib.Path(out_dir) / config_hash
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_experiment_config(config_path, seed):
    if config_path:
        cfg = ExperimentConfig.from_json(pathlib.Path(config_path).read_text())
    else:
        cfg = ExperimentConfig()
    if seed is not None:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "master_seed": seed})
    return cfg


@click.group()
def main():
    """Survival modelling and decision support for aged-care cohorts."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="Simulation config JSON; defaults baked in.")
@click.option("--seed", type=int, envvar=SEED_ENVVAR, default=0,
              show_default=True)
@click.option("--out-dir", default="runs", show_default=True)
def simulate(config_path, seed, out_dir):
    """Draw a synthetic admission cohort and write it as CSV."""
    if config_path:
        cfg = SimConfig.from_json(config_path)
    else:
        cfg = SimConfig()
    cohort, truth = simulate_cohort(cfg, seed=seed)
    # Seed is not part of SimConfig, so it needs its own spot in the run
    # name or same-config runs with new seeds silently overwrite.
    run = _run_dir(out_dir, f"{cfg.config_hash()}-s{seed}")
    csv_path = run / "cohort.csv"
    write_cohort_csv(cohort, csv_path)
    (run / "sim_config.json").write_text(cfg.to_json())
    meta = {
        "seed": seed,
        "n": len(cohort.event),
        "event_fraction": cohort.event_fraction,
        "config_hash": cfg.config_hash(),
    }
    (run / "sim_meta.json").write_text(json.dumps(meta, indent=2))
    click.echo(f"cohort written to {csv_path} "
               f"(n={meta['n']}, events={meta['event_fraction']:.3f})")


def _prepare_full(cohort, cfg):
    cohort, sparse_dropped = drop_sparse_features(cohort, cfg.sparse_cutoff)
    cohort, prune_report = prune_correlated(cohort, cfg.prune_threshold)
    meta = cohort.feature_meta
    imputer = None
    values = cohort.values
    if np.isnan(values).any():
        imputer = MiceImputer(cycles=cfg.mice_cycles, random_state=cfg.master_seed)
        values = imputer.fit_transform(values,
                                       ranges=[(m.lo, m.hi) for m in meta],
                                       feature_names=list(cohort.feature_names))
    return cohort, values, imputer, sparse_dropped, prune_report


@main.command()
@click.option("--cohort", "cohort_path", required=True,
              type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="Experiment config JSON.")
@click.option("--algorithm", default=None,
              help="Override the algorithm to bundle (default: config's "
                   "calibrate_algorithm).")
@click.option("--seed", type=int, envvar=SEED_ENVVAR, default=None)
@click.option("--out-dir", default="runs", show_default=True)
def train(cohort_path, config_path, algorithm, seed, out_dir):
    """Fit one model plus horizon calibrators and save a serving bundle."""
    cfg = _load_experiment_config(config_path, seed)
    alg = algorithm or cfg.calibrate_algorithm
    cohort, report = ingest_csv(cohort_path)
    if report.n_malformed:
        click.echo(f"warning: {report.n_malformed} malformed rows skipped",
                   err=True)
    cohort, values, imputer, sparse_dropped, prune_report = _prepare_full(
        cohort, cfg)
    event = cohort.event.astype(bool)
    time = cohort.time_days.astype(float)

    rng = np.random.default_rng(cfg.master_seed)
    fit_idx, cal_idx = stratified_split(event, cfg.inner_fraction, rng)
    model = build_model(alg, cfg.model_overrides.get(alg),
                        int(rng.integers(2**31)))
    model.fit(values[fit_idx], survival_target(event[fit_idx], time[fit_idx]),
              feature_names=list(cohort.feature_names))

    margins_cal = np.asarray(model.predict(values[cal_idx]), dtype=float)
    scalers = {}
    for h in cfg.horizons:
        labels, included = binarize_at_horizon(
            (event[cal_idx], time[cal_idx]), h)
        scalers[h] = fit_platt(margins_cal[included], labels[included],
                               horizon_days=h,
                               n_excluded=int((~included).sum()))

    event_times = np.unique(time[event])
    step = max(1, event_times.size // 180)
    curve_times = event_times[::step]
    cohort_curve = predict_survival_any(model, values, curve_times).mean(axis=0)

    margins_all = np.asarray(model.predict(values), dtype=float)
    snapshot = {
        "harrell_cindex_train": harrell_cindex(event, time, margins_all),
        "n_train": int(fit_idx.size),
        "n_calibration": int(cal_idx.size),
    }
    bundle = ModelBundle(
        model=model,
        scalers=scalers,
        feature_schema=feature_schema_from_names(list(cohort.feature_names),
                                                 cohort.feature_meta),
        baseline_curve={"times": curve_times, "survival": cohort_curve},
        curve_times=curve_times,
        provenance={
            "config_hash": cfg.config_hash,
            "master_seed": cfg.master_seed,
            "algorithm": alg,
            "sparse_dropped": sparse_dropped,
            "pruned": list(prune_report.dropped),
        },
        metric_snapshot=snapshot,
        imputer=imputer,
    )
    run = _run_dir(out_dir, cfg.config_hash)
    save_bundle(bundle, run / "bundle.acsurv")
    (run / "prune_report.json").write_text(prune_report.to_json())
    (run / "experiment_config.json").write_text(cfg.to_json())
    click.echo(f"bundle written to {run / 'bundle.acsurv'} (algorithm={alg})")


@main.command()
@click.option("--cohort", "cohort_path", required=True,
              type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--seed", type=int, envvar=SEED_ENVVAR, default=None)
@click.option("--out-dir", default="runs", show_default=True)
def evaluate(cohort_path, config_path, seed, out_dir):
    """Run the repeated-split protocol and write the report."""
    cfg = _load_experiment_config(config_path, seed)
    cohort, _ = ingest_csv(cohort_path)
    report = run_experiments(cohort, cfg)
    run = _run_dir(out_dir, cfg.config_hash)
    for fmt, suffix in (("json", "json"), ("csv", "csv"), ("markdown", "md")):
        export_report(report, fmt, run / f"report.{suffix}")
    click.echo(export_report(report, "markdown"))
    click.echo(f"report written under {run}")


@main.command()
@click.option("--bundle", "bundle_path", required=True,
              type=click.Path(exists=True))
@click.option("--cohort", "cohort_path", required=True,
              type=click.Path(exists=True))
@click.option("--horizon", type=float, default=182.0, show_default=True)
@click.option("--bins", type=int, default=10, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def calibrate(bundle_path, cohort_path, horizon, bins, out_path):
    """Reliability-curve data for a bundled scaler on a held-out cohort."""
    bundle = load_bundle(bundle_path)
    if float(horizon) not in bundle.scalers:
        raise click.ClickException(
            f"bundle has no scaler for horizon {horizon:g}; "
            f"available: {bundle.horizons}"
        )
    cohort, _ = ingest_csv(cohort_path)
    cohort = cohort.select_features(bundle.feature_names)
    values = cohort.values
    if np.isnan(values).any():
        if bundle.imputer is None:
            raise click.ClickException("cohort has missing values and the "
                                       "bundle has no imputation model")
        values = bundle.imputer.transform(values)
    event = cohort.event.astype(bool)
    time = cohort.time_days.astype(float)
    labels, included = binarize_at_horizon((event, time), horizon)
    margins = np.asarray(bundle.model.predict(values), dtype=float)
    probs = bundle.scalers[float(horizon)].predict(margins)
    curve = calibration_curve(probs[included], labels[included], n_bins=bins)
    text = curve.to_json()
    if out_path:
        pathlib.Path(out_path).write_text(text)
        pathlib.Path(out_path).with_suffix(".csv").write_text(curve.to_csv())
        click.echo(f"calibration curve written to {out_path}")
    else:
        click.echo(text)


@main.command()
@click.option("--bundle", "bundle_path", required=True,
              type=click.Path(exists=True))
@click.option("--record", "record_path", required=True,
              type=click.Path(exists=True),
              help="JSON object of field -> value.")
@click.option("--top-k", type=int, default=8, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def explain(bundle_path, record_path, top_k, out_path):
    """Waterfall attribution for one record against a bundled model."""
    from .serving.api import _encode_record
    from .explain import TreeExplainer, linear_shap, waterfall_data
    from .ensemble.boosting import GradientBoostedCox

    bundle = load_bundle(bundle_path)
    record = json.loads(pathlib.Path(record_path).read_text())
    row, imputed, err = _encode_record(bundle, record)
    if err is not None:
        raise click.ClickException(
            f"record rejected: {err.body.decode('utf-8', 'replace')}"
        )
    model = bundle.model
    if isinstance(model, GradientBoostedCox):
        explanation = TreeExplainer(model).explain(row)
    else:
        explanation = linear_shap(model, row)
    payload = waterfall_data(explanation, top_k=top_k).to_dict()
    payload["imputed_fields"] = list(imputed)
    text = json.dumps(payload, indent=2)
    if out_path:
        pathlib.Path(out_path).write_text(text)
        click.echo(f"waterfall written to {out_path}")
    else:
        click.echo(text)


@main.command()
@click.option("--bundle", "bundle_path", required=True,
              type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(bundle_path, host, port):
    """Serve the prediction API for a saved bundle."""
    import uvicorn

    holder = BundleHolder(load_bundle(bundle_path))
    app = create_app(holder)
    click.echo(f"serving {bundle_path} on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--report", "report_path", required=True,
              type=click.Path(exists=True), help="report.json from evaluate.")
@click.option("--format", "fmt", default="markdown", show_default=True,
              type=click.Choice(["json", "csv", "markdown"]))
@click.option("--out", "out_path", type=click.Path(), default=None)
def report(report_path, fmt, out_path):
    """Re-render a saved experiment report."""
    from .experiments import ExperimentReport

    data = json.loads(pathlib.Path(report_path).read_text())
    rep = ExperimentReport.from_dict(data)
    text = export_report(rep, fmt, out_path)
    if out_path:
        click.echo(f"written to {out_path}")
    else:
        click.echo(text)


if __name__ == "__main__":
    sys.exit(main())
