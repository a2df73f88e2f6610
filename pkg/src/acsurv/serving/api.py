"""HTTP surface for the clinician console.

All request bodies are parsed by hand so malformed JSON maps to 400
while schema violations map to 422 with the offending fields listed.
The loaded bundle is immutable; hot swap replaces the holder's
reference atomically so in-flight requests keep the bundle they
started with.
"""

import json

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..cox import CoxPH, PenalizedCox
from ..ensemble import GradientBoostedCox, predict_survival_any
from ..explain import TreeExplainer, linear_shap, waterfall_data


class BundleHolder:
    """Mutable cell holding the currently served (immutable) bundle."""

    def __init__(self, bundle=None):
        self._bundle = bundle

    @property
    def bundle(self):
        return self._bundle

    def swap(self, bundle):
        self._bundle = bundle


def _error(status, detail):
    return JSONResponse(status_code=status, content={"detail": detail})


def _field_errors(errors):
    return _error(422, [{"field": f, "error": e} for f, e in errors])


async def _read_json(request):
    raw = await request.body()
    try:
        return json.loads(raw if raw else b"null"), None
    except json.JSONDecodeError as exc:
        return None, _error(400, f"malformed JSON body: {exc.msg}")


def _encode_record(bundle, record):
    """Record dict -> feature row with NaN for absent fields.

    Returns (row, imputed_field_names, error_response).
    """
    if not isinstance(record, dict):
        return None, None, _error(422, [{"field": "record",
                                         "error": "must be an object"}])
    schema = {f["name"]: f for f in bundle.feature_schema}
    errors = []
    for key in record:
        if key not in schema:
            errors.append((key, "unknown field"))
    row = np.full(len(bundle.feature_schema), np.nan)
    missing = []
    for j, f in enumerate(bundle.feature_schema):
        value = record.get(f["name"])
        if value is None:
            missing.append(f["name"])
            continue
        code, err = _coerce_value(f, value)
        if err:
            errors.append((f["name"], err))
        else:
            row[j] = code
    if errors:
        return None, None, _field_errors(errors)
    if missing and bundle.imputer is None:
        return None, None, _field_errors(
            [(n, "missing and the bundle carries no imputation model")
             for n in missing]
        )
    if missing:
        row = bundle.imputer.transform(row[None, :])[0]
    return row, missing, None


def _coerce_value(feature, value):
    if isinstance(value, str):
        codes = {a["text"].lower(): a["code"] for a in feature["answers"]}
        hit = codes.get(value.strip().lower())
        if hit is None:
            return None, (f"unrecognised answer {value!r}; options: "
                          + ", ".join(a["text"] for a in feature["answers"]))
        return float(hit), None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return None, "value must be a number or an answer string"
    v = float(value)
    if not np.isfinite(v):
        return None, "value must be finite"
    if v < feature["lo"] or v > feature["hi"]:
        return None, (f"value {v:g} outside range "
                      f"[{feature['lo']:g}, {feature['hi']:g}]")
    if feature.get("integer_range") and v != round(v):
        return None, f"value {v:g} must be an integer"
    allowed = {a["code"] for a in feature["answers"]}
    if allowed and not feature.get("integer_range") and v not in allowed:
        return None, (f"value {v:g} is not one of the coded answers "
                      f"{sorted(allowed)}")
    return v, None


def _prediction_payload(bundle, row, imputed):
    model = bundle.model
    margin = float(np.asarray(model.predict(row[None, :]))[0])
    curve = predict_survival_any(model, row[None, :], bundle.curve_times)[0]
    probabilities = {}
    for h in bundle.horizons:
        scaler = bundle.scalers[h]
        probabilities[f"{h:g}"] = {
            "calibrated": round(float(scaler.predict(np.array([margin]))[0]), 4),
            "uncalibrated": round(
                float(predict_survival_any(model, row[None, :],
                                           np.array([h]))[0, 0]), 4),
            "horizon_days": h,
            "scaler_n_fit": scaler.n_fit,
        }
    return {
        "curve": [{"t": float(t), "s": round(float(s), 4)}
                  for t, s in zip(bundle.curve_times, curve)],
        "probabilities": probabilities,
        "margin": margin,
        "imputed_fields": list(imputed),
        "model_version": bundle.provenance.get("config_hash", "unversioned"),
    }


def create_app(holder=None):
    holder = holder or BundleHolder()
    app = FastAPI(title="acsurv decision support", docs_url=None, redoc_url=None)
    app.state.holder = holder

    def bundle_or_503():
        b = holder.bundle
        if b is None:
            return None, _error(503, "no model bundle loaded")
        return b, None

    @app.get("/health")
    async def health():
        return {"status": "ok", "model_loaded": holder.bundle is not None}

    @app.get("/model/metadata")
    async def metadata():
        bundle, err = bundle_or_503()
        if err:
            return err
        model = bundle.model
        return {
            "model_family": type(model).__name__,
            "features": bundle.feature_schema,
            "horizons": bundle.horizons,
            "metrics": bundle.metric_snapshot,
            "provenance": bundle.provenance,
            "explainable": isinstance(model,
                                      (GradientBoostedCox, CoxPH, PenalizedCox)),
        }

    @app.get("/cohort/baseline")
    async def baseline():
        bundle, err = bundle_or_503()
        if err:
            return err
        curve = bundle.baseline_curve
        return {
            "curve": [{"t": float(t), "s": round(float(s), 4)}
                      for t, s in zip(curve["times"], curve["survival"])],
        }

    @app.post("/predict")
    async def predict(request: Request):
        bundle, err = bundle_or_503()
        if err:
            return err
        body, err = await _read_json(request)
        if err:
            return err
        if not isinstance(body, dict) or "record" not in body:
            return _field_errors([("record", "required")])
        row, imputed, err = _encode_record(bundle, body["record"])
        if err:
            return err
        return _prediction_payload(bundle, row, imputed)

    @app.post("/explain")
    async def explain(request: Request):
        bundle, err = bundle_or_503()
        if err:
            return err
        body, err = await _read_json(request)
        if err:
            return err
        if not isinstance(body, dict) or "record" not in body:
            return _field_errors([("record", "required")])
        top_k = body.get("top_k", 8)
        if not isinstance(top_k, int) or top_k < 1:
            return _field_errors([("top_k", "must be a positive integer")])
        row, imputed, err = _encode_record(bundle, body["record"])
        if err:
            return err
        model = bundle.model
        if isinstance(model, GradientBoostedCox):
            explainer = app.state.__dict__.setdefault("_explainer_cache", {})
            key = id(bundle)
            if key not in explainer:
                explainer.clear()
                explainer[key] = TreeExplainer(model)
            explanation = explainer[key].explain(row)
        elif isinstance(model, (CoxPH, PenalizedCox)):
            explanation = linear_shap(model, row)
        else:
            return _error(422, [{
                "field": "model",
                "error": f"{type(model).__name__} predictions cannot be "
                         "attributed per feature",
            }])
        wf = waterfall_data(explanation, top_k=top_k)
        payload = wf.to_dict()
        payload["imputed_fields"] = list(imputed)
        return payload

    @app.post("/whatif")
    async def whatif(request: Request):
        bundle, err = bundle_or_503()
        if err:
            return err
        body, err = await _read_json(request)
        if err:
            return err
        if not isinstance(body, dict) or "record" not in body:
            return _field_errors([("record", "required")])
        edits = body.get("edits", [])
        if not isinstance(edits, list):
            return _field_errors([("edits", "must be a list")])
        row, imputed, err = _encode_record(bundle, body["record"])
        if err:
            return err
        schema = {f["name"]: (j, f)
                  for j, f in enumerate(bundle.feature_schema)}
        edit_errors = []
        variants = []
        for k, edit in enumerate(edits):
            if (not isinstance(edit, dict) or "field" not in edit
                    or "value" not in edit):
                edit_errors.append((f"edits[{k}]",
                                    "must be {field, value}"))
                continue
            name = edit["field"]
            if name not in schema:
                edit_errors.append((f"edits[{k}].field",
                                    f"unknown field {name!r}"))
                continue
            j, f = schema[name]
            code, verr = _coerce_value(f, edit["value"])
            if verr:
                edit_errors.append((f"edits[{k}].value", verr))
                continue
            variant = row.copy()
            variant[j] = code
            variants.append((name, variant))
        if edit_errors:
            return _field_errors(edit_errors)
        results = [dict(_prediction_payload(bundle, row, imputed),
                        edited_field=None)]
        for name, variant in variants:
            results.append(dict(_prediction_payload(bundle, variant, imputed),
                                edited_field=name))
        return {"results": results}

    return app
