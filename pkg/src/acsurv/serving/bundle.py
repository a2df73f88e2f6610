"""Self-describing model bundle files.

Layout: one ASCII header line

    acsurv-bundle v1 sha256=<hex> bytes=<n>

followed by exactly n bytes of UTF-8 JSON.  Arrays are embedded as
base64 of their C-order bytes with dtype and shape, so round trips are
bit-exact.  The checksum covers the JSON payload; any truncation or
edit is rejected before deserialization.
"""

import base64
import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..calibration import PlattScaler
from ..cox import CoxPH, PenalizedCox
from ..ensemble.boosting import GradientBoostedCox
from ..ensemble.forest import RandomSurvivalForest
from ..ensemble.tree import TreeArrays
from ..errors import BundleIntegrityError
from ..impute import MiceImputer
from ..stepfun import StepFunction

FORMAT_NAME = "acsurv-bundle"
FORMAT_VERSION = "v1"


def _enc(obj):
    if isinstance(obj, np.ndarray):
        return {
            "__ndarray__": {
                "dtype": obj.dtype.str,
                "shape": list(obj.shape),
                "data": base64.b64encode(np.ascontiguousarray(obj).tobytes()).decode(
                    "ascii"
                ),
            }
        }
    if isinstance(obj, StepFunction):
        return {"__stepfun__": {"x": _enc(obj.x), "y": _enc(obj.y),
                                "baseline": obj.baseline}}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _enc(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_enc(v) for v in obj]
    return obj


def _dec(obj):
    if isinstance(obj, dict):
        if "__ndarray__" in obj:
            spec = obj["__ndarray__"]
            raw = base64.b64decode(spec["data"])
            return np.frombuffer(raw, dtype=np.dtype(spec["dtype"])).reshape(
                spec["shape"]
            ).copy()
        if "__stepfun__" in obj:
            spec = obj["__stepfun__"]
            return StepFunction(_dec(spec["x"]), _dec(spec["y"]),
                                baseline=spec["baseline"])
        return {k: _dec(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_dec(v) for v in obj]
    return obj


def _tree_state(tree):
    return {
        "children_left": tree.children_left,
        "children_right": tree.children_right,
        "feature": tree.feature,
        "threshold": tree.threshold,
        "value": tree.value,
        "cover": tree.cover,
        "n_features": tree.n_features,
    }


def _tree_from_state(d):
    return TreeArrays(
        np.asarray(d["children_left"], dtype=np.int32),
        np.asarray(d["children_right"], dtype=np.int32),
        np.asarray(d["feature"], dtype=np.int32),
        np.asarray(d["threshold"], dtype=float),
        np.asarray(d["value"], dtype=float),
        np.asarray(d["cover"], dtype=float),
        int(d["n_features"]),
    )


def model_state(model):
    """Portable state dict for any supported fitted model family."""
    if isinstance(model, GradientBoostedCox):
        return {
            "family": "boosted",
            "preset": model.preset,
            "params": dict(model.params_),
            "trees": [_tree_state(t) for t in model.trees_],
            "baseline_cumhaz": model.baseline_cumhaz_,
            "event_times": model.event_times_,
            "clip_count": model.clip_count_,
            "feature_names": list(model.feature_names_),
        }
    if isinstance(model, PenalizedCox):
        return {
            "family": "penalized",
            "coef": model.coef_,
            "coef_original": model.coef_original_,
            "center": model.center_,
            "scale": model.scale_,
            "alpha": model.alpha_,
            "l1_ratio": model.l1_ratio,
            "baseline_cumhaz": model.baseline_cumhaz_,
            "clip_count": model.clip_count_,
            "feature_names": list(model.feature_names_),
        }
    if isinstance(model, CoxPH):
        return {
            "family": "coxph",
            "coef": model.coef_,
            "center": model.center_,
            "baseline_cumhaz": model.baseline_cumhaz_,
            "clip_count": model.clip_count_,
            "feature_names": list(model.feature_names_),
        }
    if isinstance(model, RandomSurvivalForest):
        return {
            "family": "rsf",
            "trees": [_tree_state(t) for t in model.trees_],
            "leaf_curves": [
                [{"node": i, "x": xy[0], "y": xy[1]}
                 for i, xy in enumerate(curves) if xy is not None]
                for curves in model.leaf_curves_
            ],
            "risk_grid": model.risk_grid_,
            "feature_names": list(model.feature_names_),
        }
    raise TypeError(f"cannot bundle model of type {type(model).__name__}")


def model_from_state(state):
    family = state["family"]
    if family == "boosted":
        m = GradientBoostedCox(preset=state["preset"])
        m.params_ = dict(state["params"])
        m.trees_ = [_tree_from_state(t) for t in state["trees"]]
        m.baseline_cumhaz_ = state["baseline_cumhaz"]
        m.event_times_ = np.asarray(state["event_times"], dtype=float)
        m.clip_count_ = int(state["clip_count"])
        m.feature_names_ = tuple(state["feature_names"])
        m.n_features_in_ = len(m.feature_names_)
        m.split_counts_ = sum(
            (t.split_feature_counts() for t in m.trees_),
            np.zeros(m.n_features_in_, dtype=np.int64),
        )
        return m
    if family == "penalized":
        m = PenalizedCox(alpha=state["alpha"], l1_ratio=state["l1_ratio"])
        m.coef_ = np.asarray(state["coef"], dtype=float)
        m.coef_original_ = np.asarray(state["coef_original"], dtype=float)
        m.center_ = np.asarray(state["center"], dtype=float)
        m.scale_ = np.asarray(state["scale"], dtype=float)
        m.alpha_ = float(state["alpha"]) if state["alpha"] is not None else None
        m.baseline_cumhaz_ = state["baseline_cumhaz"]
        m.clip_count_ = int(state["clip_count"])
        m.feature_names_ = tuple(state["feature_names"])
        m.n_features_in_ = len(m.feature_names_)
        return m
    if family == "coxph":
        m = CoxPH()
        m.coef_ = np.asarray(state["coef"], dtype=float)
        m.center_ = np.asarray(state["center"], dtype=float)
        m.baseline_cumhaz_ = state["baseline_cumhaz"]
        m.clip_count_ = int(state["clip_count"])
        m.feature_names_ = tuple(state["feature_names"])
        m.n_features_in_ = len(m.feature_names_)
        return m
    if family == "rsf":
        m = RandomSurvivalForest()
        m.trees_ = [_tree_from_state(t) for t in state["trees"]]
        curves_out = []
        for tree, entries in zip(m.trees_, state["leaf_curves"]):
            per_node = [None] * tree.n_nodes
            for e in entries:
                per_node[int(e["node"])] = (np.asarray(e["x"], dtype=float),
                                            np.asarray(e["y"], dtype=float))
            curves_out.append(per_node)
        m.leaf_curves_ = curves_out
        m.risk_grid_ = np.asarray(state["risk_grid"], dtype=float)
        m.feature_names_ = tuple(state["feature_names"])
        m.n_features_in_ = len(m.feature_names_)
        return m
    raise BundleIntegrityError(f"unknown model family {family!r}")


@dataclass
class ModelBundle:
    """Everything the HTTP service needs, in one integrity-checked file."""

    model: object
    scalers: dict                     # horizon (float) -> PlattScaler
    feature_schema: list              # dicts driving the UI form
    baseline_curve: dict              # {"times": array, "survival": array}
    curve_times: np.ndarray           # prediction curve sample grid
    provenance: dict = field(default_factory=dict)
    metric_snapshot: dict = field(default_factory=dict)
    imputer: Optional[MiceImputer] = None

    def __post_init__(self):
        horizons = [float(h) for h in self.scalers]
        if len(set(horizons)) != len(horizons):
            raise ValueError("scaler horizons must be unique")
        model_feats = list(getattr(self.model, "feature_names_", []))
        schema_feats = [f["name"] for f in self.feature_schema]
        if model_feats and schema_feats != model_feats:
            raise ValueError(
                "feature schema does not match the model's feature list"
            )

    @property
    def feature_names(self):
        return [f["name"] for f in self.feature_schema]

    @property
    def horizons(self):
        return sorted(float(h) for h in self.scalers)


def dumps_bundle(bundle):
    payload = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "model": model_state(bundle.model),
        "scalers": {f"{float(h):g}": s.to_dict()
                    for h, s in bundle.scalers.items()},
        "feature_schema": bundle.feature_schema,
        "baseline_curve": bundle.baseline_curve,
        "curve_times": bundle.curve_times,
        "provenance": bundle.provenance,
        "metric_snapshot": bundle.metric_snapshot,
        "imputer": (None if bundle.imputer is None
                    else bundle.imputer.state_dict()),
    }
    body = json.dumps(_enc(payload), sort_keys=True).encode("utf-8")
    digest = hashlib.sha256(body).hexdigest()
    header = (f"{FORMAT_NAME} {FORMAT_VERSION} sha256={digest} "
              f"bytes={len(body)}\n").encode("ascii")
    return header + body


def loads_bundle(blob):
    newline = blob.find(b"\n")
    if newline < 0:
        raise BundleIntegrityError("missing bundle header")
    try:
        header = blob[:newline].decode("ascii")
    except UnicodeDecodeError as exc:
        raise BundleIntegrityError("unreadable bundle header") from exc
    parts = header.split()
    if len(parts) != 4 or parts[0] != FORMAT_NAME:
        raise BundleIntegrityError(f"not a {FORMAT_NAME} file")
    if parts[1] != FORMAT_VERSION:
        raise BundleIntegrityError(
            f"bundle version {parts[1]} unsupported; this build reads "
            f"{FORMAT_VERSION}"
        )
    try:
        digest = dict([parts[2].split("=")])["sha256"]
        nbytes = int(dict([parts[3].split("=")])["bytes"])
    except (KeyError, ValueError) as exc:
        raise BundleIntegrityError("malformed bundle header") from exc
    body = blob[newline + 1:]
    if len(body) != nbytes:
        raise BundleIntegrityError(
            f"payload is {len(body)} bytes, header promises {nbytes}"
        )
    if hashlib.sha256(body).hexdigest() != digest:
        raise BundleIntegrityError("checksum mismatch; bundle corrupted")
    payload = _dec(json.loads(body.decode("utf-8")))
    imputer_state = payload.get("imputer")
    return ModelBundle(
        model=model_from_state(payload["model"]),
        scalers={float(h): PlattScaler.from_dict(d)
                 for h, d in payload["scalers"].items()},
        feature_schema=payload["feature_schema"],
        baseline_curve=payload["baseline_curve"],
        curve_times=np.asarray(payload["curve_times"], dtype=float),
        provenance=payload["provenance"],
        metric_snapshot=payload["metric_snapshot"],
        imputer=(None if imputer_state is None
                 else MiceImputer.from_state_dict(imputer_state)),
    )


def save_bundle(bundle, path):
    blob = dumps_bundle(bundle)
    with open(path, "wb") as fh:
        fh.write(blob)
    return path


def load_bundle(path):
    with open(path, "rb") as fh:
        return loads_bundle(fh.read())


def feature_schema_from_names(names, cohort_meta=None):
    """UI form schema: question text and answer options per feature.

    Known clinical features get their questionnaire wording and answer
    codes; anything else (synthetic columns) falls back to a numeric
    range taken from ``cohort_meta``.
    """
    from ..cohort.schema import FEATURE_BY_NAME

    meta_by_name = {m.name: m for m in (cohort_meta or [])}
    out = []
    for name in names:
        spec = FEATURE_BY_NAME.get(name)
        if spec is not None:
            out.append({
                "name": spec.name,
                "question": spec.question,
                "lo": spec.lo,
                "hi": spec.hi,
                "integer_range": spec.integer_range,
                "answers": [{"text": t, "code": c}
                            for t, c, _ in spec.answers],
            })
            continue
        m = meta_by_name.get(name)
        lo = m.lo if m is not None else 0.0
        hi = m.hi if m is not None else 1.0
        out.append({
            "name": name,
            "question": name.replace("_", " "),
            "lo": lo,
            "hi": hi,
            "integer_range": True,
            "answers": [],
        })
    return out
