"""CSV ingestion and export.

Format: UTF-8, comma separated, header row of canonical feature names plus
``time_days``, ``event`` and optionally ``censor_reason`` (or a
``discharge_reason`` text column from which both are derived).  A missing
cell is an empty string.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from ..errors import SchemaError
from .encoding import encode_discharge
from .schema import (
    CENSOR_REASONS,
    FEATURE_BY_NAME,
    Cohort,
    FeatureMeta,
    validate_value,
)


@dataclass(frozen=True)
class CsvSchema:
    time_column: str = "time_days"
    event_column: str = "event"
    censor_reason_column: str = "censor_reason"
    discharge_column: str = "discharge_reason"


@dataclass
class IngestReport:
    n_rows: int = 0
    n_ok: int = 0
    n_malformed: int = 0
    n_nonpositive_time: int = 0
    errors: list = field(default_factory=list)

    def to_dict(self):
        return {
            "n_rows": self.n_rows,
            "n_ok": self.n_ok,
            "n_malformed": self.n_malformed,
            "n_nonpositive_time": self.n_nonpositive_time,
            "errors": [list(e) for e in self.errors],
        }


def ingest_csv(path, schema=CsvSchema()):
    """Read a cohort; returns (Cohort, IngestReport).

    Malformed rows are collected and skipped; more than 10% malformed is a
    hard failure.  Rows with non-positive follow-up are excluded and
    counted separately.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        outcome_cols = {
            schema.time_column,
            schema.event_column,
            schema.censor_reason_column,
            schema.discharge_column,
        }
        feature_cols = [c for c in header if c not in outcome_cols]
        unknown = [c for c in feature_cols if c not in FEATURE_BY_NAME]
        if unknown:
            raise SchemaError(f"unknown columns in header: {unknown}")
        if schema.time_column not in header:
            raise SchemaError(f"missing required column {schema.time_column!r}")
        has_event = schema.event_column in header
        has_discharge = schema.discharge_column in header
        if not has_event and not has_discharge:
            raise SchemaError(
                f"need {schema.event_column!r} or {schema.discharge_column!r} column"
            )

        report = IngestReport()
        rows, times, events, reasons = [], [], [], []
        for line_no, raw in enumerate(reader, start=2):
            report.n_rows += 1
            try:
                time_days = float(raw[schema.time_column])
                if not float(time_days).is_integer():
                    raise SchemaError(f"{schema.time_column} must be an integer day")
                if time_days < 1:
                    report.n_nonpositive_time += 1
                    continue
                if has_discharge and (raw.get(schema.discharge_column) or "").strip():
                    event, reason = encode_discharge(raw[schema.discharge_column])
                else:
                    event = int(float(raw[schema.event_column]))
                    if event not in (0, 1):
                        raise SchemaError("event must be 0 or 1")
                    reason = (raw.get(schema.censor_reason_column) or "").strip() or "none"
                    if reason not in CENSOR_REASONS:
                        raise SchemaError(f"unknown censor_reason {reason!r}")
                    if event == 1 and reason != "none":
                        raise SchemaError("event=1 requires censor_reason='none'")
                row = np.full(len(feature_cols), np.nan)
                for j, col in enumerate(feature_cols):
                    cell = (raw.get(col) or "").strip()
                    if cell == "":
                        continue
                    row[j] = validate_value(col, float(cell))
            except (SchemaError, ValueError, TypeError, KeyError) as exc:
                report.n_malformed += 1
                report.errors.append((line_no, str(exc)))
                continue
            rows.append(row)
            times.append(int(time_days))
            events.append(event)
            reasons.append(reason)
            report.n_ok += 1

    if report.n_rows and report.n_malformed > 0.10 * report.n_rows:
        raise SchemaError(
            f"{report.n_malformed}/{report.n_rows} rows malformed (>10%); "
            "refusing to ingest"
        )
    values = np.vstack(rows) if rows else np.empty((0, len(feature_cols)))
    meta = [
        FeatureMeta(
            name,
            FEATURE_BY_NAME[name].lo,
            FEATURE_BY_NAME[name].hi,
            float(np.isnan(values[:, j]).mean()) if rows else 0.0,
        )
        for j, name in enumerate(feature_cols)
    ]
    cohort = Cohort(
        values,
        np.asarray(times, dtype=int),
        np.asarray(events, dtype=int),
        np.asarray(reasons, dtype=object),
        feature_meta=meta,
    )
    return cohort, report


def write_cohort_csv(cohort, path):
    """Write a cohort in the canonical CSV layout (empty cell = missing)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(cohort.feature_names + ["time_days", "event", "censor_reason"])
        for i in range(len(cohort)):
            cells = [
                "" if not np.isfinite(v) else format(v, "g")
                for v in cohort.values[i]
            ]
            writer.writerow(
                cells
                + [int(cohort.time_days[i]), int(cohort.event[i]), cohort.censor_reason[i]]
            )
