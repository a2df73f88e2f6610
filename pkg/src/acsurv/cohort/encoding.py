"""Answer-text encoding and the earliest-observation-within-window rule."""

from dataclasses import dataclass

from ..errors import SchemaError
from .schema import (
    DISCHARGE_OUTCOME,
    FEATURE_BY_NAME,
    ResidentRecord,
    canonical_feature,
    validate_value,
)


@dataclass(frozen=True)
class TimedObservation:
    feature: str
    answer: str
    days_since_admission: int


def encode_answer(feature_name, answer):
    """Map one answer to its ordinal code.

    Matching is case-insensitive and trimmed.  An unambiguous prefix of an
    answer text is accepted as well, so shorthand like "No history" finds
    "No history of falls".  Plain numerals are accepted when they are a
    legal code for the feature (the comorbidity scores arrive that way).
    """
    name = canonical_feature(feature_name)
    spec = FEATURE_BY_NAME[name]
    text = str(answer).strip()
    try:
        return validate_value(name, float(text))
    except (ValueError, SchemaError):
        pass
    if not spec.answers:
        raise SchemaError(f"{name}: expected a number in [{spec.lo:g}, {spec.hi:g}], got {text!r}")
    folded = text.lower()
    exact = [code for ans, code, _ in spec.answers if ans.lower() == folded]
    if exact:
        return float(exact[0])
    prefix = {code for ans, code, _ in spec.answers if ans.lower().startswith(folded)}
    if len(prefix) == 1 and folded:
        return float(prefix.pop())
    raise SchemaError(f"{name}: unrecognised answer {text!r}")


def encode_record(raw_answers):
    """Encode a feature -> answer-text map into a ResidentRecord.

    Unanswered features are simply absent and flagged missing by the
    record.  Unknown categories raise, naming the feature and the text.
    """
    values = {}
    for feature, answer in raw_answers.items():
        if answer is None or str(answer).strip() == "":
            continue
        values[canonical_feature(feature)] = encode_answer(feature, answer)
    return ResidentRecord(values)


def encode_discharge(text):
    """Map a discharge category to (event, censor_reason) per the outcome rule:
    death and hospice transfer are events, everything else censors."""
    key = str(text).strip()
    for category, outcome in DISCHARGE_OUTCOME.items():
        if category.lower() == key.lower():
            return outcome
    raise SchemaError(f"unknown discharge category {text!r}")


def select_earliest_within_window(observations, window_days=31):
    """Keep, per feature, the earliest observation at most window_days out.

    Observations later than the window are ignored (their feature stays
    missing).  When a feature has two observations on the same earliest
    day the lexicographically smaller answer text wins, which keeps the
    result independent of input order.
    """
    if window_days <= 0:
        raise ValueError("window_days must be positive")
    best = {}
    for obs in observations:
        name = canonical_feature(obs.feature)
        day = int(obs.days_since_admission)
        if day < 0:
            raise SchemaError(f"{name}: negative days_since_admission ({day})")
        if day > window_days:
            continue
        key = (day, str(obs.answer).strip())
        if name not in best or key < best[name]:
            best[name] = key
    return encode_record({name: answer for name, (_, answer) in best.items()})
