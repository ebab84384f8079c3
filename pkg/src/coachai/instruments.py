"""Questionnaire instruments: templates, response scoring, stage
classification, and conversion of a template into a deliverable dialog.

Item wording shipped here is a stand-in: the instruments and their
dimension structure are fixed, the texts are not licensed originals and
can be swapped by editing the template JSON files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from importlib import resources
from pathlib import Path

from .dialog.model import DialogDefinition, InputKind, InputSpec, StateSpec
from .errors import DomainError, ValidationError

REQUIRED_DIMENSIONS = {
    "TAM": {"usefulness", "ease_of_use", "fun", "attitude", "intention"},
    "AttrakDiff": {"pragmatic", "hedonic", "appeal", "social"},
    "HAPA": {
        "risk_perception",
        "outcome_expectancy",
        "action_self_efficacy",
        "behavioral_intention",
        "volition",
    },
}

INSTRUMENTS = ("TAM", "AttrakDiff", "HAPA", "intake", "preference", "custom")

PREFERENCE_CHOICES = ("human", "virtual", "combination")


@dataclass(frozen=True)
class Item:
    item_id: str
    text: str
    dimension: str
    scale_min: float
    scale_max: float
    reverse_scored: bool = False
    answer_scores: dict[str, float] | None = None  # labelled answers

    def __post_init__(self) -> None:
        if self.scale_min >= self.scale_max:
            raise DomainError(f"item {self.item_id}: scale min must be < max")

    @property
    def midpoint(self) -> float:
        return (self.scale_min + self.scale_max) / 2.0


@dataclass(frozen=True)
class QuestionnaireTemplate:
    template_id: str
    instrument: str
    items: tuple[Item, ...]

    def __post_init__(self) -> None:
        if self.instrument not in INSTRUMENTS:
            raise ValidationError(f"unknown instrument {self.instrument!r}")
        ids = [i.item_id for i in self.items]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate item ids in template")
        required = REQUIRED_DIMENSIONS.get(self.instrument)
        if required is not None and self.dimensions != required:
            raise ValidationError(
                f"{self.instrument} dimensions must be exactly {sorted(required)}, "
                f"got {sorted(self.dimensions)}"
            )

    @property
    def dimensions(self) -> set[str]:
        return {i.dimension for i in self.items}

    def item(self, item_id: str) -> Item:
        for i in self.items:
            if i.item_id == item_id:
                return i
        raise DomainError(f"no item {item_id!r} in template {self.template_id!r}")


@dataclass(frozen=True)
class QuestionnaireResponse:
    user_id: str
    template_id: str
    week_index: int
    answers: dict[str, object]  # item_id -> raw value (number or label)
    submitted_at: datetime


@dataclass(frozen=True)
class DimensionScores:
    per_dimension: dict[str, float]
    total: float


class HapaStage(str, Enum):
    NON_INTENDER = "non_intender"
    INTENDER = "intender"
    ACTOR = "actor"


# ---------------------------------------------------------------------------
# Template loading
# ---------------------------------------------------------------------------

def template_from_dict(doc: dict) -> QuestionnaireTemplate:
    items = tuple(
        Item(
            item_id=i["item_id"],
            text=i["text"],
            dimension=i["dimension"],
            scale_min=float(i["scale"]["min"]),
            scale_max=float(i["scale"]["max"]),
            reverse_scored=bool(i.get("reverse", False)),
            answer_scores=(
                {k: float(v) for k, v in i["answer_scores"].items()}
                if i.get("answer_scores")
                else None
            ),
        )
        for i in doc["items"]
    )
    return QuestionnaireTemplate(
        template_id=doc["template_id"], instrument=doc["instrument"], items=items
    )


def load_template(path: str | Path) -> QuestionnaireTemplate:
    return template_from_dict(json.loads(Path(path).read_text()))


def builtin_template(name: str) -> QuestionnaireTemplate:
    """Load one of the shipped templates: tam, attrakdiff, hapa, preference."""
    ref = resources.files("coachai") / "fixtures" / "templates" / f"{name.lower()}.json"
    return template_from_dict(json.loads(ref.read_text()))


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

def _item_score(item: Item, raw: object) -> float:
    if item.answer_scores is not None:
        if not isinstance(raw, str) or raw not in item.answer_scores:
            raise DomainError(f"item {item.item_id}: unknown answer {raw!r}")
        value = item.answer_scores[raw]
    else:
        try:
            value = float(raw)  # type: ignore[arg-type]
        except (TypeError, ValueError):
            raise DomainError(f"item {item.item_id}: non-numeric answer {raw!r}") from None
    if not (item.scale_min <= value <= item.scale_max):
        raise DomainError(
            f"item {item.item_id}: answer {value} outside scale "
            f"[{item.scale_min}, {item.scale_max}]"
        )
    if item.reverse_scored:
        value = item.scale_min + item.scale_max - value
    return value


def score_response(
    template: QuestionnaireTemplate,
    response: QuestionnaireResponse,
    allow_partial: bool = False,
) -> DimensionScores:
    """Reverse-map flagged items, average per dimension, sum for the total."""
    for item_id in response.answers:
        template.item(item_id)  # unknown ids raise here
    by_dimension: dict[str, list[float]] = {}
    total = 0.0
    for item in template.items:
        if item.item_id not in response.answers:
            if allow_partial:
                continue
            raise DomainError(f"response missing answer for item {item.item_id!r}")
        score = _item_score(item, response.answers[item.item_id])
        by_dimension.setdefault(item.dimension, []).append(score)
        total += score
    if not by_dimension:
        raise DomainError("response answered no items")
    per_dimension = {d: sum(v) / len(v) for d, v in by_dimension.items()}
    return DimensionScores(per_dimension=per_dimension, total=total)


def classify_hapa_stage(
    scores: DimensionScores, behavior_mean: float, midpoint: float = 4.0
) -> HapaStage:
    """Stage from intention and behavior levels, both cut at the midpoint."""
    if "behavioral_intention" not in scores.per_dimension:
        raise DomainError("scores carry no behavioral_intention dimension")
    intention = scores.per_dimension["behavioral_intention"]
    if intention < midpoint:
        return HapaStage.NON_INTENDER
    if behavior_mean < midpoint:
        return HapaStage.INTENDER
    return HapaStage.ACTOR


# ---------------------------------------------------------------------------
# Dialog generation
# ---------------------------------------------------------------------------

def build_dialog(
    template: QuestionnaireTemplate, dialog_id: str | None = None
) -> DialogDefinition:
    """Linear FSM delivering the questionnaire: one state per item, in order."""
    if not template.items:
        raise DomainError("cannot build a dialog from an empty template")
    dialog_id = dialog_id or f"questionnaire_{template.template_id}"
    states: dict[str, StateSpec] = {}
    item_ids = [i.item_id for i in template.items]
    for idx, item in enumerate(template.items):
        target = item_ids[idx + 1] if idx + 1 < len(item_ids) else "done"
        if item.answer_scores is not None:
            labels = tuple(item.answer_scores)
            spec = InputSpec(InputKind.CHOICE, labels=labels)
            transitions = {label: target for label in labels}
        else:
            spec = InputSpec(InputKind.SCALE, minimum=item.scale_min, maximum=item.scale_max)
            transitions = {"*": target}
        states[item.item_id] = StateSpec(
            state_id=item.item_id,
            prompt_template=item.text,
            reprompt_text="Please answer with one of the offered options."
            if item.answer_scores is not None
            else f"Please answer with a number from {_fmt(item.scale_min)} to {_fmt(item.scale_max)}.",
            input=spec,
            capture=item.item_id,
            transitions=transitions,
        )
    states["done"] = StateSpec(state_id="done")
    return DialogDefinition(
        dialog_id=dialog_id,
        entry_state=item_ids[0],
        states=states,
        terminal_states=frozenset({"done"}),
        required_captures=frozenset(item_ids),
    )


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else str(x)


def response_from_variables(
    template: QuestionnaireTemplate,
    user_id: str,
    week_index: int,
    variables: dict[str, object],
    submitted_at: datetime,
) -> QuestionnaireResponse:
    """Build a response from the captured variables of a completed dialog."""
    answers = {i.item_id: variables[i.item_id] for i in template.items if i.item_id in variables}
    return QuestionnaireResponse(
        user_id=user_id,
        template_id=template.template_id,
        week_index=week_index,
        answers=answers,
        submitted_at=submitted_at,
    )


def preference_probe_summary(
    template: QuestionnaireTemplate, responses: list[QuestionnaireResponse]
) -> dict[str, dict[str, int]]:
    """Per-topic counts of coach-preference choices."""
    table: dict[str, dict[str, int]] = {
        item.dimension: {c: 0 for c in (item.answer_scores or {})} for item in template.items
    }
    for response in responses:
        for item in template.items:
            raw = response.answers.get(item.item_id)
            if raw is None:
                continue
            if not isinstance(raw, str) or raw not in (item.answer_scores or {}):
                raise DomainError(f"item {item.item_id}: unknown preference answer {raw!r}")
            table[item.dimension][raw] += 1
    return table
