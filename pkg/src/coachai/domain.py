"""Core coaching entities: users, task/plan/activity hierarchy, feedback,
and adherence computation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from enum import Enum

from .errors import DomainError, NotFoundError, ValidationError

__all__ = [
    "Gender",
    "ActivityClass",
    "Topic",
    "Recurrence",
    "AssignmentStatus",
    "BinaryCategory",
    "TernaryCategory",
    "AdherenceThresholds",
    "UserProfile",
    "Activity",
    "Plan",
    "TaskBundle",
    "Assignment",
    "FeedbackEntry",
    "AdherenceReport",
    "expected_occurrences",
    "compute_adherence",
    "categorize_ternary",
]


class Gender(str, Enum):
    MALE = "male"
    FEMALE = "female"
    OTHER = "other"
    UNDISCLOSED = "undisclosed"


class ActivityClass(str, Enum):
    VIGOROUS = "vigorous"
    MILD = "mild"
    SEDENTARY = "sedentary"
    UNCLASSIFIED = "unclassified"


class Topic(str, Enum):
    PHYSICAL_ACTIVITY = "physical_activity"
    HEALTHY_DIET = "healthy_diet"
    MENTAL_WELLNESS = "mental_wellness"


class Recurrence(str, Enum):
    DAILY = "daily"
    WEEKLY = "weekly"
    WEEKDAYS = "weekdays"
    WEEKENDS = "weekends"
    ONE_SHOT = "one_shot"


class AssignmentStatus(str, Enum):
    ACTIVE = "active"
    EXPIRED = "expired"
    CANCELLED = "cancelled"


class BinaryCategory(str, Enum):
    HIGH = "high"
    LOW = "low"


class TernaryCategory(str, Enum):
    NON_ADHERENT = "non_adherent"
    MILD = "mild"
    ADHERENT = "adherent"

    @property
    def rank(self) -> int:
        return {"non_adherent": 0, "mild": 1, "adherent": 2}[self.value]


@dataclass(frozen=True)
class AdherenceThresholds:
    """Binary high/low cut and ternary cut points; all configurable."""

    binary: float = 0.5
    ternary_low: float = 1.0 / 3.0
    ternary_high: float = 2.0 / 3.0

    def __post_init__(self) -> None:
        if not (0.0 < self.binary < 1.0):
            raise ValidationError("binary threshold must lie in (0, 1)")
        if not (0.0 < self.ternary_low < self.ternary_high < 1.0):
            raise ValidationError("ternary thresholds must satisfy 0 < low < high < 1")


@dataclass
class UserProfile:
    user_id: str
    display_name: str
    age: int
    gender: Gender = Gender.UNDISCLOSED
    phone: str | None = None
    locale: str = "en"
    registered_at: datetime | None = None
    channel_binding: tuple[str, str] | None = None  # (channel kind, chat id)
    activity_class: ActivityClass = ActivityClass.UNCLASSIFIED
    intake_complete: bool = False
    last_interaction_at: datetime | None = None
    inactivity_period_days: int = 7

    def __post_init__(self) -> None:
        if not (13 <= self.age <= 120):
            raise ValidationError(f"age {self.age} outside [13, 120]")

    def touch(self, now: datetime) -> None:
        """Record an interaction; last_interaction_at never decreases."""
        if self.last_interaction_at is None or now > self.last_interaction_at:
            self.last_interaction_at = now

    def classify(self, activity_class: ActivityClass) -> None:
        if activity_class is not ActivityClass.UNCLASSIFIED and not self.intake_complete:
            raise DomainError("cannot classify a user before intake completion")
        self.activity_class = activity_class


@dataclass(frozen=True)
class Activity:
    activity_id: str
    title: str
    instructions: str
    topic: Topic
    recurrence: Recurrence
    effort: int = 3

    def __post_init__(self) -> None:
        if not self.title:
            raise ValidationError("activity title must be non-empty")
        if not (1 <= self.effort <= 5):
            raise ValidationError("effort must be in 1..5")


@dataclass(frozen=True)
class Plan:
    plan_id: str
    category: str
    description: str
    activity_ids: tuple[str, ...]
    trigger_time: time
    feedback_time: time
    start_date: date
    expiration_date: date

    def __post_init__(self) -> None:
        if not self.activity_ids:
            raise ValidationError("plan needs at least one activity")
        if self.expiration_date < self.start_date:
            raise ValidationError("expiration_date precedes start_date")
        if self.trigger_time == self.feedback_time:
            raise ValidationError("trigger_time must differ from feedback_time")

    @property
    def day_count(self) -> int:
        return (self.expiration_date - self.start_date).days + 1


@dataclass(frozen=True)
class TaskBundle:
    task_id: str
    title: str
    plan_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.plan_ids:
            raise ValidationError("task needs at least one plan")
        if len(set(self.plan_ids)) != len(self.plan_ids):
            raise ValidationError("task contains duplicate plan ids")


@dataclass
class Assignment:
    assignment_id: str
    user_id: str
    plan_id: str
    assigned_at: datetime
    status: AssignmentStatus = AssignmentStatus.ACTIVE


@dataclass(frozen=True)
class FeedbackEntry:
    user_id: str
    assignment_id: str
    activity_id: str
    occurrence_date: date
    completion: float
    recorded_at: datetime
    note: str | None = None

    def __post_init__(self) -> None:
        if not (0.0 <= self.completion <= 1.0):
            raise ValidationError("completion must lie in [0, 1]")


@dataclass(frozen=True)
class AdherenceReport:
    user_id: str
    assignment_id: str
    per_activity_mean: dict[str, float]
    overall_mean: float
    binary_category: BinaryCategory
    ternary_category: TernaryCategory
    computed_at: datetime


def expected_occurrences(plan: Plan, activity: Activity) -> list[date]:
    """Every date in the plan window on which the activity is expected.

    Weekly recurrence anchors to the plan's start weekday; one_shot is the
    start date alone.
    """
    if activity.activity_id not in plan.activity_ids:
        raise NotFoundError(
            f"activity {activity.activity_id!r} not in plan {plan.plan_id!r}"
        )
    if activity.recurrence is Recurrence.ONE_SHOT:
        return [plan.start_date]
    dates = []
    d = plan.start_date
    anchor_weekday = plan.start_date.weekday()
    while d <= plan.expiration_date:
        wd = d.weekday()
        if (
            activity.recurrence is Recurrence.DAILY
            or (activity.recurrence is Recurrence.WEEKLY and wd == anchor_weekday)
            or (activity.recurrence is Recurrence.WEEKDAYS and wd < 5)
            or (activity.recurrence is Recurrence.WEEKENDS and wd >= 5)
        ):
            dates.append(d)
        d += timedelta(days=1)
    return dates


def categorize_ternary(mean: float, thresholds: AdherenceThresholds) -> TernaryCategory:
    """Left-closed partition of [0, 1] into the three adherence categories."""
    if not (0.0 <= mean <= 1.0):
        raise DomainError(f"adherence mean {mean} outside [0, 1]")
    if mean < thresholds.ternary_low:
        return TernaryCategory.NON_ADHERENT
    if mean < thresholds.ternary_high:
        return TernaryCategory.MILD
    return TernaryCategory.ADHERENT


def compute_adherence(
    feedback: list[FeedbackEntry],
    plan: Plan,
    activities: list[Activity],
    thresholds: AdherenceThresholds,
    computed_at: datetime,
    until: date | None = None,
) -> AdherenceReport:
    """Averaged completion over expected occurrences; missing counts as 0.

    `until` truncates the window for live (to-date) reports; expected
    occurrences after it are excluded from the denominator.
    """
    if not activities:
        raise DomainError("plan has an empty activity list")
    by_id = {a.activity_id: a for a in activities}
    for entry in feedback:
        if entry.activity_id not in by_id:
            raise NotFoundError(f"feedback references unknown activity {entry.activity_id!r}")
        if not (plan.start_date <= entry.occurrence_date <= plan.expiration_date):
            raise DomainError("feedback occurrence_date outside the plan window")
    # Last write wins per (activity, date).
    recorded: dict[tuple[str, date], float] = {}
    for entry in sorted(feedback, key=lambda e: e.recorded_at):
        recorded[(entry.activity_id, entry.occurrence_date)] = entry.completion

    per_activity_mean: dict[str, float] = {}
    pooled: list[float] = []
    user_id = feedback[0].user_id if feedback else ""
    assignment_id = feedback[0].assignment_id if feedback else ""
    for activity in activities:
        dates = expected_occurrences(plan, activity)
        if until is not None:
            dates = [d for d in dates if d <= until]
        completions = [recorded.get((activity.activity_id, d), 0.0) for d in dates]
        pooled.extend(completions)
        per_activity_mean[activity.activity_id] = (
            math.fsum(completions) / len(completions) if completions else 0.0
        )
    overall = math.fsum(pooled) / len(pooled) if pooled else 0.0
    binary = BinaryCategory.HIGH if overall >= thresholds.binary else BinaryCategory.LOW
    return AdherenceReport(
        user_id=user_id,
        assignment_id=assignment_id,
        per_activity_mean=per_activity_mean,
        overall_mean=overall,
        binary_category=binary,
        ternary_category=categorize_ternary(overall, thresholds),
        computed_at=computed_at,
    )
