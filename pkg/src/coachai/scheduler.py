"""Time-based background job engine.

Owns the job table for plan notifications, feedback collection, plan
expiration, weekly questionnaire dispatch, coach follow-up reminders, and
inactivity checks. Driven by `tick` from either a real timer or a
simulated clock; firing is deterministic (due_at order, job_id tie-break)
and at-most-once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from enum import Enum

from .domain import Assignment, AssignmentStatus, Plan, UserProfile
from .errors import ConflictError, DomainError

PROTOCOL_INSTRUMENTS = ("TAM", "HAPA", "AttrakDiff")
PROTOCOL_WEEKS = 4
DISPATCH_TIME = time(18, 0)
FOLLOWUP_TIME = time(18, 30)
DEFAULT_INACTIVITY_DAYS = 7


class JobKind(str, Enum):
    PLAN_NOTIFICATION = "plan_notification"
    FEEDBACK_COLLECTION = "feedback_collection"
    PLAN_EXPIRATION = "plan_expiration"
    QUESTIONNAIRE_DISPATCH = "questionnaire_dispatch"
    COACH_FOLLOWUP_REMINDER = "coach_followup_reminder"
    INACTIVITY_CHECK = "inactivity_check"


@dataclass
class ScheduledJob:
    job_id: str
    kind: JobKind
    due_at: datetime
    payload: dict
    recurrence: str | None = None
    fired: bool = False
    fired_at: datetime | None = None
    late: bool = False


@dataclass
class Clock:
    """Monotonically nondecreasing time source; simulated or real."""

    mode: str = "simulated"  # "simulated" | "real"
    _now: datetime = field(default_factory=lambda: datetime(2000, 1, 1, tzinfo=timezone.utc))

    @property
    def now(self) -> datetime:
        if self.mode == "real":
            return datetime.now(timezone.utc)
        return self._now

    def set(self, value: datetime) -> None:
        if value < self._now:
            raise DomainError("clock never decreases")
        self._now = value

    def advance(self, delta: timedelta) -> None:
        self.set(self._now + delta)


@dataclass(frozen=True)
class InactivityAlert:
    user_id: str
    silent_since: datetime
    period_days: int
    detected_at: datetime


def _at(d: date, t: time) -> datetime:
    return datetime.combine(d, t, tzinfo=timezone.utc)


class Scheduler:
    def __init__(self) -> None:
        self.jobs: dict[str, ScheduledJob] = {}
        self._last_tick: datetime | None = None
        self._protocol_users: set[str] = set()
        # user_id -> last_interaction_at value we already alerted on
        self._inactivity_alerted: dict[str, datetime | None] = {}

    # -- job construction ---------------------------------------------------

    def add(self, job: ScheduledJob) -> ScheduledJob:
        if job.job_id in self.jobs:
            raise ConflictError(f"duplicate job id {job.job_id!r}")
        self.jobs[job.job_id] = job
        return job

    def schedule_assignment(
        self, assignment: Assignment, plan: Plan, now: datetime
    ) -> list[ScheduledJob]:
        """Availability ping, daily notification/feedback jobs over the plan
        window, and one expiration job."""
        if assignment.status is not AssignmentStatus.ACTIVE:
            raise DomainError("assignment is not active")
        if now.date() > plan.expiration_date:
            raise DomainError(f"plan {plan.plan_id!r} already expired")
        base = f"{assignment.assignment_id}"
        payload = {
            "user_id": assignment.user_id,
            "assignment_id": assignment.assignment_id,
            "plan_id": plan.plan_id,
        }
        jobs = [
            self.add(
                ScheduledJob(
                    job_id=f"avail:{base}",
                    kind=JobKind.PLAN_NOTIFICATION,
                    due_at=now,
                    payload={**payload, "phase": "availability"},
                )
            )
        ]
        first = max(plan.start_date, now.date())
        d = first
        while d <= plan.expiration_date:
            jobs.append(
                self.add(
                    ScheduledJob(
                        job_id=f"notify:{base}:{d.isoformat()}",
                        kind=JobKind.PLAN_NOTIFICATION,
                        due_at=_at(d, plan.trigger_time),
                        payload={**payload, "date": d.isoformat()},
                        recurrence="daily",
                    )
                )
            )
            jobs.append(
                self.add(
                    ScheduledJob(
                        job_id=f"feedback:{base}:{d.isoformat()}",
                        kind=JobKind.FEEDBACK_COLLECTION,
                        due_at=_at(d, plan.feedback_time),
                        payload={**payload, "date": d.isoformat()},
                        recurrence="daily",
                    )
                )
            )
            d += timedelta(days=1)
        jobs.append(
            self.add(
                ScheduledJob(
                    job_id=f"expire:{base}",
                    kind=JobKind.PLAN_EXPIRATION,
                    due_at=_at(plan.expiration_date, time(23, 59, 59)),
                    payload=payload,
                )
            )
        )
        return jobs

    def cancel_assignment(self, assignment_id: str) -> int:
        """Drop every unfired job belonging to the assignment."""
        doomed = [
            jid
            for jid, job in self.jobs.items()
            if not job.fired and job.payload.get("assignment_id") == assignment_id
        ]
        for jid in doomed:
            del self.jobs[jid]
        return len(doomed)

    def schedule_study_protocol(self, user_id: str, start_date: date) -> list[ScheduledJob]:
        """4-week protocol: 3 instruments dispatched at the end of weeks 2-4
        plus one coach follow-up reminder at the end of every week."""
        if user_id in self._protocol_users:
            raise ConflictError(f"study protocol already scheduled for {user_id!r}")
        self._protocol_users.add(user_id)
        jobs = []
        for week in range(1, PROTOCOL_WEEKS + 1):
            week_end = start_date + timedelta(days=7 * week - 1)
            if week >= 2:
                for instrument in PROTOCOL_INSTRUMENTS:
                    jobs.append(
                        self.add(
                            ScheduledJob(
                                job_id=f"dispatch:{user_id}:{instrument}:w{week}",
                                kind=JobKind.QUESTIONNAIRE_DISPATCH,
                                due_at=_at(week_end, DISPATCH_TIME),
                                payload={
                                    "user_id": user_id,
                                    "instrument": instrument,
                                    "week_index": week,
                                },
                            )
                        )
                    )
            jobs.append(
                self.add(
                    ScheduledJob(
                        job_id=f"followup:{user_id}:w{week}",
                        kind=JobKind.COACH_FOLLOWUP_REMINDER,
                        due_at=_at(week_end, FOLLOWUP_TIME),
                        payload={"user_id": user_id, "week_index": week},
                    )
                )
            )
        return jobs

    # -- firing ---------------------------------------------------------------

    def tick(self, clock_now: datetime) -> list[ScheduledJob]:
        """Fire every unfired job due by clock_now, at most once, in order."""
        if self._last_tick is not None and clock_now < self._last_tick:
            raise DomainError("tick time regression refused")
        due = sorted(
            (j for j in self.jobs.values() if not j.fired and j.due_at <= clock_now),
            key=lambda j: (j.due_at, j.job_id),
        )
        for job in due:
            job.fired = True
            job.fired_at = clock_now if clock_now > job.due_at else job.due_at
            job.late = self._last_tick is not None and job.due_at < self._last_tick
        self._last_tick = clock_now
        return due

    # -- inactivity -----------------------------------------------------------

    def inactivity_scan(
        self, users: list[UserProfile], clock_now: datetime
    ) -> list[InactivityAlert]:
        """Alert once per silence streak; re-alert only after the user
        interacts again and goes silent for another full period."""
        alerts = []
        for user in users:
            last = user.last_interaction_at or user.registered_at
            if last is None:
                continue
            period = timedelta(days=user.inactivity_period_days or DEFAULT_INACTIVITY_DAYS)
            if clock_now - last <= period:
                continue
            if self._inactivity_alerted.get(user.user_id, object()) == last:
                continue  # already alerted for this silence streak
            self._inactivity_alerted[user.user_id] = last
            alerts.append(
                InactivityAlert(
                    user_id=user.user_id,
                    silent_since=last,
                    period_days=user.inactivity_period_days,
                    detected_at=clock_now,
                )
            )
        return alerts
