"""Coaching backend: orchestration of users, plans, dialogs, scheduling,
adherence, alerts, and reports, with durable persistence.

All mutations flow through one `CoachingService` instance (single-writer
model); the HTTP layer in `api.py` serializes access with a lock. Every
entity change is written to the document store, and `CoachingService`
rebuilds its full state from the store at startup.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta, timezone
from enum import Enum

from . import stats
from .classifier import (
    FEATURE_NAMES,
    Hyperparams,
    SvmModel,
    extract_features,
    full_intake_dialog,
    generate_dataset,
    model_from_dict,
    model_to_dict,
    train,
)
from .dialog import (
    CompletionEvent,
    render_template,
    DialogDefinition,
    DialogSession,
    InputKind,
    InputSpec,
    SessionStatus,
    StateSpec,
    advance,
    expire_sessions,
    start_session,
)
from .domain import (
    Activity,
    ActivityClass,
    AdherenceReport,
    AdherenceThresholds,
    Assignment,
    AssignmentStatus,
    FeedbackEntry,
    Gender,
    Plan,
    Recurrence,
    TaskBundle,
    TernaryCategory,
    Topic,
    UserProfile,
    compute_adherence,
    expected_occurrences,
)
from .errors import ConflictError, DomainError, NotFoundError
from .gateway import ConsoleChannel, Gateway, WebhookChannel
from .instruments import (
    HapaStage,
    QuestionnaireResponse,
    QuestionnaireTemplate,
    build_dialog,
    builtin_template,
    classify_hapa_stage,
    preference_probe_summary,
    response_from_variables,
    score_response,
)
from .messages import InboundMessage, OutboundMessage
from .scheduler import Clock, JobKind, ScheduledJob, Scheduler

log = logging.getLogger(__name__)

FEEDBACK_COMPLETION = {"yes": 1.0, "partially": 0.5, "no": 0.0}

DEFAULT_MODEL_SEED = 0


class AlertKind(str, Enum):
    PROFILE_COMPLETE = "profile_complete"
    INACTIVITY = "inactivity"
    DETERIORATION = "deterioration"
    DIALOG_ESCALATION = "dialog_escalation"
    PLAN_EXPIRED = "plan_expired"


@dataclass
class CoachAlert:
    alert_id: str
    kind: AlertKind
    user_id: str
    created_at: datetime
    detail: str
    dedup_key: str
    acknowledged: bool = False


@dataclass
class PrivateMessage:
    message_id: str
    coach_id: str
    user_id: str
    body: str
    sent_at: datetime
    week_index: int | None = None


@dataclass
class FollowupReminder:
    user_id: str
    week_index: int
    due_at: datetime
    done: bool = False


@dataclass
class _SessionContext:
    kind: str  # intake | feedback | questionnaire
    assignment_id: str | None = None
    template_id: str | None = None
    instrument: str | None = None
    week_index: int | None = None
    occurrence_date: str | None = None


def _iso(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).isoformat()


def _parse_dt(s: str) -> datetime:
    return datetime.fromisoformat(s)


class CoachingService:
    def __init__(
        self,
        data_dir=None,
        clock: Clock | None = None,
        bot_base_url: str | None = None,
        bot_token: str | None = None,
        model: SvmModel | None = None,
    ):
        from .store import DocumentStore

        self.clock = clock or Clock(mode="simulated")
        self.store = DocumentStore(data_dir)
        self.scheduler = Scheduler()
        self.gateway = Gateway()
        self.console = ConsoleChannel()
        self.gateway.register_channel("console", self.console)
        if bot_base_url:
            self.gateway.register_channel(
                "webhook", WebhookChannel(base_url=bot_base_url, token=bot_token)
            )
        self.thresholds = AdherenceThresholds()

        self.users: dict[str, UserProfile] = {}
        self.activities: dict[str, Activity] = {}
        self.plans: dict[str, Plan] = {}
        self.tasks: dict[str, TaskBundle] = {}
        self.assignments: dict[str, Assignment] = {}
        self.feedback: dict[str, list[FeedbackEntry]] = {}  # assignment_id -> entries
        self.adherence: dict[str, AdherenceReport] = {}  # latest per assignment
        self.alerts: dict[str, CoachAlert] = {}
        self.private_messages: list[PrivateMessage] = []
        self.responses: list[QuestionnaireResponse] = []
        self.followups: dict[str, FollowupReminder] = {}
        self.sessions: dict[str, DialogSession] = {}
        self.session_contexts: dict[str, _SessionContext] = {}
        self.active_session_by_user: dict[str, str] = {}
        self.pending_sessions: dict[str, list[str]] = {}  # user -> queued session ids
        self._counters: dict[str, int] = {}
        self._alert_keys: set[str] = set()

        self.templates: dict[str, QuestionnaireTemplate] = {
            "TAM": builtin_template("tam"),
            "AttrakDiff": builtin_template("attrakdiff"),
            "HAPA": builtin_template("hapa"),
            "preference": builtin_template("preference"),
        }

        self._load()
        if model is not None:
            self.model = model
        elif self.store.get("meta", "model") is not None:
            self.model = model_from_dict(self.store.get("meta", "model").payload)
        else:
            # No clinic data available at first boot: fit the default model
            # on the synthetic clinic-shaped dataset so intake can classify.
            self.model = train(
                generate_dataset(375, seed=DEFAULT_MODEL_SEED),
                Hyperparams(seed=DEFAULT_MODEL_SEED),
            )
            self.store.put("meta", "model", model_to_dict(self.model), now=self.clock.now)

    # ------------------------------------------------------------------
    # Identifiers
    # ------------------------------------------------------------------

    def _next_id(self, prefix: str) -> str:
        self._counters[prefix] = self._counters.get(prefix, 0) + 1
        self.store.put("meta", "counters", dict(self._counters), now=self.clock.now)
        return f"{prefix}{self._counters[prefix]}"

    # ------------------------------------------------------------------
    # Registration and intake
    # ------------------------------------------------------------------

    def register_user(
        self,
        display_name: str,
        age: int,
        gender: str = "undisclosed",
        phone: str | None = None,
        locale: str = "en",
        channel_kind: str = "console",
        chat_id: str | None = None,
    ) -> UserProfile:
        if phone and any(u.phone == phone for u in self.users.values()):
            raise ConflictError(f"phone {phone!r} already registered")
        user_id = self._next_id("u")
        chat_id = chat_id or f"chat-{user_id}"
        if chat_id in self.gateway.bindings:
            raise ConflictError(f"chat {chat_id!r} already bound")
        user = UserProfile(
            user_id=user_id,
            display_name=display_name,
            age=age,
            gender=Gender(gender),
            phone=phone,
            locale=locale,
            registered_at=self.clock.now,
            channel_binding=(channel_kind, chat_id),
        )
        self.users[user_id] = user
        self.gateway.bind(chat_id, channel_kind, user_id)
        self._save_user(user)
        self._enqueue_session(user, full_intake_dialog(), _SessionContext(kind="intake"))
        return user

    def _chat_id(self, user: UserProfile) -> str:
        assert user.channel_binding is not None
        return user.channel_binding[1]

    # ------------------------------------------------------------------
    # Dialog sessions
    # ------------------------------------------------------------------

    def _definition_for(self, context: _SessionContext) -> DialogDefinition:
        if context.kind == "intake":
            return full_intake_dialog()
        if context.kind == "feedback":
            assignment = self.assignments[context.assignment_id]
            return self._feedback_dialog(assignment, date.fromisoformat(context.occurrence_date))
        if context.kind == "questionnaire":
            return build_dialog(self.templates[context.instrument])
        raise DomainError(f"unknown session kind {context.kind!r}")

    def _feedback_dialog(self, assignment: Assignment, day: date) -> DialogDefinition:
        """One yes/partially/no state per activity expected on `day`."""
        plan = self.plans[assignment.plan_id]
        due = [
            self.activities[aid]
            for aid in plan.activity_ids
            if day in expected_occurrences(plan, self.activities[aid])
        ]
        if not due:
            raise DomainError("no activities due on this date")
        states: dict[str, StateSpec] = {}
        for i, activity in enumerate(due):
            target = f"ask_{due[i + 1].activity_id}" if i + 1 < len(due) else "done"
            labels = tuple(FEEDBACK_COMPLETION)
            states[f"ask_{activity.activity_id}"] = StateSpec(
                state_id=f"ask_{activity.activity_id}",
                prompt_template=f"Did you complete: {activity.title}?",
                reprompt_text="Please answer yes, partially, or no.",
                input=InputSpec(InputKind.CHOICE, labels=labels),
                capture=f"fb_{activity.activity_id}",
                transitions={label: target for label in labels},
            )
        states["done"] = StateSpec(state_id="done")
        return DialogDefinition(
            dialog_id=f"feedback_{assignment.assignment_id}_{day.isoformat()}",
            entry_state=f"ask_{due[0].activity_id}",
            states=states,
            terminal_states=frozenset({"done"}),
            required_captures=frozenset(f"fb_{a.activity_id}" for a in due),
        )

    def _enqueue_session(
        self, user: UserProfile, definition: DialogDefinition, context: _SessionContext
    ) -> str:
        session_id = self._next_id("s")
        session, outbound, event = start_session(
            definition,
            session_id=session_id,
            user_id=user.user_id,
            chat_id=self._chat_id(user),
            now=self.clock.now,
            user_variables={"name": user.display_name},
        )
        self.sessions[session_id] = session
        self.session_contexts[session_id] = context
        if user.user_id in self.active_session_by_user:
            # User is mid-dialog: park this one, start it on completion.
            self.pending_sessions.setdefault(user.user_id, []).append(session_id)
            self._save_session(session_id)
            return session_id
        self.active_session_by_user[user.user_id] = session_id
        self._save_session(session_id)
        for msg in outbound:
            self.gateway.send(msg)
        if event is not None:
            self._on_dialog_complete(session_id, event)
        return session_id

    def _start_next_pending(self, user_id: str) -> None:
        self.active_session_by_user.pop(user_id, None)
        queue = self.pending_sessions.get(user_id) or []
        while queue:
            session_id = queue.pop(0)
            session = self.sessions[session_id]
            if session.status is not SessionStatus.ACTIVE:
                continue
            self.active_session_by_user[user_id] = session_id
            context = self.session_contexts[session_id]
            definition = self._definition_for(context)
            state = definition.states[session.current_state]
            session.last_activity_at = self.clock.now
            self._save_session(session_id)
            prompt = OutboundMessage(
                chat_id=self._chat_id(self.users[user_id]),
                text=render_template(state.prompt_template, session.variables),
                keyboard=state.input.labels
                if state.input and state.input.kind is InputKind.CHOICE
                else None,
                correlation_id=f"{session_id}:{state.state_id}",
            )
            self.gateway.send(prompt)
            return

    def process_inbound(self, inbound: InboundMessage) -> None:
        user_id = self.gateway.user_for_chat(inbound.chat_id)
        if user_id is None:
            log.warning("inbound from unbound chat %s dropped", inbound.chat_id)
            return
        user = self.users[user_id]
        user.touch(inbound.received_at)
        self._save_user(user)
        session_id = self.active_session_by_user.get(user_id)
        if session_id is None:
            return  # free chat outside any dialog; interaction already recorded
        session = self.sessions[session_id]
        context = self.session_contexts[session_id]
        definition = self._definition_for(context)
        session, outbound, event, escalation = advance(
            session, inbound, definition, now=self.clock.now
        )
        self._save_session(session_id)
        for msg in outbound:
            self.gateway.send(msg)
        if escalation is not None:
            self._create_alert(
                AlertKind.DIALOG_ESCALATION,
                user_id,
                f"User stuck in dialog {escalation.dialog_id} at state "
                f"{escalation.state_id} after {escalation.attempts} attempts",
                dedup_key=f"escalation:{session_id}:{escalation.state_id}",
            )
        if session.status is SessionStatus.ABANDONED:
            self._start_next_pending(user_id)
        if event is not None:
            self._on_dialog_complete(session_id, event)

    def drain_channels(self) -> None:
        """Pull and process everything pending on all channels."""
        for inbound in self.gateway.receive_all():
            self.process_inbound(inbound)

    def _on_dialog_complete(self, session_id: str, event: CompletionEvent) -> None:
        context = self.session_contexts[session_id]
        user = self.users[event.user_id]
        if context.kind == "intake":
            user.intake_complete = True
            features = extract_features(
                {k: v for k, v in event.variables.items() if k in FEATURE_NAMES}
            )
            label, _ = self.model.predict(features)
            user.classify(ActivityClass(label))
            self._save_user(user)
            self._create_alert(
                AlertKind.PROFILE_COMPLETE,
                user.user_id,
                f"{user.display_name} completed intake; classified {label}",
                dedup_key=f"profile:{user.user_id}",
            )
        elif context.kind == "feedback":
            entries = []
            day = date.fromisoformat(context.occurrence_date)
            for name, value in event.variables.items():
                if not name.startswith("fb_"):
                    continue
                entries.append(
                    FeedbackEntry(
                        user_id=user.user_id,
                        assignment_id=context.assignment_id,
                        activity_id=name[3:],
                        occurrence_date=day,
                        completion=FEEDBACK_COMPLETION[str(value)],
                        recorded_at=self.clock.now,
                        note=str(event.variables.get("note") or "") or None,
                    )
                )
            assignment = self.assignments[context.assignment_id]
            if assignment.status is AssignmentStatus.ACTIVE:
                self.record_feedback(context.assignment_id, entries)
            else:
                # Dialog answered after the plan expired; the final report
                # is already frozen, so late answers are dropped.
                log.info(
                    "late feedback for %s discarded (assignment %s)",
                    context.assignment_id,
                    assignment.status.value,
                )
        elif context.kind == "questionnaire":
            template = self.templates[context.instrument]
            response = response_from_variables(
                template,
                user_id=user.user_id,
                week_index=context.week_index or 0,
                variables=event.variables,
                submitted_at=self.clock.now,
            )
            self.responses.append(response)
            self.store.put(
                "response",
                self._next_id("r"),
                _response_doc(response),
                now=self.clock.now,
            )
        self._save_session(session_id)
        self._start_next_pending(event.user_id)

    def expire_idle_sessions(self, idle_limit: timedelta | None = None) -> int:
        kwargs = {"idle_limit": idle_limit} if idle_limit else {}
        abandoned = expire_sessions(list(self.sessions.values()), self.clock.now, **kwargs)
        for session in abandoned:
            self._save_session(session.session_id)
            if self.active_session_by_user.get(session.user_id) == session.session_id:
                self._start_next_pending(session.user_id)
        return len(abandoned)

    # ------------------------------------------------------------------
    # Content and assignments
    # ------------------------------------------------------------------

    def create_activity(self, **fields) -> Activity:
        activity = Activity(
            activity_id=self._next_id("act"),
            title=fields["title"],
            instructions=fields.get("instructions", ""),
            topic=Topic(fields["topic"]),
            recurrence=Recurrence(fields.get("recurrence", "daily")),
            effort=int(fields.get("effort", 3)),
        )
        self.activities[activity.activity_id] = activity
        self.store.put("activity", activity.activity_id, _activity_doc(activity), now=self.clock.now)
        return activity

    def create_plan(self, **fields) -> Plan:
        for aid in fields["activity_ids"]:
            if aid not in self.activities:
                raise NotFoundError(f"unknown activity {aid!r}")
        plan = Plan(
            plan_id=self._next_id("p"),
            category=fields.get("category", ""),
            description=fields.get("description", ""),
            activity_ids=tuple(fields["activity_ids"]),
            trigger_time=time.fromisoformat(fields["trigger_time"]),
            feedback_time=time.fromisoformat(fields["feedback_time"]),
            start_date=date.fromisoformat(fields["start_date"]),
            expiration_date=date.fromisoformat(fields["expiration_date"]),
        )
        self.plans[plan.plan_id] = plan
        self.store.put("plan", plan.plan_id, _plan_doc(plan), now=self.clock.now)
        return plan

    def create_task(self, title: str, plan_ids: list[str]) -> TaskBundle:
        for pid in plan_ids:
            if pid not in self.plans:
                raise NotFoundError(f"unknown plan {pid!r}")
        task = TaskBundle(task_id=self._next_id("t"), title=title, plan_ids=tuple(plan_ids))
        self.tasks[task.task_id] = task
        self.store.put("task", task.task_id, _task_doc(task), now=self.clock.now)
        return task

    def assign_plan(self, user_id: str, plan_id: str) -> tuple[Assignment, list[ScheduledJob]]:
        user = self._require_user(user_id)
        if not user.intake_complete or user.activity_class is ActivityClass.UNCLASSIFIED:
            raise DomainError(f"user {user_id!r} has not completed intake")
        plan = self.plans.get(plan_id)
        if plan is None:
            raise NotFoundError(f"unknown plan {plan_id!r}")
        for a in self.assignments.values():
            if (
                a.user_id == user_id
                and a.plan_id == plan_id
                and a.status is AssignmentStatus.ACTIVE
            ):
                raise ConflictError(f"user already has an active assignment of plan {plan_id!r}")
        assignment = Assignment(
            assignment_id=self._next_id("as"),
            user_id=user_id,
            plan_id=plan_id,
            assigned_at=self.clock.now,
        )
        jobs = self.scheduler.schedule_assignment(assignment, plan, self.clock.now)
        self.assignments[assignment.assignment_id] = assignment
        self._save_assignment(assignment)
        for job in jobs:
            self._save_job(job)
        return assignment, jobs

    def start_study_protocol(self, user_id: str, start_date: date) -> list[ScheduledJob]:
        self._require_user(user_id)
        jobs = self.scheduler.schedule_study_protocol(user_id, start_date)
        self.store.put(
            "protocol", user_id, {"start_date": start_date.isoformat()}, now=self.clock.now
        )
        for job in jobs:
            self._save_job(job)
        return jobs

    def set_inactivity_period(self, user_id: str, days: int) -> None:
        if days <= 0:
            raise DomainError("inactivity period must be positive")
        user = self._require_user(user_id)
        user.inactivity_period_days = days
        self._save_user(user)

    def _require_user(self, user_id: str) -> UserProfile:
        user = self.users.get(user_id)
        if user is None:
            raise NotFoundError(f"unknown user {user_id!r}")
        return user

    # ------------------------------------------------------------------
    # Feedback and adherence
    # ------------------------------------------------------------------

    def record_feedback(
        self, assignment_id: str, entries: list[FeedbackEntry]
    ) -> AdherenceReport:
        assignment = self.assignments.get(assignment_id)
        if assignment is None:
            raise NotFoundError(f"unknown assignment {assignment_id!r}")
        if assignment.status is not AssignmentStatus.ACTIVE:
            raise DomainError(f"assignment {assignment_id!r} is not active")
        stored = self.feedback.setdefault(assignment_id, [])
        stored.extend(entries)
        for entry in entries:
            self.store.put(
                "feedback",
                f"{assignment_id}:{entry.activity_id}:{entry.occurrence_date.isoformat()}",
                _feedback_doc(entry),
                now=self.clock.now,
            )
        return self._recompute_adherence(assignment)

    def _recompute_adherence(
        self, assignment: Assignment, full_window: bool = False
    ) -> AdherenceReport:
        plan = self.plans[assignment.plan_id]
        activities = [self.activities[aid] for aid in plan.activity_ids]
        until = None if full_window else min(self.clock.now.date(), plan.expiration_date)
        previous = self.adherence.get(assignment.assignment_id)
        report = compute_adherence(
            self.feedback.get(assignment.assignment_id, []),
            plan,
            activities,
            self.thresholds,
            computed_at=self.clock.now,
            until=until,
        )
        if not report.user_id:
            report = AdherenceReport(
                user_id=assignment.user_id,
                assignment_id=assignment.assignment_id,
                per_activity_mean=report.per_activity_mean,
                overall_mean=report.overall_mean,
                binary_category=report.binary_category,
                ternary_category=report.ternary_category,
                computed_at=report.computed_at,
            )
        self.adherence[assignment.assignment_id] = report
        self.store.put(
            "adherence", assignment.assignment_id, _adherence_doc(report), now=self.clock.now
        )
        if previous is not None and report.ternary_category.rank < previous.ternary_category.rank:
            self._create_alert(
                AlertKind.DETERIORATION,
                assignment.user_id,
                f"Adherence dropped {previous.ternary_category.value} -> "
                f"{report.ternary_category.value} on assignment {assignment.assignment_id}",
                dedup_key=(
                    f"deterioration:{assignment.assignment_id}:"
                    f"{previous.ternary_category.value}>{report.ternary_category.value}:"
                    f"{self.clock.now.date().isoformat()}"
                ),
            )
        return report

    def adherence_for_user(self, user_id: str) -> list[AdherenceReport]:
        self._require_user(user_id)
        return [
            self.adherence[a.assignment_id]
            for a in sorted(self.assignments.values(), key=lambda a: a.assignment_id)
            if a.user_id == user_id and a.assignment_id in self.adherence
        ]

    def user_binary_group(self, user_id: str) -> str:
        """User-level high/low adherence split over all their assignments."""
        reports = self.adherence_for_user(user_id)
        if not reports:
            return "low"
        mean = sum(r.overall_mean for r in reports) / len(reports)
        return "high" if mean >= self.thresholds.binary else "low"

    def user_behavior_mean(self, user_id: str) -> float:
        """Mean adherence across the user's assignments mapped onto the
        1..7 item scale, used as the behavior level for staging."""
        reports = self.adherence_for_user(user_id)
        if not reports:
            return 1.0
        mean = sum(r.overall_mean for r in reports) / len(reports)
        return 1.0 + 6.0 * mean

    # ------------------------------------------------------------------
    # Scheduler driving
    # ------------------------------------------------------------------

    def tick(self, now: datetime | None = None) -> list[ScheduledJob]:
        if now is not None:
            self.clock.set(now)
        clock_now = self.clock.now
        self.drain_channels()
        fired = self.scheduler.tick(clock_now)
        for job in fired:
            self._save_job(job)
            try:
                self._handle_job(job)
            except DomainError as exc:
                log.warning("job %s skipped: %s", job.job_id, exc)
        for alert in self.scheduler.inactivity_scan(list(self.users.values()), clock_now):
            self._create_alert(
                AlertKind.INACTIVITY,
                alert.user_id,
                f"No interaction since {_iso(alert.silent_since)} "
                f"(period {alert.period_days} days)",
                dedup_key=f"inactivity:{alert.user_id}:{_iso(alert.silent_since)}",
            )
        self.store.put(
            "meta",
            "scheduler",
            {
                "last_tick": _iso(clock_now),
                "protocol_users": sorted(self.scheduler._protocol_users),
                "inactivity_alerted": {
                    uid: _iso(ts) if ts else None
                    for uid, ts in self.scheduler._inactivity_alerted.items()
                },
            },
            now=clock_now,
        )
        self.drain_channels()
        return fired

    def _handle_job(self, job: ScheduledJob) -> None:
        payload = job.payload
        if job.kind in (JobKind.PLAN_NOTIFICATION, JobKind.FEEDBACK_COLLECTION, JobKind.PLAN_EXPIRATION):
            assignment = self.assignments.get(payload["assignment_id"])
            if assignment is None:
                return
            user = self.users[assignment.user_id]
            plan = self.plans[assignment.plan_id]
            if job.kind is JobKind.PLAN_NOTIFICATION:
                if assignment.status is not AssignmentStatus.ACTIVE:
                    return
                if payload.get("phase") == "availability":
                    text = (
                        f"A new plan is available for you: {plan.category or plan.plan_id} "
                        f"({plan.description or 'see your activities'}), "
                        f"running {plan.start_date.isoformat()} to {plan.expiration_date.isoformat()}."
                    )
                else:
                    day = date.fromisoformat(payload["date"])
                    titles = [
                        self.activities[aid].title
                        for aid in plan.activity_ids
                        if day in expected_occurrences(plan, self.activities[aid])
                    ]
                    if not titles:
                        return
                    text = "Today's activities: " + "; ".join(titles)
                self.gateway.send(OutboundMessage(chat_id=self._chat_id(user), text=text))
            elif job.kind is JobKind.FEEDBACK_COLLECTION:
                if assignment.status is not AssignmentStatus.ACTIVE:
                    return
                day = date.fromisoformat(payload["date"])
                try:
                    definition = self._feedback_dialog(assignment, day)
                except DomainError:
                    return  # nothing due that day
                self._supersede_stale_feedback(assignment.assignment_id, day)
                self._enqueue_session(
                    user,
                    definition,
                    _SessionContext(
                        kind="feedback",
                        assignment_id=assignment.assignment_id,
                        occurrence_date=day.isoformat(),
                    ),
                )
            else:  # PLAN_EXPIRATION
                assignment.status = AssignmentStatus.EXPIRED
                self._save_assignment(assignment)
                report = self._recompute_adherence(assignment, full_window=True)
                self._create_alert(
                    AlertKind.PLAN_EXPIRED,
                    user.user_id,
                    f"Plan {plan.plan_id} expired; overall adherence "
                    f"{report.overall_mean:.2f} ({report.ternary_category.value})",
                    dedup_key=f"expired:{assignment.assignment_id}",
                )
        elif job.kind is JobKind.QUESTIONNAIRE_DISPATCH:
            self.dispatch_questionnaire(
                payload["instrument"], payload["user_id"], payload.get("week_index", 0)
            )
        elif job.kind is JobKind.COACH_FOLLOWUP_REMINDER:
            key = f"{payload['user_id']}:w{payload['week_index']}"
            reminder = FollowupReminder(
                user_id=payload["user_id"],
                week_index=payload["week_index"],
                due_at=job.due_at,
            )
            self.followups[key] = reminder
            self.store.put("followup", key, _followup_doc(reminder), now=self.clock.now)

    def _supersede_stale_feedback(self, assignment_id: str, day: date) -> None:
        """Abandon earlier-day feedback dialogs for the assignment: each
        asks about one specific day and is stale once the next day's
        collection comes due. Missing answers count as zero adherence."""
        for session_id, context in list(self.session_contexts.items()):
            if context.kind != "feedback" or context.assignment_id != assignment_id:
                continue
            session = self.sessions[session_id]
            if session.status is not SessionStatus.ACTIVE:
                continue
            if date.fromisoformat(context.occurrence_date) >= day:
                continue
            session.status = SessionStatus.ABANDONED
            self._save_session(session_id)
            if self.active_session_by_user.get(session.user_id) == session_id:
                self._start_next_pending(session.user_id)

    def dispatch_questionnaire(self, instrument: str, user_id: str, week_index: int) -> str:
        if instrument not in self.templates:
            raise NotFoundError(f"unknown instrument {instrument!r}")
        user = self._require_user(user_id)
        template = self.templates[instrument]
        return self._enqueue_session(
            user,
            build_dialog(template),
            _SessionContext(
                kind="questionnaire",
                template_id=template.template_id,
                instrument=instrument,
                week_index=week_index,
            ),
        )

    # ------------------------------------------------------------------
    # Alerts and messaging
    # ------------------------------------------------------------------

    def _create_alert(
        self, kind: AlertKind, user_id: str, detail: str, dedup_key: str
    ) -> CoachAlert | None:
        if dedup_key in self._alert_keys:
            return None
        self._alert_keys.add(dedup_key)
        alert = CoachAlert(
            alert_id=self._next_id("al"),
            kind=kind,
            user_id=user_id,
            created_at=self.clock.now,
            detail=detail,
            dedup_key=dedup_key,
        )
        self.alerts[alert.alert_id] = alert
        self.store.put("alert", alert.alert_id, _alert_doc(alert), now=self.clock.now)
        return alert

    def acknowledge_alert(self, alert_id: str) -> CoachAlert:
        alert = self.alerts.get(alert_id)
        if alert is None:
            raise NotFoundError(f"unknown alert {alert_id!r}")
        if not alert.acknowledged:
            alert.acknowledged = True
            self.store.put("alert", alert.alert_id, _alert_doc(alert), now=self.clock.now)
        return alert

    def send_private_message(
        self, user_id: str, body: str, coach_id: str = "coach", week_index: int | None = None
    ) -> PrivateMessage:
        user = self._require_user(user_id)
        if not body:
            raise DomainError("message body must be non-empty")
        message = PrivateMessage(
            message_id=self._next_id("m"),
            coach_id=coach_id,
            user_id=user_id,
            body=body,
            sent_at=self.clock.now,
            week_index=week_index,
        )
        self.private_messages.append(message)
        self.store.put("pmessage", message.message_id, _pmessage_doc(message), now=self.clock.now)
        self.gateway.send(
            OutboundMessage(chat_id=self._chat_id(user), text=f"Message from your coach: {body}")
        )
        if week_index is not None:
            key = f"{user_id}:w{week_index}"
            reminder = self.followups.get(key)
            if reminder is not None and not reminder.done:
                reminder.done = True
                self.store.put("followup", key, _followup_doc(reminder), now=self.clock.now)
        return message

    # ------------------------------------------------------------------
    # Reports
    # ------------------------------------------------------------------

    def report_descriptives(self) -> dict:
        users = sorted(self.users.values(), key=lambda u: u.user_id)
        if not users:
            return {"participants": 0}
        ages = [float(u.age) for u in users]
        summary = stats.descriptives(ages)
        genders: dict[str, int] = {}
        for u in users:
            genders[u.gender.value] = genders.get(u.gender.value, 0) + 1
        return {
            "participants": len(users),
            "age": {
                "n": summary.n,
                "mean": summary.mean,
                "std_error": summary.std_error,
                "median": summary.median,
                "std_deviation": summary.std_deviation,
                "variance": summary.variance,
                "range": summary.range,
                "min": summary.min,
                "max": summary.max,
            },
            "gender": genders,
        }

    def _scores_by_user_week(self, instrument: str) -> dict[str, dict[int, dict[str, float]]]:
        template = self.templates[instrument]
        out: dict[str, dict[int, dict[str, float]]] = {}
        for response in self.responses:
            if response.template_id != template.template_id:
                continue
            scores = score_response(template, response)
            out.setdefault(response.user_id, {})[response.week_index] = scores.per_dimension
        return out

    def report_instrument(self, instrument: str) -> dict:
        """Weekly per-dimension means plus one-sample t vs the midpoint,
        repeated-measures F over weeks, and adherence-split F per dimension."""
        if instrument not in self.templates:
            raise NotFoundError(f"unknown instrument {instrument!r}")
        template = self.templates[instrument]
        midpoint = (
            sum(i.midpoint for i in template.items) / len(template.items)
        )
        by_user = self._scores_by_user_week(instrument)
        weeks = sorted({w for weeks in by_user.values() for w in weeks})
        dimensions = sorted(template.dimensions)
        report: dict = {"instrument": instrument, "weeks": weeks, "dimensions": {}}
        binary_by_user = {uid: self.user_binary_group(uid) for uid in by_user}
        for dim in dimensions:
            weekly_means = {}
            for week in weeks:
                vals = [
                    by_user[u][week][dim]
                    for u in by_user
                    if week in by_user[u] and dim in by_user[u][week]
                ]
                if vals:
                    weekly_means[week] = sum(vals) / len(vals)
            user_means = [
                sum(w[dim] for w in weeks_map.values()) / len(weeks_map)
                for weeks_map in by_user.values()
                if weeks_map
            ]
            entry: dict = {"weekly_means": weekly_means}
            if len(user_means) >= 2:
                t = stats.one_sample_t(user_means, midpoint)
                entry["one_sample_t"] = {
                    "statistic": t.statistic,
                    "df": t.df[0],
                    "p_value": t.p_value,
                }
            complete = [
                [weeks_map[w][dim] for w in weeks]
                for weeks_map in by_user.values()
                if all(w in weeks_map for w in weeks)
            ]
            if len(complete) >= 2 and len(weeks) >= 2:
                f = stats.rm_anova(complete)
                entry["rm_anova"] = {
                    "statistic": f.statistic,
                    "df": list(f.df),
                    "p_value": f.p_value,
                }
                entry["posthoc"] = [
                    {
                        "weeks": [weeks[i], weeks[j]],
                        "statistic": r.statistic,
                        "df": r.df[0],
                        "p_value": r.p_value,
                    }
                    for (i, j), r in stats.posthoc_pairwise(complete)
                ]
            groups = {}
            for uid, weeks_map in by_user.items():
                if not weeks_map:
                    continue
                mean = sum(w[dim] for w in weeks_map.values()) / len(weeks_map)
                groups.setdefault(binary_by_user[uid], []).append(mean)
            if len(groups) == 2 and all(len(g) >= 2 for g in groups.values()):
                f = stats.anova_between([groups["high"], groups["low"]])
                entry["adherence_anova"] = {
                    "statistic": f.statistic,
                    "df": list(f.df),
                    "p_value": f.p_value,
                }
            report["dimensions"][dim] = entry
        return report

    def report_preferences(self) -> dict:
        template = self.templates["preference"]
        responses = [
            r for r in self.responses if r.template_id == template.template_id
        ]
        return {
            "responses": len(responses),
            "table": preference_probe_summary(template, responses),
        }

    def report_hapa_stages(self) -> dict:
        template = self.templates["HAPA"]
        latest: dict[str, QuestionnaireResponse] = {}
        for response in self.responses:
            if response.template_id != template.template_id:
                continue
            held = latest.get(response.user_id)
            if held is None or response.week_index >= held.week_index:
                latest[response.user_id] = response
        stages: dict[str, str] = {}
        counts = {stage.value: 0 for stage in HapaStage}
        for user_id, response in sorted(latest.items()):
            scores = score_response(template, response)
            stage = classify_hapa_stage(scores, self.user_behavior_mean(user_id))
            stages[user_id] = stage.value
            counts[stage.value] += 1
        return {"stages": stages, "counts": counts}

    # ------------------------------------------------------------------
    # Persistence
    # ------------------------------------------------------------------

    def _save_user(self, user: UserProfile) -> None:
        self.store.put("user", user.user_id, _user_doc(user), now=self.clock.now)

    def _save_assignment(self, assignment: Assignment) -> None:
        self.store.put(
            "assignment", assignment.assignment_id, _assignment_doc(assignment), now=self.clock.now
        )

    def _save_job(self, job: ScheduledJob) -> None:
        self.store.put("job", job.job_id, _job_doc(job), now=self.clock.now)

    def _save_session(self, session_id: str) -> None:
        session = self.sessions[session_id]
        context = self.session_contexts[session_id]
        self.store.put(
            "session",
            session_id,
            {
                "session": _session_doc(session),
                "context": context.__dict__,
                "active": self.active_session_by_user.get(session.user_id) == session_id,
                "pending": self.pending_sessions.get(session.user_id, []),
            },
            now=self.clock.now,
        )

    def _load(self) -> None:
        counters = self.store.get("meta", "counters")
        if counters is not None:
            self._counters = {k: int(v) for k, v in counters.payload.items()}
        for rec in self.store.list("user"):
            user = _user_from_doc(rec.payload)
            self.users[user.user_id] = user
            if user.channel_binding is not None:
                kind, chat_id = user.channel_binding
                if kind in self.gateway.channels:
                    self.gateway.bind(chat_id, kind, user.user_id)
        for rec in self.store.list("activity"):
            activity = _activity_from_doc(rec.payload)
            self.activities[activity.activity_id] = activity
        for rec in self.store.list("plan"):
            plan = _plan_from_doc(rec.payload)
            self.plans[plan.plan_id] = plan
        for rec in self.store.list("task"):
            task = _task_from_doc(rec.payload)
            self.tasks[task.task_id] = task
        for rec in self.store.list("assignment"):
            assignment = _assignment_from_doc(rec.payload)
            self.assignments[assignment.assignment_id] = assignment
        for rec in self.store.list("feedback"):
            entry = _feedback_from_doc(rec.payload)
            self.feedback.setdefault(entry.assignment_id, []).append(entry)
        for rec in self.store.list("adherence"):
            report = _adherence_from_doc(rec.payload)
            self.adherence[report.assignment_id] = report
        for rec in self.store.list("alert"):
            alert = _alert_from_doc(rec.payload)
            self.alerts[alert.alert_id] = alert
            self._alert_keys.add(alert.dedup_key)
        for rec in self.store.list("pmessage"):
            self.private_messages.append(_pmessage_from_doc(rec.payload))
        self.private_messages.sort(key=lambda m: m.message_id)
        for rec in self.store.list("response"):
            self.responses.append(_response_from_doc(rec.payload))
        self.responses.sort(key=lambda r: (r.submitted_at, r.user_id, r.template_id))
        for rec in self.store.list("followup"):
            reminder = _followup_from_doc(rec.payload)
            self.followups[f"{reminder.user_id}:w{reminder.week_index}"] = reminder
        for rec in self.store.list("session"):
            session = _session_from_doc(rec.payload["session"])
            self.sessions[session.session_id] = session
            self.session_contexts[session.session_id] = _SessionContext(
                **rec.payload["context"]
            )
            if rec.payload.get("active") and session.status is SessionStatus.ACTIVE:
                self.active_session_by_user[session.user_id] = session.session_id
            elif session.status is SessionStatus.ACTIVE:
                self.pending_sessions.setdefault(session.user_id, []).append(
                    session.session_id
                )
        for user_id, queue in self.pending_sessions.items():
            queue.sort()
        for rec in self.store.list("job"):
            job = _job_from_doc(rec.payload)
            self.scheduler.jobs[job.job_id] = job
        for rec in self.store.list("protocol"):
            self.scheduler._protocol_users.add(rec.record_id)
        meta = self.store.get("meta", "scheduler")
        if meta is not None:
            self.scheduler._last_tick = _parse_dt(meta.payload["last_tick"])
            self.scheduler._inactivity_alerted = {
                uid: _parse_dt(ts) if ts else None
                for uid, ts in meta.payload.get("inactivity_alerted", {}).items()
            }
            self.scheduler._protocol_users |= set(meta.payload.get("protocol_users", []))


# ---------------------------------------------------------------------------
# Document (de)serialization
# ---------------------------------------------------------------------------

def _user_doc(u: UserProfile) -> dict:
    return {
        "user_id": u.user_id,
        "display_name": u.display_name,
        "age": u.age,
        "gender": u.gender.value,
        "phone": u.phone,
        "locale": u.locale,
        "registered_at": _iso(u.registered_at) if u.registered_at else None,
        "channel_binding": list(u.channel_binding) if u.channel_binding else None,
        "activity_class": u.activity_class.value,
        "intake_complete": u.intake_complete,
        "last_interaction_at": _iso(u.last_interaction_at) if u.last_interaction_at else None,
        "inactivity_period_days": u.inactivity_period_days,
    }


def _user_from_doc(d: dict) -> UserProfile:
    return UserProfile(
        user_id=d["user_id"],
        display_name=d["display_name"],
        age=d["age"],
        gender=Gender(d["gender"]),
        phone=d.get("phone"),
        locale=d.get("locale", "en"),
        registered_at=_parse_dt(d["registered_at"]) if d.get("registered_at") else None,
        channel_binding=tuple(d["channel_binding"]) if d.get("channel_binding") else None,
        activity_class=ActivityClass(d["activity_class"]),
        intake_complete=d["intake_complete"],
        last_interaction_at=_parse_dt(d["last_interaction_at"])
        if d.get("last_interaction_at")
        else None,
        inactivity_period_days=d.get("inactivity_period_days", 7),
    )


def _activity_doc(a: Activity) -> dict:
    return {
        "activity_id": a.activity_id,
        "title": a.title,
        "instructions": a.instructions,
        "topic": a.topic.value,
        "recurrence": a.recurrence.value,
        "effort": a.effort,
    }


def _activity_from_doc(d: dict) -> Activity:
    return Activity(
        activity_id=d["activity_id"],
        title=d["title"],
        instructions=d.get("instructions", ""),
        topic=Topic(d["topic"]),
        recurrence=Recurrence(d["recurrence"]),
        effort=d.get("effort", 3),
    )


def _plan_doc(p: Plan) -> dict:
    return {
        "plan_id": p.plan_id,
        "category": p.category,
        "description": p.description,
        "activity_ids": list(p.activity_ids),
        "trigger_time": p.trigger_time.isoformat(),
        "feedback_time": p.feedback_time.isoformat(),
        "start_date": p.start_date.isoformat(),
        "expiration_date": p.expiration_date.isoformat(),
    }


def _plan_from_doc(d: dict) -> Plan:
    return Plan(
        plan_id=d["plan_id"],
        category=d.get("category", ""),
        description=d.get("description", ""),
        activity_ids=tuple(d["activity_ids"]),
        trigger_time=time.fromisoformat(d["trigger_time"]),
        feedback_time=time.fromisoformat(d["feedback_time"]),
        start_date=date.fromisoformat(d["start_date"]),
        expiration_date=date.fromisoformat(d["expiration_date"]),
    )


def _task_doc(t: TaskBundle) -> dict:
    return {"task_id": t.task_id, "title": t.title, "plan_ids": list(t.plan_ids)}


def _task_from_doc(d: dict) -> TaskBundle:
    return TaskBundle(task_id=d["task_id"], title=d["title"], plan_ids=tuple(d["plan_ids"]))


def _assignment_doc(a: Assignment) -> dict:
    return {
        "assignment_id": a.assignment_id,
        "user_id": a.user_id,
        "plan_id": a.plan_id,
        "assigned_at": _iso(a.assigned_at),
        "status": a.status.value,
    }


def _assignment_from_doc(d: dict) -> Assignment:
    return Assignment(
        assignment_id=d["assignment_id"],
        user_id=d["user_id"],
        plan_id=d["plan_id"],
        assigned_at=_parse_dt(d["assigned_at"]),
        status=AssignmentStatus(d["status"]),
    )


def _feedback_doc(e: FeedbackEntry) -> dict:
    return {
        "user_id": e.user_id,
        "assignment_id": e.assignment_id,
        "activity_id": e.activity_id,
        "occurrence_date": e.occurrence_date.isoformat(),
        "completion": e.completion,
        "recorded_at": _iso(e.recorded_at),
        "note": e.note,
    }


def _feedback_from_doc(d: dict) -> FeedbackEntry:
    return FeedbackEntry(
        user_id=d["user_id"],
        assignment_id=d["assignment_id"],
        activity_id=d["activity_id"],
        occurrence_date=date.fromisoformat(d["occurrence_date"]),
        completion=d["completion"],
        recorded_at=_parse_dt(d["recorded_at"]),
        note=d.get("note"),
    )


def _adherence_doc(r: AdherenceReport) -> dict:
    return {
        "user_id": r.user_id,
        "assignment_id": r.assignment_id,
        "per_activity_mean": r.per_activity_mean,
        "overall_mean": r.overall_mean,
        "binary_category": r.binary_category.value,
        "ternary_category": r.ternary_category.value,
        "computed_at": _iso(r.computed_at),
    }


def _adherence_from_doc(d: dict) -> AdherenceReport:
    from .domain import BinaryCategory

    return AdherenceReport(
        user_id=d["user_id"],
        assignment_id=d["assignment_id"],
        per_activity_mean=dict(d["per_activity_mean"]),
        overall_mean=d["overall_mean"],
        binary_category=BinaryCategory(d["binary_category"]),
        ternary_category=TernaryCategory(d["ternary_category"]),
        computed_at=_parse_dt(d["computed_at"]),
    )


def _alert_doc(a: CoachAlert) -> dict:
    return {
        "alert_id": a.alert_id,
        "kind": a.kind.value,
        "user_id": a.user_id,
        "created_at": _iso(a.created_at),
        "detail": a.detail,
        "dedup_key": a.dedup_key,
        "acknowledged": a.acknowledged,
    }


def _alert_from_doc(d: dict) -> CoachAlert:
    return CoachAlert(
        alert_id=d["alert_id"],
        kind=AlertKind(d["kind"]),
        user_id=d["user_id"],
        created_at=_parse_dt(d["created_at"]),
        detail=d["detail"],
        dedup_key=d["dedup_key"],
        acknowledged=d["acknowledged"],
    )


def _pmessage_doc(m: PrivateMessage) -> dict:
    return {
        "message_id": m.message_id,
        "coach_id": m.coach_id,
        "user_id": m.user_id,
        "body": m.body,
        "sent_at": _iso(m.sent_at),
        "week_index": m.week_index,
    }


def _pmessage_from_doc(d: dict) -> PrivateMessage:
    return PrivateMessage(
        message_id=d["message_id"],
        coach_id=d["coach_id"],
        user_id=d["user_id"],
        body=d["body"],
        sent_at=_parse_dt(d["sent_at"]),
        week_index=d.get("week_index"),
    )


def _response_doc(r: QuestionnaireResponse) -> dict:
    return {
        "user_id": r.user_id,
        "template_id": r.template_id,
        "week_index": r.week_index,
        "answers": r.answers,
        "submitted_at": _iso(r.submitted_at),
    }


def _response_from_doc(d: dict) -> QuestionnaireResponse:
    return QuestionnaireResponse(
        user_id=d["user_id"],
        template_id=d["template_id"],
        week_index=d["week_index"],
        answers=dict(d["answers"]),
        submitted_at=_parse_dt(d["submitted_at"]),
    )


def _followup_doc(f: FollowupReminder) -> dict:
    return {
        "user_id": f.user_id,
        "week_index": f.week_index,
        "due_at": _iso(f.due_at),
        "done": f.done,
    }


def _followup_from_doc(d: dict) -> FollowupReminder:
    return FollowupReminder(
        user_id=d["user_id"],
        week_index=d["week_index"],
        due_at=_parse_dt(d["due_at"]),
        done=d["done"],
    )


def _session_doc(s: DialogSession) -> dict:
    return {
        "session_id": s.session_id,
        "user_id": s.user_id,
        "dialog_id": s.dialog_id,
        "current_state": s.current_state,
        "variables": s.variables,
        "attempt_count": s.attempt_count,
        "history": [[state, text, _iso(ts)] for state, text, ts in s.history],
        "status": s.status.value,
        "last_activity_at": _iso(s.last_activity_at) if s.last_activity_at else None,
    }


def _session_from_doc(d: dict) -> DialogSession:
    return DialogSession(
        session_id=d["session_id"],
        user_id=d["user_id"],
        dialog_id=d["dialog_id"],
        current_state=d["current_state"],
        variables=dict(d["variables"]),
        attempt_count=d["attempt_count"],
        history=[(h[0], h[1], _parse_dt(h[2])) for h in d["history"]],
        status=SessionStatus(d["status"]),
        last_activity_at=_parse_dt(d["last_activity_at"]) if d.get("last_activity_at") else None,
    )


def _job_doc(j: ScheduledJob) -> dict:
    return {
        "job_id": j.job_id,
        "kind": j.kind.value,
        "due_at": _iso(j.due_at),
        "payload": j.payload,
        "recurrence": j.recurrence,
        "fired": j.fired,
        "fired_at": _iso(j.fired_at) if j.fired_at else None,
        "late": j.late,
    }


def _job_from_doc(d: dict) -> ScheduledJob:
    return ScheduledJob(
        job_id=d["job_id"],
        kind=JobKind(d["kind"]),
        due_at=_parse_dt(d["due_at"]),
        payload=dict(d["payload"]),
        recurrence=d.get("recurrence"),
        fired=d["fired"],
        fired_at=_parse_dt(d["fired_at"]) if d.get("fired_at") else None,
        late=d["late"],
    )
