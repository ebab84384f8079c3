"""Deterministic participant simulator.

Drives a full multi-week study against an embedded CoachingService on a
simulated clock: registration and intake, baseline chatting, weekly plan
assignment, daily feedback dialogs, the three weekly questionnaires, and
a final preference probe — all through the console channel. Same seed,
same config => byte-identical report bundle.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path

from .dialog import SessionStatus
from .domain import Topic
from .errors import DomainError, ValidationError
from .scheduler import Clock
from .service import CoachingService

STUDY_EPOCH = date(2026, 1, 5)  # a Monday; all runs start here for determinism

TOPIC_ACTIVITIES = {
    "physical_activity": [
        ("Brisk 20-minute walk", "daily"),
        ("Full-body stretching session", "weekly"),
    ],
    "healthy_diet": [
        ("Eat two servings of vegetables", "daily"),
        ("Plan next week's meals", "weekly"),
    ],
    "mental_wellness": [
        ("10-minute breathing exercise", "daily"),
        ("Write a gratitude journal entry", "weekly"),
    ],
}

PREFERENCE_CHOICES = ("human", "virtual", "combination")


@dataclass(frozen=True)
class ParticipantProfile:
    profile_id: str
    topic: str
    completion_probability: float
    response_delay_mean_s: float
    response_delay_jitter_s: float
    questionnaire_means: dict[str, float]
    questionnaire_sd: float
    seed: int
    age: int
    gender: str

    def __post_init__(self) -> None:
        if not (0.0 <= self.completion_probability <= 1.0):
            raise ValidationError("completion_probability must be in [0, 1]")
        for dim, mean in self.questionnaire_means.items():
            if not (1.0 <= mean <= 7.0):
                raise ValidationError(f"questionnaire mean for {dim!r} out of scale bounds")


@dataclass(frozen=True)
class StudyRun:
    run_id: str
    n_participants: int
    weeks: int
    seed: int
    output_dir: Path

    def __post_init__(self) -> None:
        if self.weeks < 2:
            raise ValidationError("a study needs a baseline week plus at least one intervention week")
        if self.n_participants < 1:
            raise ValidationError("need at least one participant")


def default_profiles(run: StudyRun) -> list[ParticipantProfile]:
    """Cohort sampled from the run seed. Questionnaire means lean on the
    completion probability so adherence groups differ in a known direction."""
    rng = random.Random(run.seed)
    topics = [t.value for t in Topic]
    genders = ["female", "male", "undisclosed"]
    dims = [
        "usefulness", "ease_of_use", "fun", "attitude", "intention",  # TAM
        "pragmatic", "hedonic", "appeal", "social",  # AttrakDiff
        "risk_perception", "outcome_expectancy", "action_self_efficacy",
        "behavioral_intention", "volition",  # HAPA
    ]
    profiles = []
    for i in range(run.n_participants):
        cp = round(rng.uniform(0.15, 0.95), 3)
        means = {
            dim: round(min(6.8, max(1.2, 3.0 + 3.0 * cp + rng.uniform(-0.4, 0.4))), 3)
            for dim in dims
        }
        profiles.append(
            ParticipantProfile(
                profile_id=f"p{i + 1:02d}",
                topic=topics[i % len(topics)],
                completion_probability=cp,
                response_delay_mean_s=rng.uniform(30.0, 600.0),
                response_delay_jitter_s=rng.uniform(5.0, 60.0),
                questionnaire_means=means,
                questionnaire_sd=0.8,
                seed=run.seed * 10007 + i,
                age=rng.randint(19, 53),
                gender=genders[i % len(genders)],
            )
        )
    return profiles


@dataclass
class _Participant:
    profile: ParticipantProfile
    user_id: str
    chat_id: str
    rng: random.Random
    session_decisions: dict[str, bool] = field(default_factory=dict)


class StudySimulator:
    def __init__(self, run: StudyRun, profiles: list[ParticipantProfile] | None = None):
        self.run = run
        self.profiles = profiles if profiles is not None else default_profiles(run)
        if len(self.profiles) != run.n_participants:
            raise DomainError("profiles must cover all participants")
        self.clock = Clock(mode="simulated")
        self.clock.set(datetime.combine(STUDY_EPOCH, time(7, 0), tzinfo=timezone.utc))
        state_dir = run.output_dir / "state"
        state_dir.mkdir(parents=True, exist_ok=True)
        self.service = CoachingService(data_dir=state_dir, clock=self.clock)
        self.participants: list[_Participant] = []
        self._topic_activities: dict[str, list[str]] = {}

    # -- participant behavior ----------------------------------------------

    def _intake_answers(self, p: _Participant) -> dict[str, str]:
        rng = random.Random(p.profile.seed ^ 0xA5A5)
        cp = p.profile.completion_probability
        # Habit features scale with the completion probability so the
        # classifier sees a coherent cohort; bounds match the intake dialog.
        height = rng.uniform(152, 195)
        weight = rng.uniform(50, 110)
        vals = {
            "age": p.profile.age,
            "occupation_sedentariness": rng.randint(1, 5),
            "daily_sitting_hours": round(rng.uniform(2, 12), 1),
            "weekly_moderate_activity_minutes": round(30 + 500 * cp + rng.uniform(0, 60)),
            "weekly_vigorous_activity_minutes": round(400 * cp * rng.uniform(0.2, 1.0)),
            "sleep_hours": round(rng.uniform(5.5, 9.0), 1),
            "height_cm": round(height, 1),
            "weight_kg": round(weight, 1),
            "bmi": round(weight / (height / 100) ** 2, 1),
            "weekly_walking_minutes": round(rng.uniform(30, 400)),
            "strength_sessions_per_week": rng.randint(0, 4),
            "sports_sessions_per_week": rng.randint(0, 4),
            "active_commute_minutes": round(rng.uniform(0, 60)),
            "daily_screen_hours": round(rng.uniform(2, 12), 1),
            "fruit_servings_per_day": rng.randint(0, 5),
            "vegetable_servings_per_day": rng.randint(0, 5),
            "sugary_drinks_per_week": rng.randint(0, 14),
            "fast_food_meals_per_week": rng.randint(0, 7),
            "water_glasses_per_day": rng.randint(1, 10),
            "alcohol_units_per_week": rng.randint(0, 10),
            "stress_level": rng.randint(1, 7),
            "anxiety_frequency": rng.randint(1, 7),
            "mood_level": rng.randint(1, 7),
            "sleep_quality": rng.randint(1, 7),
            "energy_level": rng.randint(1, 7),
        }
        return {k: str(v) for k, v in vals.items()}

    def _answer_for_state(self, p: _Participant, kind: str, state_id: str) -> str:
        if kind == "intake":
            return self._intake_answers(p)[state_id]
        if kind == "feedback":
            r = p.rng.random()
            cp = p.profile.completion_probability
            if r < cp:
                return "yes"
            if r < cp + 0.5 * (1.0 - cp):
                return "partially"
            return "no"
        # questionnaire: state id == item id
        template_items = {
            i.item_id: i
            for t in self.service.templates.values()
            for i in t.items
        }
        item = template_items[state_id]
        if item.answer_scores:
            weights = [3 if c == "combination" else 1 for c in item.answer_scores]
            return p.rng.choices(list(item.answer_scores), weights=weights)[0]
        mean = p.profile.questionnaire_means.get(item.dimension, 4.0)
        raw = round(p.rng.gauss(mean, p.profile.questionnaire_sd))
        return str(int(min(item.scale_max, max(item.scale_min, raw))))

    def _wants_to_answer(self, p: _Participant, session_id: str) -> bool:
        decided = p.session_decisions.get(session_id)
        if decided is not None:
            return decided
        kind = self.service.session_contexts[session_id].kind
        if kind == "feedback":
            decided = p.rng.random() < 0.15 + 0.85 * p.profile.completion_probability
        else:
            decided = True  # intake and questionnaires are always answered
        p.session_decisions[session_id] = decided
        return decided

    def _answer_round(self) -> None:
        """Let every participant (in id order) play out their open dialogs."""
        progressed = True
        while progressed:
            progressed = False
            for p in self.participants:
                session_id = self.service.active_session_by_user.get(p.user_id)
                if session_id is None or not self._wants_to_answer(p, session_id):
                    continue
                session = self.service.sessions[session_id]
                if session.status is not SessionStatus.ACTIVE:
                    continue
                if session.attempt_count >= 2:
                    # The scripted answer keeps getting rejected; stop
                    # rather than loop on the reprompt forever.
                    p.session_decisions[session_id] = False
                    continue
                context = self.service.session_contexts[session_id]
                text = self._answer_for_state(p, context.kind, session.current_state)
                self.service.console.inject(p.chat_id, text, received_at=self.clock.now)
                self.service.drain_channels()
                progressed = True

    # -- study phases --------------------------------------------------------

    def _register_all(self) -> None:
        for profile in self.profiles:
            user = self.service.register_user(
                display_name=f"Participant {profile.profile_id}",
                age=profile.age,
                gender=profile.gender,
                phone=f"+100000{profile.profile_id[1:]}",
            )
            self.participants.append(
                _Participant(
                    profile=profile,
                    user_id=user.user_id,
                    chat_id=self.service._chat_id(user),
                    rng=random.Random(profile.seed),
                )
            )
            self.service.start_study_protocol(user.user_id, STUDY_EPOCH)
        self._answer_round()  # intake dialogs

    def _ensure_activities(self) -> None:
        if self._topic_activities:
            return
        for topic, specs in TOPIC_ACTIVITIES.items():
            ids = []
            for title, recurrence in specs:
                activity = self.service.create_activity(
                    title=title, topic=topic, recurrence=recurrence
                )
                ids.append(activity.activity_id)
            self._topic_activities[topic] = ids

    def _assign_week(self, week: int) -> None:
        """Create one plan per topic for the week and assign by topic."""
        self._ensure_activities()
        monday = STUDY_EPOCH + timedelta(days=7 * (week - 1))
        plans = {}
        for topic, activity_ids in self._topic_activities.items():
            plans[topic] = self.service.create_plan(
                category=topic,
                description=f"Week {week} {topic.replace('_', ' ')} plan",
                activity_ids=activity_ids,
                trigger_time="08:00",
                feedback_time="20:00",
                start_date=monday.isoformat(),
                expiration_date=(monday + timedelta(days=6)).isoformat(),
            )
        for p in self.participants:
            if self.service.users[p.user_id].intake_complete:
                self.service.assign_plan(p.user_id, plans[p.profile.topic].plan_id)

    def _baseline_chat(self, day: date) -> None:
        for p in self.participants:
            if self.service.active_session_by_user.get(p.user_id) is not None:
                continue
            chat_prob = 0.1 + 0.8 * p.profile.completion_probability
            if p.rng.random() < chat_prob:
                self.service.console.inject(
                    p.chat_id, "hello, checking in", received_at=self.clock.now
                )
        self.service.drain_channels()

    def _tick(self, when: datetime) -> None:
        self.service.tick(when)
        self._answer_round()

    def execute(self) -> dict:
        self._register_all()
        total_days = 7 * self.run.weeks
        for day_index in range(total_days):
            day = STUDY_EPOCH + timedelta(days=day_index)
            week = day_index // 7 + 1
            if day.weekday() == 0 and week >= 2:
                self.clock.set(datetime.combine(day, time(7, 0), tzinfo=timezone.utc))
                self._assign_week(week)
            self._tick(datetime.combine(day, time(8, 5), tzinfo=timezone.utc))
            if day_index == total_days - 1:
                # Final preference probe before the last evening round.
                for p in self.participants:
                    self.service.dispatch_questionnaire(
                        "preference", p.user_id, self.run.weeks
                    )
                self._answer_round()
            self._tick(datetime.combine(day, time(19, 5), tzinfo=timezone.utc))
            if week == 1:
                self._baseline_chat(day)
            self._tick(datetime.combine(day, time(20, 5), tzinfo=timezone.utc))
            self._tick(datetime.combine(day, time(23, 59, 59), tzinfo=timezone.utc))
            self.service.expire_idle_sessions()
        return self.write_bundle()

    # -- report bundle ---------------------------------------------------------

    def write_bundle(self) -> dict:
        out = self.run.output_dir
        out.mkdir(parents=True, exist_ok=True)
        service = self.service

        def dump(name: str, payload) -> None:
            (out / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

        adherence_rows = ["user_id,assignment_id,overall_mean,binary,ternary"]
        group_rows = ["user_id,group"]
        for p in self.participants:
            for report in service.adherence_for_user(p.user_id):
                adherence_rows.append(
                    f"{p.user_id},{report.assignment_id},{report.overall_mean!r},"
                    f"{report.binary_category.value},{report.ternary_category.value}"
                )
            group_rows.append(f"{p.user_id},{service.user_binary_group(p.user_id)}")
        (out / "adherence.csv").write_text("\n".join(adherence_rows) + "\n")
        (out / "groups.csv").write_text("\n".join(group_rows) + "\n")

        dump("descriptives.json", service.report_descriptives())
        instrument_counts = {}
        for instrument in ("TAM", "HAPA", "AttrakDiff"):
            report = service.report_instrument(instrument)
            dump(f"instrument_{instrument}.json", report)
            template_id = service.templates[instrument].template_id
            instrument_counts[instrument] = sum(
                1 for r in service.responses if r.template_id == template_id
            )
        dump("hapa_stages.json", service.report_hapa_stages())
        dump("preferences.json", service.report_preferences())

        fired = [j for j in service.scheduler.jobs.values() if j.fired]
        alert_counts: dict[str, int] = {}
        for alert in service.alerts.values():
            alert_counts[alert.kind.value] = alert_counts.get(alert.kind.value, 0) + 1
        manifest = {
            "run_id": self.run.run_id,
            "participants": self.run.n_participants,
            "weeks": self.run.weeks,
            "seed": self.run.seed,
            "start_date": STUDY_EPOCH.isoformat(),
            "end": self.clock.now.isoformat(),
            "counts": {
                "users": len(service.users),
                "assignments": len(service.assignments),
                "feedback_entries": sum(len(v) for v in service.feedback.values()),
                "responses": len(service.responses),
                "responses_by_instrument": instrument_counts,
                "alerts": alert_counts,
                "jobs_scheduled": len(service.scheduler.jobs),
                "jobs_fired": len(fired),
                "notifications_fired": sum(
                    1 for j in fired if j.kind.value == "plan_notification"
                ),
            },
        }
        dump("manifest.json", manifest)
        return manifest


def simulate_study(run: StudyRun, profiles: list[ParticipantProfile] | None = None) -> dict:
    return StudySimulator(run, profiles).execute()
