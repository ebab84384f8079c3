"""HTTP API over a single CoachingService instance.

One process, one writer: every handler takes a process-wide lock before
touching the service. Errors map to JSON problem bodies
(`{"detail": ...}`) with 400 for domain violations, 404 for unknown ids,
and 409 for conflicts. If COACHAI_API_TOKEN is set, every /api route
requires `Authorization: Bearer <token>`.
"""

from __future__ import annotations

import os
import threading
from datetime import date, datetime

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import ConflictError, DomainError, NotFoundError, ValidationError
from .gateway import parse_webhook_update
from .service import CoachingService, _iso

ENV_API_TOKEN = "COACHAI_API_TOKEN"


class UserIn(BaseModel):
    display_name: str
    age: int
    gender: str = "undisclosed"
    phone: str | None = None
    locale: str = "en"
    channel_kind: str = "console"
    chat_id: str | None = None


class InactivityPeriodIn(BaseModel):
    days: int


class ActivityIn(BaseModel):
    title: str
    instructions: str = ""
    topic: str
    recurrence: str = "daily"
    effort: int = 3


class PlanIn(BaseModel):
    category: str = ""
    description: str = ""
    activity_ids: list[str]
    trigger_time: str
    feedback_time: str
    start_date: str
    expiration_date: str


class TaskIn(BaseModel):
    title: str
    plan_ids: list[str]


class AssignmentIn(BaseModel):
    user_id: str
    plan_id: str


class MessageIn(BaseModel):
    body: str
    coach_id: str = "coach"
    week_index: int | None = None


class DispatchIn(BaseModel):
    user_id: str
    week_index: int = 0


class ProtocolIn(BaseModel):
    start_date: str


class ExternalFeedbackIn(BaseModel):
    assignment_id: str
    activity_id: str
    occurrence_date: str
    completion: float = Field(ge=0.0, le=1.0)
    note: str | None = None


class TickIn(BaseModel):
    now: str


class ChatIn(BaseModel):
    chat_id: str
    text: str


def _user_out(service: CoachingService, u) -> dict:
    return {
        "user_id": u.user_id,
        "display_name": u.display_name,
        "age": u.age,
        "gender": u.gender.value,
        "phone": u.phone,
        "locale": u.locale,
        "registered_at": _iso(u.registered_at) if u.registered_at else None,
        "chat_id": u.channel_binding[1] if u.channel_binding else None,
        "channel_kind": u.channel_binding[0] if u.channel_binding else None,
        "activity_class": u.activity_class.value,
        "intake_complete": u.intake_complete,
        "last_interaction_at": _iso(u.last_interaction_at) if u.last_interaction_at else None,
        "inactivity_period_days": u.inactivity_period_days,
    }


def _activity_out(a) -> dict:
    return {
        "activity_id": a.activity_id,
        "title": a.title,
        "instructions": a.instructions,
        "topic": a.topic.value,
        "recurrence": a.recurrence.value,
        "effort": a.effort,
    }


def _plan_out(p) -> dict:
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


def _assignment_out(a) -> dict:
    return {
        "assignment_id": a.assignment_id,
        "user_id": a.user_id,
        "plan_id": a.plan_id,
        "assigned_at": _iso(a.assigned_at),
        "status": a.status.value,
    }


def _adherence_out(r) -> dict:
    return {
        "user_id": r.user_id,
        "assignment_id": r.assignment_id,
        "per_activity_mean": r.per_activity_mean,
        "overall_mean": r.overall_mean,
        "binary_category": r.binary_category.value,
        "ternary_category": r.ternary_category.value,
        "computed_at": _iso(r.computed_at),
    }


def _alert_out(a) -> dict:
    return {
        "alert_id": a.alert_id,
        "kind": a.kind.value,
        "user_id": a.user_id,
        "created_at": _iso(a.created_at),
        "detail": a.detail,
        "acknowledged": a.acknowledged,
    }


def _message_out(m) -> dict:
    return {
        "message_id": m.message_id,
        "coach_id": m.coach_id,
        "user_id": m.user_id,
        "body": m.body,
        "sent_at": _iso(m.sent_at),
        "week_index": m.week_index,
    }


def _response_out(r) -> dict:
    return {
        "user_id": r.user_id,
        "template_id": r.template_id,
        "week_index": r.week_index,
        "answers": r.answers,
        "submitted_at": _iso(r.submitted_at),
    }


def _followup_out(f) -> dict:
    return {
        "user_id": f.user_id,
        "week_index": f.week_index,
        "due_at": _iso(f.due_at),
        "done": f.done,
    }


def create_app(service: CoachingService) -> FastAPI:
    app = FastAPI(title="coachai", docs_url=None, redoc_url=None)
    lock = threading.RLock()
    expected_token = os.environ.get(ENV_API_TOKEN, "")

    def auth(authorization: str | None = Header(default=None)) -> None:
        if not expected_token:
            return
        if authorization != f"Bearer {expected_token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    dep = [Depends(auth)]

    @app.exception_handler(NotFoundError)
    async def _not_found(request: Request, exc: NotFoundError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(ConflictError)
    async def _conflict(request: Request, exc: ConflictError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(DomainError)
    async def _domain(request: Request, exc: DomainError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ValidationError)
    async def _invalid(request: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    # -- users ---------------------------------------------------------

    @app.post("/api/users", status_code=201, dependencies=dep)
    def create_user(body: UserIn):
        with lock:
            user = service.register_user(**body.model_dump())
            return _user_out(service, user)

    @app.get("/api/users", dependencies=dep)
    def list_users():
        with lock:
            return [
                _user_out(service, u)
                for u in sorted(service.users.values(), key=lambda u: u.user_id)
            ]

    @app.get("/api/users/{user_id}", dependencies=dep)
    def get_user(user_id: str):
        with lock:
            return _user_out(service, service._require_user(user_id))

    @app.post("/api/users/{user_id}/inactivity-period", dependencies=dep)
    def set_inactivity(user_id: str, body: InactivityPeriodIn):
        with lock:
            service.set_inactivity_period(user_id, body.days)
            return _user_out(service, service.users[user_id])

    # -- content -------------------------------------------------------

    @app.get("/api/activities", dependencies=dep)
    def list_activities():
        with lock:
            return [
                _activity_out(a)
                for a in sorted(service.activities.values(), key=lambda a: a.activity_id)
            ]

    @app.post("/api/activities", status_code=201, dependencies=dep)
    def create_activity(body: ActivityIn):
        with lock:
            return _activity_out(service.create_activity(**body.model_dump()))

    @app.get("/api/plans", dependencies=dep)
    def list_plans():
        with lock:
            return [
                _plan_out(p) for p in sorted(service.plans.values(), key=lambda p: p.plan_id)
            ]

    @app.post("/api/plans", status_code=201, dependencies=dep)
    def create_plan(body: PlanIn):
        with lock:
            return _plan_out(service.create_plan(**body.model_dump()))

    @app.post("/api/tasks", status_code=201, dependencies=dep)
    def create_task(body: TaskIn):
        with lock:
            task = service.create_task(body.title, body.plan_ids)
            return {"task_id": task.task_id, "title": task.title, "plan_ids": list(task.plan_ids)}

    # -- assignments ---------------------------------------------------

    @app.post("/api/assignments", status_code=201, dependencies=dep)
    def create_assignment(body: AssignmentIn):
        with lock:
            assignment, jobs = service.assign_plan(body.user_id, body.plan_id)
            out = _assignment_out(assignment)
            out["scheduled_jobs"] = len(jobs)
            return out

    @app.get("/api/assignments", dependencies=dep)
    def list_assignments(user_id: str | None = Query(default=None)):
        with lock:
            rows = sorted(service.assignments.values(), key=lambda a: a.assignment_id)
            if user_id is not None:
                rows = [a for a in rows if a.user_id == user_id]
            return [_assignment_out(a) for a in rows]

    @app.get("/api/users/{user_id}/adherence", dependencies=dep)
    def user_adherence(user_id: str):
        with lock:
            return [_adherence_out(r) for r in service.adherence_for_user(user_id)]

    @app.post("/api/users/{user_id}/external-feedback", status_code=201, dependencies=dep)
    def external_feedback(user_id: str, body: ExternalFeedbackIn):
        from .domain import FeedbackEntry

        with lock:
            service._require_user(user_id)
            assignment = service.assignments.get(body.assignment_id)
            if assignment is None:
                raise NotFoundError(f"unknown assignment {body.assignment_id!r}")
            if assignment.user_id != user_id:
                raise DomainError("assignment does not belong to this user")
            entry = FeedbackEntry(
                user_id=user_id,
                assignment_id=body.assignment_id,
                activity_id=body.activity_id,
                occurrence_date=date.fromisoformat(body.occurrence_date),
                completion=body.completion,
                recorded_at=service.clock.now,
                note=body.note,
            )
            report = service.record_feedback(body.assignment_id, [entry])
            return _adherence_out(report)

    # -- study protocol and questionnaires ------------------------------

    @app.post("/api/users/{user_id}/study-protocol", status_code=201, dependencies=dep)
    def start_protocol(user_id: str, body: ProtocolIn):
        with lock:
            jobs = service.start_study_protocol(user_id, date.fromisoformat(body.start_date))
            return {"user_id": user_id, "scheduled_jobs": len(jobs)}

    @app.post("/api/questionnaires/{instrument}/dispatch", status_code=201, dependencies=dep)
    def dispatch_questionnaire(instrument: str, body: DispatchIn):
        with lock:
            session_id = service.dispatch_questionnaire(
                instrument, body.user_id, body.week_index
            )
            return {"session_id": session_id, "instrument": instrument, "user_id": body.user_id}

    @app.get("/api/users/{user_id}/responses", dependencies=dep)
    def user_responses(user_id: str):
        with lock:
            service._require_user(user_id)
            return [_response_out(r) for r in service.responses if r.user_id == user_id]

    # -- messaging and alerts -------------------------------------------

    @app.post("/api/users/{user_id}/messages", status_code=201, dependencies=dep)
    def send_message(user_id: str, body: MessageIn):
        with lock:
            return _message_out(
                service.send_private_message(
                    user_id, body.body, coach_id=body.coach_id, week_index=body.week_index
                )
            )

    @app.get("/api/users/{user_id}/messages", dependencies=dep)
    def user_messages(user_id: str):
        with lock:
            service._require_user(user_id)
            return [_message_out(m) for m in service.private_messages if m.user_id == user_id]

    @app.get("/api/alerts", dependencies=dep)
    def list_alerts(acknowledged: bool | None = Query(default=None)):
        with lock:
            rows = sorted(service.alerts.values(), key=lambda a: a.alert_id)
            if acknowledged is not None:
                rows = [a for a in rows if a.acknowledged == acknowledged]
            return [_alert_out(a) for a in rows]

    @app.post("/api/alerts/{alert_id}/ack", dependencies=dep)
    def acknowledge(alert_id: str):
        with lock:
            return _alert_out(service.acknowledge_alert(alert_id))

    @app.get("/api/followups", dependencies=dep)
    def list_followups(user_id: str | None = Query(default=None)):
        with lock:
            rows = sorted(
                service.followups.values(), key=lambda f: (f.user_id, f.week_index)
            )
            if user_id is not None:
                rows = [f for f in rows if f.user_id == user_id]
            return [_followup_out(f) for f in rows]

    # -- reports ---------------------------------------------------------

    @app.get("/api/reports/descriptives", dependencies=dep)
    def report_descriptives():
        with lock:
            return service.report_descriptives()

    @app.get("/api/reports/instrument/{instrument}", dependencies=dep)
    def report_instrument(instrument: str):
        with lock:
            return service.report_instrument(instrument)

    @app.get("/api/reports/preferences", dependencies=dep)
    def report_preferences():
        with lock:
            return service.report_preferences()

    @app.get("/api/reports/hapa-stages", dependencies=dep)
    def report_hapa_stages():
        with lock:
            return service.report_hapa_stages()

    # -- admin and channel plumbing --------------------------------------

    @app.get("/api/admin/quarantine", dependencies=dep)
    def quarantine():
        with lock:
            return service.store.quarantined

    @app.post("/api/admin/tick", dependencies=dep)
    def tick(body: TickIn):
        with lock:
            if service.clock.mode != "simulated":
                raise DomainError("manual tick is only available on a simulated clock")
            fired = service.tick(datetime.fromisoformat(body.now))
            return {"fired": [j.job_id for j in fired], "now": body.now}

    @app.post("/api/admin/chat", dependencies=dep)
    def inject_chat(body: ChatIn):
        """Console-channel stand-in for a user typing in the chat client."""
        with lock:
            service.console.inject(body.chat_id, body.text, received_at=service.clock.now)
            service.drain_channels()
            transcript = service.console.transcript(body.chat_id)
            return {"transcript": [{"text": m.text, "keyboard": m.keyboard} for m in transcript]}

    @app.get("/api/users/{user_id}/transcript", dependencies=dep)
    def user_transcript(user_id: str):
        with lock:
            user = service._require_user(user_id)
            if user.channel_binding is None:
                return []
            transcript = service.console.transcript(user.channel_binding[1])
            return [{"text": m.text, "keyboard": m.keyboard} for m in transcript]

    @app.post("/webhook/{token}")
    def webhook(token: str, payload: dict):
        # Telegram-style update ingestion; token must match the bot token.
        expected = os.environ.get("COACHAI_BOT_TOKEN", "")
        if not expected or token != expected:
            raise HTTPException(status_code=403, detail="bad webhook token")
        with lock:
            inbound = parse_webhook_update(payload)
            if inbound is not None:
                service.process_inbound(inbound)
            return {"ok": True}

    @app.get("/api/health")
    def health():
        return {"status": "ok", "now": _iso(service.clock.now)}

    return app
