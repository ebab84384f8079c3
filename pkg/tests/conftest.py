from __future__ import annotations

import random
from datetime import datetime, timezone

import pytest

from coachai.scheduler import Clock
from coachai.service import CoachingService

START = datetime(2026, 1, 5, 7, 0, tzinfo=timezone.utc)  # a Monday

INTAKE_ANSWERS = {
    "age": "34",
    "occupation_sedentariness": "4",
    "daily_sitting_hours": "9",
    "weekly_moderate_activity_minutes": "60",
    "weekly_vigorous_activity_minutes": "10",
    "sleep_hours": "7",
    "height_cm": "170",
    "weight_kg": "70",
    "bmi": "24.2",
    "weekly_walking_minutes": "100",
    "strength_sessions_per_week": "0",
    "sports_sessions_per_week": "1",
    "active_commute_minutes": "10",
    "daily_screen_hours": "8",
    "fruit_servings_per_day": "1",
    "vegetable_servings_per_day": "2",
    "sugary_drinks_per_week": "3",
    "fast_food_meals_per_week": "2",
    "water_glasses_per_day": "5",
    "alcohol_units_per_week": "2",
    "stress_level": "6",
    "anxiety_frequency": "4",
    "mood_level": "5",
    "sleep_quality": "5",
    "energy_level": "5",
}


def make_service(data_dir=None) -> CoachingService:
    clock = Clock(mode="simulated")
    clock.set(START)
    return CoachingService(data_dir=data_dir, clock=clock)


def complete_intake(service: CoachingService, user) -> None:
    from coachai.classifier import FEATURE_NAMES

    chat_id = service._chat_id(user)
    for name in FEATURE_NAMES:
        service.console.inject(chat_id, INTAKE_ANSWERS[name], received_at=service.clock.now)
    service.drain_channels()
    assert service.users[user.user_id].intake_complete


@pytest.fixture
def service() -> CoachingService:
    return make_service()


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0AC4)
