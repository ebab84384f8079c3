"""Canonical intake feature set.

The 25 features are a documented reconstruction of a clinic intake
questionnaire around physical activity and sedentary lifestyle; the real
source data is not distributable, so names, question texts, and value
ranges live here and a synthetic generator mirrors their shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dialog.model import DialogDefinition, InputKind, InputSpec, StateSpec
from ..errors import DomainError


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    question: str
    minimum: float
    maximum: float


FEATURES: tuple[FeatureSpec, ...] = (
    FeatureSpec("age", "How old are you?", 13, 120),
    FeatureSpec("occupation_sedentariness", "On a scale of 1 to 5, how sedentary is your work?", 1, 5),
    FeatureSpec("daily_sitting_hours", "How many hours do you sit on a normal day?", 0, 24),
    FeatureSpec("weekly_moderate_activity_minutes", "Minutes of moderate activity in a typical week?", 0, 2000),
    FeatureSpec("weekly_vigorous_activity_minutes", "Minutes of vigorous activity in a typical week?", 0, 2000),
    FeatureSpec("sleep_hours", "How many hours do you sleep per night?", 0, 16),
    FeatureSpec("height_cm", "What is your height in centimeters?", 100, 230),
    FeatureSpec("weight_kg", "What is your weight in kilograms?", 30, 250),
    FeatureSpec("bmi", "What is your BMI (weight / height squared)?", 10, 60),
    FeatureSpec("weekly_walking_minutes", "Minutes of walking in a typical week?", 0, 3000),
    FeatureSpec("strength_sessions_per_week", "Strength training sessions per week?", 0, 14),
    FeatureSpec("sports_sessions_per_week", "Sport sessions per week?", 0, 14),
    FeatureSpec("active_commute_minutes", "Minutes of active commuting per day?", 0, 300),
    FeatureSpec("daily_screen_hours", "Hours of leisure screen time per day?", 0, 24),
    FeatureSpec("fruit_servings_per_day", "Servings of fruit per day?", 0, 20),
    FeatureSpec("vegetable_servings_per_day", "Servings of vegetables per day?", 0, 20),
    FeatureSpec("sugary_drinks_per_week", "Sugary drinks per week?", 0, 100),
    FeatureSpec("fast_food_meals_per_week", "Fast-food meals per week?", 0, 50),
    FeatureSpec("water_glasses_per_day", "Glasses of water per day?", 0, 30),
    FeatureSpec("alcohol_units_per_week", "Units of alcohol per week?", 0, 100),
    FeatureSpec("stress_level", "Current stress level, 1 (none) to 7 (extreme)?", 1, 7),
    FeatureSpec("anxiety_frequency", "How often do you feel anxious, 1 (never) to 7 (always)?", 1, 7),
    FeatureSpec("mood_level", "Overall mood, 1 (very low) to 7 (very high)?", 1, 7),
    FeatureSpec("sleep_quality", "Sleep quality, 1 (very poor) to 7 (excellent)?", 1, 7),
    FeatureSpec("energy_level", "Daily energy level, 1 (very low) to 7 (very high)?", 1, 7),
)

FEATURE_NAMES: tuple[str, ...] = tuple(f.name for f in FEATURES)
N_FEATURES = len(FEATURES)

LABELS = ("vigorous", "mild", "sedentary")


class MissingFeatureError(DomainError):
    def __init__(self, name: str):
        super().__init__(f"missing intake feature {name!r}")
        self.feature = name


def extract_features(intake_variables: dict[str, object]) -> np.ndarray:
    """Order the 25 intake answers canonically; values must be numeric."""
    values = np.empty(N_FEATURES, dtype=np.float64)
    for i, spec in enumerate(FEATURES):
        if spec.name not in intake_variables:
            raise MissingFeatureError(spec.name)
        raw = intake_variables[spec.name]
        try:
            values[i] = float(raw)  # type: ignore[arg-type]
        except (TypeError, ValueError):
            raise DomainError(f"intake feature {spec.name!r} is not numeric: {raw!r}") from None
    if not np.all(np.isfinite(values)):
        raise DomainError("intake features must all be finite")
    return values


def full_intake_dialog(dialog_id: str = "intake_full") -> DialogDefinition:
    """Linear intake dialog asking every canonical feature as a number."""
    states: dict[str, StateSpec] = {}
    for i, spec in enumerate(FEATURES):
        target = FEATURES[i + 1].name if i + 1 < N_FEATURES else "done"
        states[spec.name] = StateSpec(
            state_id=spec.name,
            prompt_template=spec.question,
            reprompt_text=f"Please answer with a number from {spec.minimum:g} to {spec.maximum:g}.",
            input=InputSpec(InputKind.NUMBER, minimum=spec.minimum, maximum=spec.maximum),
            capture=spec.name,
            transitions={"*": target},
        )
    states["done"] = StateSpec(state_id="done")
    return DialogDefinition(
        dialog_id=dialog_id,
        entry_state=FEATURES[0].name,
        states=states,
        terminal_states=frozenset({"done"}),
        required_captures=frozenset(FEATURE_NAMES),
    )
