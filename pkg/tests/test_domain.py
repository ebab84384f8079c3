"""Domain model and adherence analytics tests.

The adherence check is an exhaustive brute-force equivalence: for a plan
with 10 expected occurrences, every of the 2^10 completion patterns is
scored here with plain arithmetic and compared to compute_adherence.
"""

from __future__ import annotations

import itertools
import random
from datetime import date, datetime, time, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coachai.domain import (
    Activity,
    AdherenceThresholds,
    Assignment,
    AssignmentStatus,
    BinaryCategory,
    FeedbackEntry,
    Plan,
    Recurrence,
    TernaryCategory,
    Topic,
    UserProfile,
    categorize_ternary,
    compute_adherence,
    expected_occurrences,
)
from coachai.errors import DomainError, NotFoundError, ValidationError

NOW = datetime(2026, 1, 20, 12, 0, tzinfo=timezone.utc)


def make_plan(days: int = 7, activities: int = 1, recurrence: str = "daily") -> tuple[Plan, list[Activity]]:
    acts = [
        Activity(
            activity_id=f"a{i}",
            title=f"Activity {i}",
            instructions="",
            topic=Topic.PHYSICAL_ACTIVITY,
            recurrence=Recurrence(recurrence),
        )
        for i in range(activities)
    ]
    plan = Plan(
        plan_id="p1",
        category="test",
        description="",
        activity_ids=tuple(a.activity_id for a in acts),
        trigger_time=time(8, 0),
        feedback_time=time(20, 0),
        start_date=date(2026, 1, 5),
        expiration_date=date(2026, 1, 5) + timedelta(days=days - 1),
    )
    return plan, acts


def entry(activity_id: str, day: date, completion: float, when: datetime = NOW) -> FeedbackEntry:
    return FeedbackEntry(
        user_id="u1",
        assignment_id="as1",
        activity_id=activity_id,
        occurrence_date=day,
        completion=completion,
        recorded_at=when,
    )


class TestExpectedOccurrences:
    def test_daily_seven_days(self):
        plan, acts = make_plan(days=7)
        dates = expected_occurrences(plan, acts[0])
        assert len(dates) == 7
        assert dates[0] == plan.start_date and dates[-1] == plan.expiration_date

    def test_weekly_anchors_to_start_weekday(self):
        plan, acts = make_plan(days=15, recurrence="weekly")
        dates = expected_occurrences(plan, acts[0])
        assert dates == [date(2026, 1, 5), date(2026, 1, 12), date(2026, 1, 19)]
        assert all(d.weekday() == plan.start_date.weekday() for d in dates)

    def test_one_shot(self):
        plan, acts = make_plan(days=10, recurrence="one_shot")
        assert expected_occurrences(plan, acts[0]) == [plan.start_date]

    def test_unrelated_activity_rejected(self):
        plan, _ = make_plan()
        other = Activity(
            activity_id="zz",
            title="x",
            instructions="",
            topic=Topic.HEALTHY_DIET,
            recurrence=Recurrence.DAILY,
        )
        with pytest.raises(NotFoundError):
            expected_occurrences(plan, other)


class TestAdherenceExhaustive:
    def test_all_1024_patterns_match_brute_force(self):
        """compute_adherence == plain mean over every 10-occurrence pattern."""
        plan, acts = make_plan(days=10)
        thresholds = AdherenceThresholds()
        dates = expected_occurrences(plan, acts[0])
        for pattern in itertools.product((0.0, 1.0), repeat=10):
            feedback = [
                entry(acts[0].activity_id, d, c)
                for d, c in zip(dates, pattern)
                if c > 0.0  # missing entries count as 0 implicitly
            ]
            report = compute_adherence(feedback, plan, acts, thresholds, computed_at=NOW)
            expected_mean = sum(pattern) / 10.0
            assert report.overall_mean == expected_mean
            assert report.binary_category == (
                BinaryCategory.HIGH if expected_mean >= 0.5 else BinaryCategory.LOW
            )
            if expected_mean < 1 / 3:
                assert report.ternary_category is TernaryCategory.NON_ADHERENT
            elif expected_mean < 2 / 3:
                assert report.ternary_category is TernaryCategory.MILD
            else:
                assert report.ternary_category is TernaryCategory.ADHERENT

    def test_monotone_under_10000_random_perturbations(self):
        """Raising any single completion never lowers the overall mean."""
        plan, acts = make_plan(days=7, activities=2)
        thresholds = AdherenceThresholds()
        rng = random.Random(99)
        dates = expected_occurrences(plan, acts[0])
        for _ in range(10_000):
            completions = {
                (a.activity_id, d): rng.choice([0.0, 0.5, 1.0])
                for a in acts
                for d in dates
            }
            feedback = [
                entry(aid, d, c) for (aid, d), c in completions.items() if c > 0
            ]
            base = compute_adherence(feedback, plan, acts, thresholds, computed_at=NOW)
            key = rng.choice(list(completions))
            bumped = dict(completions)
            bumped[key] = min(1.0, bumped[key] + rng.choice([0.5, 1.0]))
            feedback2 = [entry(aid, d, c) for (aid, d), c in bumped.items() if c > 0]
            after = compute_adherence(feedback2, plan, acts, thresholds, computed_at=NOW)
            assert after.overall_mean >= base.overall_mean


class TestAdherenceSemantics:
    def test_missing_counts_as_zero(self):
        plan, acts = make_plan(days=7)
        report = compute_adherence([], plan, acts, AdherenceThresholds(), computed_at=NOW)
        assert report.overall_mean == 0.0
        assert report.ternary_category is TernaryCategory.NON_ADHERENT

    def test_last_write_wins(self):
        plan, acts = make_plan(days=1)
        d = plan.start_date
        early = entry(acts[0].activity_id, d, 0.0, NOW)
        late = entry(acts[0].activity_id, d, 1.0, NOW + timedelta(minutes=5))
        report = compute_adherence([early, late], plan, acts, AdherenceThresholds(), computed_at=NOW)
        assert report.overall_mean == 1.0
        # Order in the input list must not matter; recorded_at decides.
        report2 = compute_adherence([late, early], plan, acts, AdherenceThresholds(), computed_at=NOW)
        assert report2.overall_mean == 1.0

    def test_until_truncates_window(self):
        plan, acts = make_plan(days=7)
        d = plan.start_date
        feedback = [entry(acts[0].activity_id, d, 1.0)]
        partial = compute_adherence(
            feedback, plan, acts, AdherenceThresholds(), computed_at=NOW, until=d
        )
        assert partial.overall_mean == 1.0  # 1 of 1 expected so far
        full = compute_adherence(feedback, plan, acts, AdherenceThresholds(), computed_at=NOW)
        assert full.overall_mean == pytest.approx(1.0 / 7.0)

    def test_category_boundaries_left_closed(self):
        t = AdherenceThresholds()
        assert categorize_ternary(1 / 3, t) is TernaryCategory.MILD
        assert categorize_ternary(2 / 3, t) is TernaryCategory.ADHERENT
        assert categorize_ternary(1 / 3 - 1e-12, t) is TernaryCategory.NON_ADHERENT
        assert categorize_ternary(0.0, t) is TernaryCategory.NON_ADHERENT
        assert categorize_ternary(1.0, t) is TernaryCategory.ADHERENT

    def test_out_of_window_feedback_rejected(self):
        plan, acts = make_plan(days=7)
        bad = entry(acts[0].activity_id, plan.expiration_date + timedelta(days=1), 1.0)
        with pytest.raises(DomainError):
            compute_adherence([bad], plan, acts, AdherenceThresholds(), computed_at=NOW)

    @given(
        completions=st.lists(
            st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]), min_size=7, max_size=7
        )
    )
    @settings(max_examples=300, deadline=None)
    def test_overall_mean_is_plain_mean(self, completions):
        plan, acts = make_plan(days=7)
        dates = expected_occurrences(plan, acts[0])
        feedback = [
            entry(acts[0].activity_id, d, c)
            for d, c in zip(dates, completions)
            if c > 0
        ]
        report = compute_adherence(feedback, plan, acts, AdherenceThresholds(), computed_at=NOW)
        assert report.overall_mean == pytest.approx(sum(completions) / 7.0, abs=1e-12)


class TestThresholdsAndTypes:
    def test_threshold_order_enforced(self):
        with pytest.raises(ValidationError):
            AdherenceThresholds(ternary_low=0.7, ternary_high=0.3)
        with pytest.raises(ValidationError):
            AdherenceThresholds(binary=1.5)

    def test_custom_thresholds_respected(self):
        t = AdherenceThresholds(binary=0.8, ternary_low=0.2, ternary_high=0.9)
        assert categorize_ternary(0.5, t) is TernaryCategory.MILD
        plan, acts = make_plan(days=2)
        feedback = [entry(acts[0].activity_id, plan.start_date, 1.0)]
        report = compute_adherence(feedback, plan, acts, t, computed_at=NOW)
        assert report.overall_mean == 0.5
        assert report.binary_category is BinaryCategory.LOW

    def test_plan_invariants(self):
        with pytest.raises(ValidationError):
            Plan(
                plan_id="p",
                category="",
                description="",
                activity_ids=("a",),
                trigger_time=time(8, 0),
                feedback_time=time(8, 0),  # must differ from trigger
                start_date=date(2026, 1, 5),
                expiration_date=date(2026, 1, 6),
            )
        with pytest.raises(ValidationError):
            Plan(
                plan_id="p",
                category="",
                description="",
                activity_ids=("a",),
                trigger_time=time(8, 0),
                feedback_time=time(20, 0),
                start_date=date(2026, 1, 7),
                expiration_date=date(2026, 1, 6),  # ends before it starts
            )

    def test_user_profile_age_bounds(self):
        with pytest.raises(ValidationError):
            UserProfile(user_id="u", display_name="x", age=12)
        with pytest.raises(ValidationError):
            UserProfile(user_id="u", display_name="x", age=121)

    def test_touch_never_goes_backwards(self):
        user = UserProfile(user_id="u", display_name="x", age=30)
        user.touch(NOW)
        user.touch(NOW - timedelta(hours=1))
        assert user.last_interaction_at == NOW

    def test_ternary_rank_order(self):
        assert (
            TernaryCategory.NON_ADHERENT.rank
            < TernaryCategory.MILD.rank
            < TernaryCategory.ADHERENT.rank
        )

    def test_assignment_default_active(self):
        a = Assignment(assignment_id="as1", user_id="u1", plan_id="p1", assigned_at=NOW)
        assert a.status is AssignmentStatus.ACTIVE
