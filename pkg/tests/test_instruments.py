"""Questionnaire templates, scoring, staging, and dialog generation."""

from __future__ import annotations

from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coachai.dialog import SessionStatus, advance, start_session, validate
from coachai.errors import DomainError, ValidationError
from coachai.instruments import (
    HapaStage,
    Item,
    QuestionnaireResponse,
    QuestionnaireTemplate,
    build_dialog,
    builtin_template,
    classify_hapa_stage,
    preference_probe_summary,
    response_from_variables,
    score_response,
    template_from_dict,
)
from coachai.messages import InboundMessage

NOW = datetime(2026, 1, 20, tzinfo=timezone.utc)


def response(template, answers, user_id="u1", week=2):
    return QuestionnaireResponse(
        user_id=user_id,
        template_id=template.template_id,
        week_index=week,
        answers=answers,
        submitted_at=NOW,
    )


class TestTemplates:
    def test_builtin_dimension_sets(self):
        assert builtin_template("tam").dimensions == {
            "usefulness", "ease_of_use", "fun", "attitude", "intention",
        }
        assert builtin_template("attrakdiff").dimensions == {
            "pragmatic", "hedonic", "appeal", "social",
        }
        assert builtin_template("hapa").dimensions == {
            "risk_perception", "outcome_expectancy", "action_self_efficacy",
            "behavioral_intention", "volition",
        }

    def test_wrong_dimension_set_rejected(self):
        items = tuple(
            Item(item_id=f"q{i}", text="x", dimension="usefulness",
                 scale_min=1, scale_max=7)
            for i in range(3)
        )
        with pytest.raises(ValidationError):
            QuestionnaireTemplate(template_id="t", instrument="TAM", items=items)

    def test_duplicate_item_ids_rejected(self):
        doc = {
            "template_id": "t",
            "instrument": "preference",
            "items": [
                {"item_id": "a", "text": "x", "dimension": "physical_activity",
                 "scale": {"min": 0, "max": 2},
                 "answer_scores": {"human": 0, "virtual": 1, "combination": 2}},
                {"item_id": "a", "text": "y", "dimension": "healthy_diet",
                 "scale": {"min": 0, "max": 2},
                 "answer_scores": {"human": 0, "virtual": 1, "combination": 2}},
            ],
        }
        with pytest.raises(ValidationError):
            template_from_dict(doc)


class TestScoring:
    def test_known_tam_means(self):
        # Items are ordered two per dimension; these answers give exact means.
        template = builtin_template("tam")
        answers = dict(zip((i.item_id for i in template.items),
                           [5, 5, 6, 6, 3, 3, 7, 7, 4, 4]))
        scores = score_response(template, response(template, answers))
        assert scores.per_dimension == {
            "usefulness": 5.0, "ease_of_use": 6.0, "fun": 3.0,
            "attitude": 7.0, "intention": 4.0,
        }
        assert scores.total == 5 * 2 + 6 * 2 + 3 * 2 + 7 * 2 + 4 * 2

    def test_reverse_scored_items(self):
        template = builtin_template("attrakdiff")
        reversed_ids = {i.item_id for i in template.items if i.reverse_scored}
        assert reversed_ids == {"ad_prag_2", "ad_hed_2"}
        answers = {i.item_id: 6 for i in template.items}
        scores = score_response(template, response(template, answers))
        # a raw 6 on a reversed 1-7 item scores as 1+7-6 = 2
        by_dim = scores.per_dimension
        assert by_dim["pragmatic"] == (6 + 2) / 2
        assert by_dim["hedonic"] == (6 + 2) / 2
        assert by_dim["appeal"] == 6

    @given(raw=st.integers(min_value=1, max_value=7))
    @settings(max_examples=50, deadline=None)
    def test_reversal_is_involution(self, raw):
        lo, hi = 1, 7
        once = lo + hi - raw
        twice = lo + hi - once
        assert twice == raw
        assert lo <= once <= hi

    def test_out_of_scale_rejected(self):
        template = builtin_template("tam")
        answers = {i.item_id: 4 for i in template.items}
        answers[template.items[0].item_id] = 8
        with pytest.raises(DomainError):
            score_response(template, response(template, answers))

    def test_missing_answer_rejected_unless_partial(self):
        template = builtin_template("tam")
        answers = {i.item_id: 4 for i in template.items[1:]}
        with pytest.raises(DomainError):
            score_response(template, response(template, answers))
        scores = score_response(template, response(template, answers), allow_partial=True)
        assert set(scores.per_dimension) <= template.dimensions

    def test_labelled_answers_scored(self):
        template = builtin_template("preference")
        answers = {i.item_id: "combination" for i in template.items}
        scores = score_response(template, response(template, answers))
        assert all(v == 2.0 for v in scores.per_dimension.values())


class TestHapaStaging:
    def scores_with_intention(self, intention):
        template = builtin_template("hapa")
        answers = {
            i.item_id: (intention if i.dimension == "behavioral_intention" else 4)
            for i in template.items
        }
        return score_response(template, response(template, answers))

    def test_stage_rules(self):
        low = self.scores_with_intention(2)
        high = self.scores_with_intention(6)
        assert classify_hapa_stage(low, behavior_mean=6.0) is HapaStage.NON_INTENDER
        assert classify_hapa_stage(high, behavior_mean=2.0) is HapaStage.INTENDER
        assert classify_hapa_stage(high, behavior_mean=6.0) is HapaStage.ACTOR

    def test_midpoint_boundary(self):
        at_mid = self.scores_with_intention(4)  # 4.0 == midpoint -> intender+
        assert classify_hapa_stage(at_mid, behavior_mean=4.0) is HapaStage.ACTOR
        assert classify_hapa_stage(at_mid, behavior_mean=3.999) is HapaStage.INTENDER

    def test_requires_intention_dimension(self):
        template = builtin_template("tam")
        answers = {i.item_id: 4 for i in template.items}
        scores = score_response(template, response(template, answers))
        with pytest.raises(DomainError):
            classify_hapa_stage(scores, behavior_mean=4.0)


class TestGeneratedDialogs:
    @pytest.mark.parametrize("name", ["tam", "attrakdiff", "hapa", "preference"])
    def test_dialog_valid_and_complete(self, name):
        template = builtin_template(name)
        definition = build_dialog(template)
        assert validate(definition) == []
        session, messages, _ = start_session(
            definition, session_id="s", user_id="u", chat_id="c", now=NOW
        )
        completion = None
        update = 1
        for item in template.items:
            text = next(iter(item.answer_scores)) if item.answer_scores else str(
                int(item.midpoint)
            )
            session, _, completion, _ = advance(
                session,
                InboundMessage(chat_id="c", text=text, received_at=NOW, update_id=update),
                definition,
                now=NOW,
            )
            update += 1
        assert session.status is SessionStatus.COMPLETED
        built = response_from_variables(
            template, user_id="u", week_index=3,
            variables=completion.variables, submitted_at=NOW,
        )
        scores = score_response(template, built)
        assert set(scores.per_dimension) == template.dimensions


class TestPreferenceSummary:
    def test_counts_by_topic(self):
        template = builtin_template("preference")
        r1 = response(template, {i.item_id: "combination" for i in template.items}, "u1")
        r2 = response(template, {i.item_id: "human" for i in template.items}, "u2")
        table = preference_probe_summary(template, [r1, r2])
        assert set(table) == {i.dimension for i in template.items}
        for row in table.values():
            assert row.get("combination", 0) == 1
            assert row.get("human", 0) == 1
            assert sum(row.values()) == 2
