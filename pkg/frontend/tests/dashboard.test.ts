/** End-to-end dashboard tests against a live API server.
 *
 * The server (see global-setup.ts) starts empty on a simulated clock at
 * 2026-01-05T07:00Z. Tests run in order within this single file and seed
 * state exclusively through the HTTP API — the dashboard never computes
 * a domain value on its own, so every rendered number is asserted equal
 * to what the API reported.
 */

import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { acknowledgeWithRetry, renderInbox } from "../src/alerts.js";
import { fetchUserDetail, renderAdherenceTimeline, renderFollowupChecklist } from "../src/detail.js";
import { canSubmit, draftProblems, submitPlan } from "../src/planner.js";
import { renderHapaStages, renderInstrumentReport } from "../src/reports.js";
import { buildRosterRows, fetchRoster, renderRoster, sortRoster } from "../src/roster.js";
import type { Alert, PlanDraft } from "../src/types.js";
import { BASE_URL } from "./global-setup.js";

const client = new ApiClient(BASE_URL);

// Intake answers in the order the registration dialog asks for them.
const INTAKE_ANSWERS = [
  "34", "4", "9", "60", "10", "7", "170", "70", "24.2", "100", "0", "1",
  "10", "8", "1", "2", "3", "2", "5", "2", "6", "4", "5", "5", "5",
];

// Shared across tests in declaration order (fileParallelism is off).
const seeded = {
  userId: "",
  chatId: "",
  activityId: "",
  planId: "",
  assignmentId: "",
};

describe("empty deployment", () => {
  it("health endpoint reports the simulated clock", async () => {
    const health = await client.health();
    expect(health.status).toBe("ok");
    expect(health.now).toBe("2026-01-05T07:00:00+00:00");
  });

  it("renders an empty roster and an empty inbox", async () => {
    const rows = await fetchRoster(client);
    expect(rows).toEqual([]);
    expect(renderRoster(rows, new Date())).toContain("No users registered yet");
    const alerts = await client.listAlerts();
    expect(alerts).toEqual([]);
    expect(renderInbox(alerts)).toContain("Inbox zero");
  });
});

describe("seeding through the API", () => {
  it("registers a user and completes intake over chat", async () => {
    const user = await client.createUser({ display_name: "Ada", age: 34, phone: "+100" });
    expect(user.intake_complete).toBe(false);
    seeded.userId = user.user_id;
    seeded.chatId = user.chat_id as string;
    expect(seeded.chatId).toBeTruthy();

    for (const answer of INTAKE_ANSWERS) {
      await client.adminChat(seeded.chatId, answer);
    }
    const after = await client.getUser(seeded.userId);
    expect(after.intake_complete).toBe(true);
    expect(["vigorous", "mild", "sedentary"]).toContain(after.activity_class);
  });

  it("intake completion raised a profile_complete alert", async () => {
    const alerts = await client.listAlerts(false);
    expect(alerts.map((a) => a.kind)).toContain("profile_complete");
  });
});

describe("plan builder", () => {
  const base: PlanDraft = {
    category: "walking",
    description: "Daily walk",
    activityIds: [],
    triggerTime: "08:00",
    feedbackTime: "20:00",
    startDate: "2026-01-05",
    expirationDate: "2026-01-11",
  };

  it("blocks submission of an invalid draft without calling the API", async () => {
    expect(canSubmit(base)).toBe(false);
    expect(draftProblems(base)).toContain("select at least one activity");
    const backwards = { ...base, activityIds: ["a0"], expirationDate: "2026-01-01" };
    expect(draftProblems(backwards)).toContain("expiration precedes start");
    await expect(submitPlan(client, backwards)).rejects.toThrow("draft not submittable");
  });

  it("creates, assigns, and schedules a valid plan", async () => {
    const activity = await client.createActivity({
      title: "Walk 20 minutes",
      topic: "physical_activity",
    });
    seeded.activityId = activity.activity_id;

    const draft = { ...base, activityIds: [activity.activity_id] };
    expect(canSubmit(draft)).toBe(true);
    const plan = await submitPlan(client, draft);
    seeded.planId = plan.plan_id;
    expect(plan.activity_ids).toEqual([activity.activity_id]);

    const assignment = await client.assignPlan(seeded.userId, plan.plan_id);
    seeded.assignmentId = assignment.assignment_id;
    expect(assignment.status).toBe("active");
  });
});

describe("adherence round-trip", () => {
  it("feedback over chat produces an adherence report", async () => {
    await client.adminTick("2026-01-05T20:01:00+00:00");
    await client.adminChat(seeded.chatId, "yes");
    const reports = await client.userAdherence(seeded.userId);
    expect(reports).toHaveLength(1);
    expect(reports[0].overall_mean).toBe(1.0);
    expect(reports[0].binary_category).toBe("high");
  });

  it("external feedback recomputes the report", async () => {
    const report = await client.recordExternalFeedback(seeded.userId, {
      assignment_id: seeded.assignmentId,
      activity_id: seeded.activityId,
      occurrence_date: "2026-01-06",
      completion: 0.5,
    });
    expect(report.assignment_id).toBe(seeded.assignmentId);
    const reports = await client.userAdherence(seeded.userId);
    expect(reports[reports.length - 1].overall_mean).toBe(report.overall_mean);
  });

  it("renders the timeline with values copied verbatim from the API", async () => {
    const detail = await fetchUserDetail(client, seeded.userId);
    const html = renderAdherenceTimeline(detail.adherence);
    for (const report of detail.adherence) {
      expect(html).toContain(`data-mean="${report.overall_mean}"`);
      expect(html).toContain(`data-category="${report.binary_category}"`);
      expect(html).toContain(`data-category="${report.ternary_category}"`);
    }
  });
});

describe("roster", () => {
  it("shows categories equal to what the API reports", async () => {
    const [user, reports, rows] = await Promise.all([
      client.getUser(seeded.userId),
      client.userAdherence(seeded.userId),
      fetchRoster(client),
    ]);
    const row = rows.find((r) => r.userId === seeded.userId);
    expect(row).toBeDefined();
    const latest = reports[reports.length - 1];
    expect(row!.activityClass).toBe(user.activity_class);
    expect(row!.binaryCategory).toBe(latest.binary_category);
    expect(row!.ternaryCategory).toBe(latest.ternary_category);
    expect(row!.overallMean).toBe(latest.overall_mean);
    expect(row!.currentPlan).toBe(seeded.planId);

    const html = renderRoster(rows, new Date("2026-01-05T21:00:00Z"));
    expect(html).toContain(`data-user-id="${seeded.userId}"`);
    expect(html).toContain(`data-category="${latest.binary_category}"`);
    expect(html).toContain(`data-category="${latest.ternary_category}"`);
  });

  it("sorts by open alerts and by adherence", async () => {
    const second = await client.createUser({ display_name: "Bea", age: 28, phone: "+200" });
    const rows = await fetchRoster(client);
    const byAlerts = sortRoster(rows, "alerts");
    expect(byAlerts[0].userId).toBe(seeded.userId); // Ada has the open alerts
    const byName = sortRoster(rows, "name");
    expect(byName.map((r) => r.name)).toEqual(["Ada", "Bea"]);
    // users without reports sort before users with low adherence
    const byAdherence = sortRoster(rows, "adherence");
    expect(byAdherence[0].userId).toBe(second.user_id);
  });

  it("never recomputes: a fabricated category string is rendered as-is", () => {
    const rows = buildRosterRows(
      [
        {
          user_id: "ux",
          display_name: "X",
          age: 1,
          gender: "undisclosed",
          phone: null,
          locale: "en",
          registered_at: null,
          chat_id: null,
          channel_kind: null,
          activity_class: "unclassified",
          intake_complete: false,
          last_interaction_at: null,
          inactivity_period_days: 7,
        },
      ],
      new Map([["ux", []]]),
      new Map([
        [
          "ux",
          [
            {
              user_id: "ux",
              assignment_id: "as-x",
              per_activity_mean: {},
              overall_mean: 0.123,
              binary_category: "not-a-real-category",
              ternary_category: "also-made-up",
              computed_at: "2026-01-05T00:00:00+00:00",
            },
          ],
        ],
      ]),
      [],
    );
    expect(rows[0].binaryCategory).toBe("not-a-real-category");
    expect(renderRoster(rows, new Date())).toContain('data-category="also-made-up"');
  });
});

describe("alert inbox", () => {
  it("acknowledge is idempotent under a double click", async () => {
    const open = await client.listAlerts(false);
    expect(open.length).toBeGreaterThan(0);
    const target = open[0];

    // a double click fires two POSTs; both must succeed and agree
    const [first, second] = await Promise.all([
      client.acknowledgeAlert(target.alert_id),
      client.acknowledgeAlert(target.alert_id),
    ]);
    expect(first.acknowledged).toBe(true);
    expect(second.acknowledged).toBe(true);

    const third = await acknowledgeWithRetry(client, target.alert_id);
    expect(third.acknowledged).toBe(true);

    const stillOpen = await client.listAlerts(false);
    expect(stillOpen.map((a) => a.alert_id)).not.toContain(target.alert_id);
    const acknowledged = await client.listAlerts(true);
    expect(acknowledged.filter((a) => a.alert_id === target.alert_id)).toHaveLength(1);
  });

  it("unknown alert ids surface as 404 errors", async () => {
    await expect(client.acknowledgeAlert("nope")).rejects.toThrowError(ApiError);
    await expect(acknowledgeWithRetry(client, "nope")).rejects.toMatchObject({ status: 404 });
  });

  it("renders only unacknowledged alerts", () => {
    const alerts: Alert[] = [
      {
        alert_id: "al1",
        kind: "inactivity",
        user_id: "u1",
        created_at: "2026-01-05T00:00:00+00:00",
        detail: "silent for 7 days",
        acknowledged: false,
      },
      {
        alert_id: "al2",
        kind: "profile_complete",
        user_id: "u1",
        created_at: "2026-01-05T00:00:00+00:00",
        detail: "done",
        acknowledged: true,
      },
    ];
    const html = renderInbox(alerts);
    expect(html).toContain('data-alert-id="al1"');
    expect(html).not.toContain('data-alert-id="al2"');
  });
});

describe("messages and follow-ups", () => {
  it("sending a week message closes that week's follow-up", async () => {
    // enroll in the study protocol, then advance past the week-1 reminder
    const protocol = await client.startStudyProtocol(seeded.userId, "2026-01-05");
    expect(protocol.scheduled_jobs).toBe(13);
    await client.adminTick("2026-01-12T08:00:00+00:00");
    const before = await client.listFollowups(seeded.userId);
    const week1 = before.find((f) => f.week_index === 1);
    expect(week1).toBeDefined();
    expect(week1!.done).toBe(false);

    await client.sendMessage(seeded.userId, "How was your first week?", 1);
    const after = await client.listFollowups(seeded.userId);
    expect(after.find((f) => f.week_index === 1)!.done).toBe(true);

    const html = renderFollowupChecklist(after);
    expect(html).toContain('data-week="1" data-done="true"');

    const messages = await client.userMessages(seeded.userId);
    expect(messages.map((m) => m.body)).toContain("How was your first week?");
  });
});

describe("reports", () => {
  it("renders instrument and stage reports straight from the API", async () => {
    const [tam, stages] = await Promise.all([
      client.reportInstrument("TAM"),
      client.reportHapaStages(),
    ]);
    expect(tam.instrument).toBe("TAM");
    const html = renderInstrumentReport(tam);
    const dimensions = Object.keys(tam.dimensions);
    if (dimensions.length === 0) {
      expect(html).toContain("No responses collected for TAM yet");
    } else {
      for (const dimension of dimensions) {
        expect(html).toContain(`data-dimension="${dimension}"`);
      }
    }
    const stagesHtml = renderHapaStages(stages);
    const stageKeys = Object.keys(stages.counts);
    if (stageKeys.length === 0) {
      expect(stagesHtml).toContain("No HAPA responses yet");
    } else {
      for (const stage of stageKeys) {
        expect(stagesHtml).toContain(`data-stage="${stage}"`);
      }
    }
  });
});
