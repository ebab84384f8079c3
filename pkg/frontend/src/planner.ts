/** Plan builder: client-side draft checks mirror the service's Plan
 * invariants only to gate the submit button — the service remains the
 * authority and re-validates on POST. */

import type { ApiClient } from "./api.js";
import type { Activity, Assignment, Plan, PlanDraft } from "./types.js";
import { escapeHtml } from "./format.js";

export function draftProblems(draft: PlanDraft): string[] {
  const problems: string[] = [];
  if (draft.activityIds.length === 0) problems.push("select at least one activity");
  if (!draft.startDate || !draft.expirationDate) {
    problems.push("set both start and expiration dates");
  } else if (draft.expirationDate < draft.startDate) {
    problems.push("expiration precedes start");
  }
  if (!draft.triggerTime || !draft.feedbackTime) {
    problems.push("set trigger and feedback times");
  } else if (draft.triggerTime === draft.feedbackTime) {
    problems.push("trigger and feedback times must differ");
  }
  return problems;
}

export function canSubmit(draft: PlanDraft): boolean {
  return draftProblems(draft).length === 0;
}

export async function submitPlan(client: ApiClient, draft: PlanDraft): Promise<Plan> {
  const problems = draftProblems(draft);
  if (problems.length > 0) {
    throw new Error(`draft not submittable: ${problems.join("; ")}`);
  }
  return client.createPlan(draft);
}

export async function assignPlanToUser(
  client: ApiClient,
  userId: string,
  planId: string,
): Promise<Assignment> {
  return client.assignPlan(userId, planId);
}

export function renderActivityPicker(activities: Activity[], selected: Set<string>): string {
  if (activities.length === 0) {
    return `<p class="empty">No activities in the pool yet.</p>`;
  }
  const items = activities
    .map(
      (a) => `<label class="pick">
        <input type="checkbox" value="${escapeHtml(a.activity_id)}"${selected.has(a.activity_id) ? " checked" : ""}>
        <span class="title">${escapeHtml(a.title)}</span>
        <span class="meta">${escapeHtml(a.topic)} · ${escapeHtml(a.recurrence)} · effort ${a.effort}</span>
      </label>`,
    )
    .join("\n");
  return `<div class="activity-picker">${items}</div>`;
}

export function renderDraftStatus(draft: PlanDraft): string {
  const problems = draftProblems(draft);
  if (problems.length === 0) {
    return `<button class="submit" data-enabled="true">Create plan</button>`;
  }
  const list = problems.map((p) => `<li>${escapeHtml(p)}</li>`).join("");
  return `<button class="submit" data-enabled="false" disabled>Create plan</button>
    <ul class="problems">${list}</ul>`;
}
