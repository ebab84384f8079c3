/** User-detail pane: adherence timeline, feedback-derived per-activity
 * means, dialog transcript, per-week instrument scores, and the private
 * message composer with the weekly follow-up checklist. */

import type { ApiClient } from "./api.js";
import type {
  AdherenceReport,
  Followup,
  PrivateMessage,
  QuestionnaireResponse,
  TranscriptEntry,
  User,
} from "./types.js";
import { escapeHtml } from "./format.js";

export interface UserDetail {
  user: User;
  adherence: AdherenceReport[];
  transcript: TranscriptEntry[];
  responses: QuestionnaireResponse[];
  messages: PrivateMessage[];
  followups: Followup[];
}

export async function fetchUserDetail(client: ApiClient, userId: string): Promise<UserDetail> {
  const [user, adherence, transcript, responses, messages, followups] = await Promise.all([
    client.getUser(userId),
    client.userAdherence(userId),
    client.userTranscript(userId),
    client.userResponses(userId),
    client.userMessages(userId),
    client.listFollowups(userId),
  ]);
  return { user, adherence, transcript, responses, messages, followups };
}

export function renderAdherenceTimeline(reports: AdherenceReport[]): string {
  if (reports.length === 0) {
    return `<p class="empty">No adherence reports yet.</p>`;
  }
  const rows = reports
    .map((r) => {
      const perActivity = Object.entries(r.per_activity_mean)
        .map(([id, mean]) => `<span class="per-activity">${escapeHtml(id)}: ${mean}</span>`)
        .join(" ");
      return `<tr data-assignment-id="${escapeHtml(r.assignment_id)}">
        <td>${escapeHtml(r.assignment_id)}</td>
        <td class="overall" data-mean="${r.overall_mean}">${r.overall_mean}</td>
        <td><span class="chip" data-category="${escapeHtml(r.binary_category)}">${escapeHtml(r.binary_category)}</span></td>
        <td><span class="chip" data-category="${escapeHtml(r.ternary_category)}">${escapeHtml(r.ternary_category)}</span></td>
        <td>${perActivity}</td>
      </tr>`;
    })
    .join("\n");
  return `<table class="timeline">
    <thead><tr><th>Assignment</th><th>Overall</th><th>Binary</th><th>Ternary</th><th>Per activity</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

export function renderTranscript(entries: TranscriptEntry[]): string {
  if (entries.length === 0) return `<p class="empty">No conversation yet.</p>`;
  const lines = entries
    .map((e) => {
      const keys = e.keyboard
        ? `<span class="keys">[${e.keyboard.map(escapeHtml).join(" | ")}]</span>`
        : "";
      return `<li>${escapeHtml(e.text)} ${keys}</li>`;
    })
    .join("\n");
  return `<ol class="transcript">${lines}</ol>`;
}

export function renderFollowupChecklist(followups: Followup[]): string {
  if (followups.length === 0) return `<p class="empty">No follow-ups scheduled.</p>`;
  const items = [...followups]
    .sort((a, b) => a.week_index - b.week_index)
    .map(
      (f) => `<li class="followup" data-week="${f.week_index}" data-done="${f.done}">
      <input type="checkbox" disabled${f.done ? " checked" : ""}>
      week ${f.week_index} — due ${escapeHtml(f.due_at)}
    </li>`,
    )
    .join("\n");
  return `<ul class="followups">${items}</ul>`;
}

export function renderMessages(messages: PrivateMessage[]): string {
  if (messages.length === 0) return `<p class="empty">No messages sent.</p>`;
  const items = messages
    .map(
      (m) => `<li class="message" data-week="${m.week_index ?? ""}">
      <span class="coach">${escapeHtml(m.coach_id)}</span>
      <span class="body">${escapeHtml(m.body)}</span>
      <time>${escapeHtml(m.sent_at)}</time>
    </li>`,
    )
    .join("\n");
  return `<ul class="messages">${items}</ul>`;
}
