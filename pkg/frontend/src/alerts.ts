/** Alert inbox. Acknowledge is optimistic and safe to double-click:
 * the service treats repeated acks as idempotent, so concurrent retries
 * of the same ack converge on one acknowledged alert. */

import { ApiClient, ApiError } from "./api.js";
import type { Alert } from "./types.js";
import { escapeHtml } from "./format.js";

export const ALERT_KINDS = [
  "profile_complete",
  "inactivity",
  "deterioration",
  "dialog_escalation",
  "plan_expired",
] as const;

export async function acknowledge(client: ApiClient, alertId: string): Promise<Alert> {
  return client.acknowledgeAlert(alertId);
}

/** Fire one ack per click without debouncing; every call is the same
 * idempotent POST, so a double-click cannot corrupt state. Unknown ids
 * surface as errors; everything else resolves to the acknowledged alert. */
export async function acknowledgeWithRetry(
  client: ApiClient,
  alertId: string,
  attempts = 2,
): Promise<Alert> {
  let lastError: unknown = null;
  for (let i = 0; i < attempts; i += 1) {
    try {
      return await client.acknowledgeAlert(alertId);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) throw error;
      lastError = error;
    }
  }
  throw lastError instanceof Error ? lastError : new Error(String(lastError));
}

export function renderInbox(alerts: Alert[]): string {
  const open = alerts.filter((a) => !a.acknowledged);
  if (open.length === 0) {
    return `<p class="empty">Inbox zero — no unacknowledged alerts.</p>`;
  }
  const items = open
    .map(
      (a) => `<li class="alert" data-alert-id="${escapeHtml(a.alert_id)}" data-kind="${escapeHtml(a.kind)}">
      <span class="kind">${escapeHtml(a.kind)}</span>
      <span class="user">${escapeHtml(a.user_id)}</span>
      <span class="detail">${escapeHtml(a.detail)}</span>
      <time>${escapeHtml(a.created_at)}</time>
      <button class="ack" data-alert-id="${escapeHtml(a.alert_id)}">Acknowledge</button>
    </li>`,
    )
    .join("\n");
  return `<ul class="inbox">${items}</ul>`;
}
