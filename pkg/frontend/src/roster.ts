/** Roster assembly and rendering.
 *
 * Rows are built purely by joining API responses; categories, means, and
 * counts are copied verbatim (no client-side recomputation), so a
 * refresh can never disagree with the service.
 */

import type { ApiClient } from "./api.js";
import type { AdherenceReport, Alert, Assignment, RosterRow, User } from "./types.js";
import { escapeHtml, relativeAge } from "./format.js";

export function buildRosterRows(
  users: User[],
  assignmentsByUser: Map<string, Assignment[]>,
  adherenceByUser: Map<string, AdherenceReport[]>,
  alerts: Alert[],
): RosterRow[] {
  const openAlerts = new Map<string, number>();
  for (const alert of alerts) {
    if (!alert.acknowledged) {
      openAlerts.set(alert.user_id, (openAlerts.get(alert.user_id) ?? 0) + 1);
    }
  }
  return users.map((user) => {
    const assignments = assignmentsByUser.get(user.user_id) ?? [];
    const active = assignments.filter((a) => a.status === "active");
    const reports = adherenceByUser.get(user.user_id) ?? [];
    const latest = reports.length > 0 ? reports[reports.length - 1] : null;
    return {
      userId: user.user_id,
      name: user.display_name,
      activityClass: user.activity_class,
      currentPlan: active.length > 0 ? active[active.length - 1].plan_id : null,
      overallMean: latest ? latest.overall_mean : null,
      binaryCategory: latest ? latest.binary_category : null,
      ternaryCategory: latest ? latest.ternary_category : null,
      openAlerts: openAlerts.get(user.user_id) ?? 0,
      lastInteractionAt: user.last_interaction_at,
    };
  });
}

export type RosterSort = "adherence" | "alerts" | "name";

export function sortRoster(rows: RosterRow[], by: RosterSort): RosterRow[] {
  const copy = [...rows];
  if (by === "adherence") {
    // lowest adherence first: that's who the coach should look at
    copy.sort((a, b) => (a.overallMean ?? -1) - (b.overallMean ?? -1));
  } else if (by === "alerts") {
    copy.sort((a, b) => b.openAlerts - a.openAlerts);
  } else {
    copy.sort((a, b) => a.name.localeCompare(b.name));
  }
  return copy;
}

export async function fetchRoster(client: ApiClient): Promise<RosterRow[]> {
  const [users, alerts] = await Promise.all([client.listUsers(), client.listAlerts()]);
  const assignmentsByUser = new Map<string, Assignment[]>();
  const adherenceByUser = new Map<string, AdherenceReport[]>();
  await Promise.all(
    users.map(async (user) => {
      const [assignments, adherence] = await Promise.all([
        client.listAssignments(user.user_id),
        client.userAdherence(user.user_id),
      ]);
      assignmentsByUser.set(user.user_id, assignments);
      adherenceByUser.set(user.user_id, adherence);
    }),
  );
  return buildRosterRows(users, assignmentsByUser, adherenceByUser, alerts);
}

export function renderRoster(rows: RosterRow[], now: Date): string {
  if (rows.length === 0) {
    return `<p class="empty">No users registered yet.</p>`;
  }
  const body = rows
    .map((row) => {
      const gauge =
        row.overallMean === null
          ? `<span class="gauge gauge-empty">–</span>`
          : `<span class="gauge" data-mean="${row.overallMean}">${(row.overallMean * 100).toFixed(0)}%</span>`;
      const chips = [
        row.binaryCategory === null
          ? ""
          : `<span class="chip chip-binary" data-category="${escapeHtml(row.binaryCategory)}">${escapeHtml(row.binaryCategory)}</span>`,
        row.ternaryCategory === null
          ? ""
          : `<span class="chip chip-ternary" data-category="${escapeHtml(row.ternaryCategory)}">${escapeHtml(row.ternaryCategory)}</span>`,
      ].join("");
      const alertBadge =
        row.openAlerts > 0 ? `<span class="badge badge-alert">${row.openAlerts}</span>` : "";
      return `<tr data-user-id="${escapeHtml(row.userId)}">
        <td class="name">${escapeHtml(row.name)}${alertBadge}</td>
        <td class="class"><span class="chip chip-class">${escapeHtml(row.activityClass)}</span></td>
        <td class="plan">${row.currentPlan ? escapeHtml(row.currentPlan) : "—"}</td>
        <td class="adherence">${gauge}${chips}</td>
        <td class="seen">${relativeAge(row.lastInteractionAt, now)}</td>
      </tr>`;
    })
    .join("\n");
  return `<table class="roster">
    <thead><tr><th>User</th><th>Class</th><th>Plan</th><th>Adherence</th><th>Last seen</th></tr></thead>
    <tbody>${body}</tbody>
  </table>`;
}
