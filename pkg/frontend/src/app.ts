/** Dashboard shell: three panes (roster / detail / action panel) plus a
 * 15-second alert poll. All rendering goes through the pure view
 * functions; this module only wires events and swaps innerHTML. */

import { ApiClient } from "./api.js";
import { acknowledgeWithRetry, renderInbox } from "./alerts.js";
import { fetchUserDetail, renderAdherenceTimeline, renderFollowupChecklist, renderMessages, renderTranscript } from "./detail.js";
import { fetchRoster, renderRoster, sortRoster, type RosterSort } from "./roster.js";
import { renderHapaStages, renderInstrumentReport, renderPreferenceTable } from "./reports.js";

const ALERT_POLL_MS = 15_000;

export interface AppConfig {
  baseUrl: string;
  token?: string;
}

export class Dashboard {
  private readonly client: ApiClient;
  private sort: RosterSort = "alerts";
  private selectedUser: string | null = null;
  private pollHandle: ReturnType<typeof setInterval> | null = null;

  constructor(
    config: AppConfig,
    private readonly root: HTMLElement,
  ) {
    this.client = new ApiClient(config.baseUrl, config.token);
  }

  async start(): Promise<void> {
    this.root.innerHTML = `
      <div class="pane pane-roster"><h2>Roster</h2><div id="roster"></div></div>
      <div class="pane pane-detail"><h2>User</h2><div id="detail"><p class="empty">Select a user.</p></div></div>
      <div class="pane pane-actions">
        <h2>Alerts</h2><div id="inbox"></div>
        <h2>Reports</h2><div id="reports"></div>
      </div>`;
    this.root.addEventListener("click", (event) => this.onClick(event));
    await Promise.all([this.refreshRoster(), this.refreshInbox(), this.refreshReports()]);
    this.pollHandle = setInterval(() => void this.refreshInbox(), ALERT_POLL_MS);
  }

  stop(): void {
    if (this.pollHandle !== null) clearInterval(this.pollHandle);
  }

  private pane(id: string): HTMLElement {
    const el = this.root.querySelector<HTMLElement>(`#${id}`);
    if (!el) throw new Error(`missing pane #${id}`);
    return el;
  }

  async refreshRoster(): Promise<void> {
    const rows = sortRoster(await fetchRoster(this.client), this.sort);
    this.pane("roster").innerHTML = renderRoster(rows, new Date());
  }

  async refreshInbox(): Promise<void> {
    const alerts = await this.client.listAlerts(false);
    this.pane("inbox").innerHTML = renderInbox(alerts);
  }

  async refreshReports(): Promise<void> {
    const [tam, hapa, attrakdiff, stages, preferences] = await Promise.all([
      this.client.reportInstrument("TAM"),
      this.client.reportInstrument("HAPA"),
      this.client.reportInstrument("AttrakDiff"),
      this.client.reportHapaStages(),
      this.client.reportPreferences(),
    ]);
    this.pane("reports").innerHTML = [
      renderInstrumentReport(tam),
      renderInstrumentReport(hapa),
      renderInstrumentReport(attrakdiff),
      renderHapaStages(stages),
      renderPreferenceTable(preferences),
    ].join("\n");
  }

  async showUser(userId: string): Promise<void> {
    this.selectedUser = userId;
    const detail = await fetchUserDetail(this.client, userId);
    this.pane("detail").innerHTML = [
      `<h3>${detail.user.display_name} <span class="chip">${detail.user.activity_class}</span></h3>`,
      renderAdherenceTimeline(detail.adherence),
      `<h4>Follow-ups</h4>`,
      renderFollowupChecklist(detail.followups),
      `<h4>Messages</h4>`,
      renderMessages(detail.messages),
      `<h4>Transcript</h4>`,
      renderTranscript(detail.transcript),
    ].join("\n");
  }

  private onClick(event: Event): void {
    const target = event.target as HTMLElement | null;
    if (!target) return;
    const ackId = target.dataset["alertId"];
    if (target.classList.contains("ack") && ackId) {
      // optimistic: drop the row immediately, reconcile on the next poll
      target.closest("li.alert")?.remove();
      void acknowledgeWithRetry(this.client, ackId).then(() => this.refreshInbox());
      return;
    }
    const row = target.closest<HTMLElement>("tr[data-user-id]");
    const userId = row?.dataset["userId"];
    if (userId) void this.showUser(userId);
  }

  get currentUser(): string | null {
    return this.selectedUser;
  }
}

export function mount(config: AppConfig, root: HTMLElement): Dashboard {
  const dashboard = new Dashboard(config, root);
  void dashboard.start();
  return dashboard;
}
