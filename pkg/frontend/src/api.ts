/** Thin typed client for the coachai service HTTP API.
 *
 * Every dashboard number comes through here; there is deliberately no
 * fallback computation on error — a failed fetch surfaces as an
 * ApiError so the UI never shows a locally derived value.
 */

import type {
  Activity,
  AdherenceReport,
  Alert,
  Assignment,
  Followup,
  HapaStagesReport,
  InstrumentReport,
  Plan,
  PlanDraft,
  PreferencesReport,
  PrivateMessage,
  QuestionnaireResponse,
  TranscriptEntry,
  User,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token?: string,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.token) headers["authorization"] = `Bearer ${this.token}`;
    const response = await fetch(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const payload = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const detail =
        payload && typeof payload === "object" && "detail" in payload
          ? String((payload as { detail: unknown }).detail)
          : text;
      throw new ApiError(response.status, detail);
    }
    return payload as T;
  }

  private get<T>(path: string): Promise<T> {
    return this.request<T>("GET", path);
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>("POST", path, body);
  }

  health(): Promise<{ status: string; now: string }> {
    return this.get("/api/health");
  }

  // -- users ----------------------------------------------------------

  listUsers(): Promise<User[]> {
    return this.get("/api/users");
  }

  getUser(userId: string): Promise<User> {
    return this.get(`/api/users/${userId}`);
  }

  createUser(body: { display_name: string; age: number; phone?: string }): Promise<User> {
    return this.post("/api/users", body);
  }

  userTranscript(userId: string): Promise<TranscriptEntry[]> {
    return this.get(`/api/users/${userId}/transcript`);
  }

  userResponses(userId: string): Promise<QuestionnaireResponse[]> {
    return this.get(`/api/users/${userId}/responses`);
  }

  // -- content and assignment -----------------------------------------

  listActivities(): Promise<Activity[]> {
    return this.get("/api/activities");
  }

  createActivity(body: {
    title: string;
    topic: string;
    instructions?: string;
    recurrence?: string;
    effort?: number;
  }): Promise<Activity> {
    return this.post("/api/activities", body);
  }

  listPlans(): Promise<Plan[]> {
    return this.get("/api/plans");
  }

  createPlan(draft: PlanDraft): Promise<Plan> {
    return this.post("/api/plans", {
      category: draft.category,
      description: draft.description,
      activity_ids: draft.activityIds,
      trigger_time: draft.triggerTime,
      feedback_time: draft.feedbackTime,
      start_date: draft.startDate,
      expiration_date: draft.expirationDate,
    });
  }

  assignPlan(userId: string, planId: string): Promise<Assignment> {
    return this.post("/api/assignments", { user_id: userId, plan_id: planId });
  }

  listAssignments(userId?: string): Promise<Assignment[]> {
    const suffix = userId ? `?user_id=${encodeURIComponent(userId)}` : "";
    return this.get(`/api/assignments${suffix}`);
  }

  startStudyProtocol(
    userId: string,
    startDate: string,
  ): Promise<{ user_id: string; scheduled_jobs: number }> {
    return this.post(`/api/users/${userId}/study-protocol`, { start_date: startDate });
  }

  userAdherence(userId: string): Promise<AdherenceReport[]> {
    return this.get(`/api/users/${userId}/adherence`);
  }

  recordExternalFeedback(
    userId: string,
    body: {
      assignment_id: string;
      activity_id: string;
      occurrence_date: string;
      completion: number;
      note?: string;
    },
  ): Promise<AdherenceReport> {
    return this.post(`/api/users/${userId}/external-feedback`, body);
  }

  // -- alerts, messages, follow-ups -------------------------------------

  listAlerts(acknowledged?: boolean): Promise<Alert[]> {
    const suffix = acknowledged === undefined ? "" : `?acknowledged=${acknowledged}`;
    return this.get(`/api/alerts${suffix}`);
  }

  acknowledgeAlert(alertId: string): Promise<Alert> {
    return this.post(`/api/alerts/${alertId}/ack`);
  }

  sendMessage(userId: string, body: string, weekIndex?: number): Promise<PrivateMessage> {
    return this.post(`/api/users/${userId}/messages`, {
      body,
      week_index: weekIndex ?? null,
    });
  }

  userMessages(userId: string): Promise<PrivateMessage[]> {
    return this.get(`/api/users/${userId}/messages`);
  }

  listFollowups(userId?: string): Promise<Followup[]> {
    const suffix = userId ? `?user_id=${encodeURIComponent(userId)}` : "";
    return this.get(`/api/followups${suffix}`);
  }

  // -- reports ----------------------------------------------------------

  reportDescriptives(): Promise<Record<string, unknown>> {
    return this.get("/api/reports/descriptives");
  }

  reportInstrument(instrument: string): Promise<InstrumentReport> {
    return this.get(`/api/reports/instrument/${instrument}`);
  }

  reportPreferences(): Promise<PreferencesReport> {
    return this.get("/api/reports/preferences");
  }

  reportHapaStages(): Promise<HapaStagesReport> {
    return this.get("/api/reports/hapa-stages");
  }

  // -- admin (simulated deployments only) --------------------------------

  adminTick(nowIso: string): Promise<{ fired: string[]; now: string }> {
    return this.post("/api/admin/tick", { now: nowIso });
  }

  adminChat(chatId: string, text: string): Promise<{ transcript: TranscriptEntry[] }> {
    return this.post("/api/admin/chat", { chat_id: chatId, text });
  }
}
