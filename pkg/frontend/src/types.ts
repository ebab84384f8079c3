/** JSON shapes returned by the coachai service API. */

export interface User {
  user_id: string;
  display_name: string;
  age: number;
  gender: string;
  phone: string | null;
  locale: string;
  registered_at: string | null;
  chat_id: string | null;
  channel_kind: string | null;
  activity_class: string;
  intake_complete: boolean;
  last_interaction_at: string | null;
  inactivity_period_days: number;
}

export interface Activity {
  activity_id: string;
  title: string;
  instructions: string;
  topic: string;
  recurrence: string;
  effort: number;
}

export interface Plan {
  plan_id: string;
  category: string;
  description: string;
  activity_ids: string[];
  trigger_time: string;
  feedback_time: string;
  start_date: string;
  expiration_date: string;
}

export interface Assignment {
  assignment_id: string;
  user_id: string;
  plan_id: string;
  assigned_at: string;
  status: string;
  scheduled_jobs?: number;
}

export interface AdherenceReport {
  user_id: string;
  assignment_id: string;
  per_activity_mean: Record<string, number>;
  overall_mean: number;
  binary_category: string;
  ternary_category: string;
  computed_at: string;
}

export interface Alert {
  alert_id: string;
  kind: string;
  user_id: string;
  created_at: string;
  detail: string;
  acknowledged: boolean;
}

export interface PrivateMessage {
  message_id: string;
  coach_id: string;
  user_id: string;
  body: string;
  sent_at: string;
  week_index: number | null;
}

export interface Followup {
  user_id: string;
  week_index: number;
  due_at: string;
  done: boolean;
}

export interface QuestionnaireResponse {
  user_id: string;
  template_id: string;
  week_index: number;
  answers: Record<string, unknown>;
  submitted_at: string;
}

export interface TranscriptEntry {
  text: string;
  keyboard: string[] | null;
}

export interface TestAnnotation {
  statistic: number;
  df: number[];
  p_value: number;
}

export interface InstrumentDimension {
  weekly_means: Record<string, number>;
  one_sample_t?: TestAnnotation;
  rm_anova?: TestAnnotation;
  posthoc?: unknown;
}

export interface InstrumentReport {
  instrument: string;
  weeks: number[];
  dimensions: Record<string, InstrumentDimension>;
  [key: string]: unknown;
}

export interface HapaStagesReport {
  counts: Record<string, number>;
  [key: string]: unknown;
}

export interface PreferencesReport {
  table: Record<string, Record<string, number>>;
  [key: string]: unknown;
}

/** View model for one roster line; every field is copied verbatim from
 * API responses — the dashboard never recomputes a category or a mean. */
export interface RosterRow {
  userId: string;
  name: string;
  activityClass: string;
  currentPlan: string | null;
  overallMean: number | null;
  binaryCategory: string | null;
  ternaryCategory: string | null;
  openAlerts: number;
  lastInteractionAt: string | null;
}

export interface PlanDraft {
  category: string;
  description: string;
  activityIds: string[];
  triggerTime: string;
  feedbackTime: string;
  startDate: string;
  expirationDate: string;
}
