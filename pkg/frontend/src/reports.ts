/** Study report views: per-dimension weekly means with t/F annotations,
 * the preference table, and the HAPA stage distribution. All numbers are
 * rendered exactly as the API reports them. */

import type { HapaStagesReport, InstrumentReport, PreferencesReport } from "./types.js";
import { escapeHtml, formatTest } from "./format.js";

export function renderInstrumentReport(report: InstrumentReport): string {
  const dimensions = Object.entries(report.dimensions);
  if (dimensions.length === 0) {
    return `<p class="empty">No responses collected for ${escapeHtml(report.instrument)} yet.</p>`;
  }
  const weeks = report.weeks;
  const head = weeks.map((w) => `<th>w${w}</th>`).join("");
  const rows = dimensions
    .map(([dimension, entry]) => {
      const cells = weeks
        .map((w) => {
          const mean = entry.weekly_means[String(w)];
          return `<td data-week="${w}">${mean === undefined ? "–" : mean}</td>`;
        })
        .join("");
      const annotations: string[] = [];
      if (entry.one_sample_t) annotations.push(formatTest("t", entry.one_sample_t));
      if (entry.rm_anova) annotations.push(formatTest("F", entry.rm_anova));
      return `<tr data-dimension="${escapeHtml(dimension)}">
        <th scope="row">${escapeHtml(dimension)}</th>${cells}
        <td class="tests">${escapeHtml(annotations.join("  "))}</td>
      </tr>`;
    })
    .join("\n");
  return `<table class="instrument" data-instrument="${escapeHtml(report.instrument)}">
    <thead><tr><th>Dimension</th>${head}<th>Tests</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

export function renderPreferenceTable(report: PreferencesReport): string {
  const topics = Object.entries(report.table);
  if (topics.length === 0) return `<p class="empty">No preference responses yet.</p>`;
  const choices = [...new Set(topics.flatMap(([, row]) => Object.keys(row)))].sort();
  const head = choices.map((c) => `<th>${escapeHtml(c)}</th>`).join("");
  const rows = topics
    .map(([topic, row]) => {
      const cells = choices
        .map((c) => `<td data-choice="${escapeHtml(c)}">${row[c] ?? 0}</td>`)
        .join("");
      return `<tr data-topic="${escapeHtml(topic)}"><th scope="row">${escapeHtml(topic)}</th>${cells}</tr>`;
    })
    .join("\n");
  return `<table class="preferences"><thead><tr><th>Topic</th>${head}</tr></thead><tbody>${rows}</tbody></table>`;
}

export function renderHapaStages(report: HapaStagesReport): string {
  const entries = Object.entries(report.counts);
  if (entries.length === 0) return `<p class="empty">No HAPA responses yet.</p>`;
  const items = entries
    .sort(([a], [b]) => a.localeCompare(b))
    .map(
      ([stage, count]) =>
        `<li data-stage="${escapeHtml(stage)}"><span class="stage">${escapeHtml(stage)}</span><span class="count">${count}</span></li>`,
    )
    .join("\n");
  return `<ul class="hapa-stages">${items}</ul>`;
}
