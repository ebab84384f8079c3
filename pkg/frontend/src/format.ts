/** Presentation helpers. Formatting only — never derives domain values. */

export function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

/** "3d ago" style age of a timestamp, or "never". */
export function relativeAge(iso: string | null, now: Date): string {
  if (!iso) return "never";
  const seconds = Math.max(0, (now.getTime() - new Date(iso).getTime()) / 1000);
  if (seconds < 60) return "just now";
  if (seconds < 3600) return `${Math.floor(seconds / 60)}m ago`;
  if (seconds < 86400) return `${Math.floor(seconds / 3600)}h ago`;
  return `${Math.floor(seconds / 86400)}d ago`;
}

/** Render a t/F annotation exactly as reported by the API. */
export function formatTest(
  name: string,
  test: { statistic: number; df: number[]; p_value: number },
): string {
  const df = test.df.map((d) => formatNumber(d)).join(",");
  return `${name}(${df})=${formatNumber(test.statistic, 3)} p=${formatNumber(test.p_value, 4)}`;
}

export function formatNumber(value: number, digits = 0): string {
  if (!Number.isFinite(value)) return value > 0 ? "inf" : "-inf";
  return digits > 0 ? value.toFixed(digits) : String(value);
}
