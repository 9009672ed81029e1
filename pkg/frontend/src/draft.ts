/** Draft page view model: placeholder badges over the drafted letter. */

import type { DraftSnapshot, FillRecord } from "./types.js";

export interface PlaceholderBadge {
  location: number;
  numeral: string;
  marker: string;
  raw: string;
  filled: boolean;
  /** Verified value and evidence note, present once filled. */
  value: string;
  evidence: string;
}

export interface DraftPageView {
  runId: string;
  stage: string;
  text: string;
  style: string;
  badges: PlaceholderBadge[];
  pendingCount: number;
  sections: { title: string; reviewerId: string; body: string }[];
}

export function buildDraftView(snapshot: DraftSnapshot): DraftPageView {
  const pending = snapshot.pending.map<PlaceholderBadge>((p) => ({
    location: p.location,
    numeral: p.numeral,
    marker: p.marker,
    raw: p.raw,
    filled: false,
    value: "",
    evidence: "",
  }));
  const done = snapshot.fills.map<PlaceholderBadge>((f: FillRecord) => ({
    location: f.location,
    numeral: "",
    marker: "filled",
    raw: f.replaced,
    filled: true,
    value: f.value,
    evidence: f.evidence,
  }));
  return {
    runId: snapshot.run_id,
    stage: snapshot.stage,
    text: snapshot.text,
    style: snapshot.placeholder_style,
    badges: [...pending, ...done].sort((a, b) => a.location - b.location),
    pendingCount: pending.length,
    sections: snapshot.sections.map((s) => ({
      title: s.title,
      reviewerId: s.reviewer_id,
      body: s.body,
    })),
  };
}

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderDraftHtml(view: DraftPageView): string {
  const badges = view.badges
    .map((b) =>
      b.filled
        ? `<li class="badge filled" data-location="${b.location}">${escapeHtml(b.raw)} &rarr; ${escapeHtml(b.value)}</li>`
        : `<li class="badge pending" data-location="${b.location}"><code>${escapeHtml(b.raw)}</code> needs a verified value</li>`,
    )
    .join("");
  const sections = view.sections
    .map(
      (s) =>
        `<section data-reviewer="${escapeHtml(s.reviewerId)}"><h3>${escapeHtml(s.title)}</h3><pre>${escapeHtml(s.body)}</pre></section>`,
    )
    .join("\n");
  return `<div class="draft" data-pending="${view.pendingCount}">
<h2>Draft (${escapeHtml(view.style)} placeholders, ${view.pendingCount} pending)</h2>
<ul class="badges">${badges}</ul>
${sections}
</div>`;
}
