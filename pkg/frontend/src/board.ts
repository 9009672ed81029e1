/** Plan board view model.
 *
 * Every string put on a card is taken verbatim from the API snapshot; this
 * module arranges, it never rewrites.  Concerns without a matching plan get
 * an explicit "none" strategy rather than invented prose.
 */

import type {
  ActionItemSnapshot,
  BriefSnapshot,
  ConcernSnapshot,
  FindingSnapshot,
  PlanSnapshot,
  SourceSnapshot,
} from "./types.js";

export interface EvidenceRef {
  label: string;
  source: "internal" | "external";
  /** Brief title for external refs; internal refs carry only their anchor id. */
  title: string;
  url: string;
}

export interface ConcernCard {
  concernId: string;
  issue: string;
  priorityBadge: string;
  hooks: string[];
  sources: SourceSnapshot[];
  strategyKind: string;
  argument: string;
  evidence: EvidenceRef[];
  actionItems: ActionItemSnapshot[];
  deliverables: string[];
  feasibility: string;
  findings: FindingSnapshot[];
}

export interface PlanBoardView {
  runId: string;
  stage: string;
  version: number;
  provenance: string;
  approved: boolean;
  authorFeedback: string;
  cards: ConcernCard[];
  /** Findings whose target is not one of the rendered concerns. */
  orphanFindings: FindingSnapshot[];
  /** True when the server moved past the version this client loaded. */
  staleBanner: boolean;
}

function evidenceFor(
  planRefs: { internal: string[]; external: string[] },
  briefs: BriefSnapshot[],
): EvidenceRef[] {
  const briefById = new Map(briefs.map((b) => [b.brief_id, b]));
  const internal = planRefs.internal.map<EvidenceRef>((label) => ({
    label,
    source: "internal",
    title: "",
    url: "",
  }));
  const external = planRefs.external.map<EvidenceRef>((label) => {
    const brief = briefById.get(label);
    return { label, source: "external", title: brief?.title ?? "", url: brief?.url ?? "" };
  });
  return [...internal, ...external];
}

function cardFor(
  concern: ConcernSnapshot,
  snapshot: PlanSnapshot,
): ConcernCard {
  const plan = snapshot.plans.find((p) => p.concern_id === concern.concern_id);
  return {
    concernId: concern.concern_id,
    issue: concern.issue,
    priorityBadge: concern.priority,
    hooks: [...concern.hooks],
    sources: concern.sources.map((s) => ({ ...s })),
    strategyKind: plan?.kind ?? "none",
    argument: plan?.argument ?? "",
    evidence: plan
      ? evidenceFor({ internal: plan.internal_refs, external: plan.external_refs }, snapshot.briefs)
      : [],
    actionItems: plan ? plan.action_items.map((a) => ({ ...a })) : [],
    deliverables: plan ? [...plan.deliverables] : [],
    feasibility: plan?.feasibility ?? "",
    findings: snapshot.findings.filter((f) => f.target_id === concern.concern_id),
  };
}

export function buildPlanBoardView(
  snapshot: PlanSnapshot,
  loadedVersion?: number,
): PlanBoardView {
  const concernIds = new Set(snapshot.concerns.map((c) => c.concern_id));
  return {
    runId: snapshot.run_id,
    stage: snapshot.stage,
    version: snapshot.version,
    provenance: snapshot.provenance,
    approved: snapshot.approved,
    authorFeedback: snapshot.author_feedback,
    cards: snapshot.concerns.map((concern) => cardFor(concern, snapshot)),
    orphanFindings: snapshot.findings.filter((f) => !concernIds.has(f.target_id)),
    staleBanner: loadedVersion !== undefined && snapshot.version > loadedVersion,
  };
}

/** All user-visible text on the board, for fidelity checks against the snapshot. */
export function visibleStrings(view: PlanBoardView): string[] {
  const out: string[] = [];
  for (const card of view.cards) {
    out.push(card.issue, card.priorityBadge, card.strategyKind);
    if (card.argument) out.push(card.argument);
    if (card.feasibility) out.push(card.feasibility);
    out.push(...card.hooks, ...card.deliverables);
    for (const source of card.sources) out.push(source.ref, source.quote, source.reviewer_id);
    for (const item of card.actionItems) {
      out.push(item.description);
      if (item.rationale) out.push(item.rationale);
      if (item.scope) out.push(item.scope);
    }
    for (const ref of card.evidence) {
      out.push(ref.label);
      if (ref.title) out.push(ref.title);
      if (ref.url) out.push(ref.url);
    }
    for (const finding of card.findings) out.push(finding.kind, finding.note);
  }
  for (const finding of view.orphanFindings) out.push(finding.kind, finding.note);
  return out;
}

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

/** Static HTML rendering of the board; used by the app shell. */
export function renderBoardHtml(view: PlanBoardView): string {
  const banner = view.staleBanner
    ? `<div class="banner stale">Plan moved to v${view.version} on the server. Reload before editing.</div>`
    : "";
  const approved = view.approved ? " (approved)" : "";
  const cards = view.cards
    .map((card) => {
      const sources = card.sources
        .map((s) => `<li><code>${escapeHtml(s.ref)}</code> ${escapeHtml(s.quote)}</li>`)
        .join("");
      const items = card.actionItems
        .map(
          (a, i) =>
            `<li><label><input type="checkbox" checked data-concern="${escapeHtml(card.concernId)}" data-item="${i}"> ${escapeHtml(a.description)}</label></li>`,
        )
        .join("");
      const evidence = card.evidence
        .map((e) =>
          e.url
            ? `<li>[${e.source}] <a href="${escapeHtml(e.url)}">${escapeHtml(e.title || e.label)}</a></li>`
            : `<li>[${e.source}] <code>${escapeHtml(e.label)}</code></li>`,
        )
        .join("");
      const findings = card.findings
        .map((f) => `<li class="finding">${escapeHtml(f.kind)}: ${escapeHtml(f.note)}</li>`)
        .join("");
      return `<article class="card" data-concern="${escapeHtml(card.concernId)}">
<header><span class="badge">${escapeHtml(card.priorityBadge)}</span> <strong>${escapeHtml(card.concernId)}</strong> <em>${escapeHtml(card.strategyKind)}</em></header>
<p class="issue">${escapeHtml(card.issue)}</p>
<p class="argument">${escapeHtml(card.argument)}</p>
<ul class="sources">${sources}</ul>
<ul class="evidence">${evidence}</ul>
<ul class="items">${items}</ul>
<ul class="findings">${findings}</ul>
</article>`;
    })
    .join("\n");
  return `${banner}<section class="board" data-version="${view.version}">
<h2>Plan v${view.version}${approved}</h2>
${cards}
</section>`;
}
