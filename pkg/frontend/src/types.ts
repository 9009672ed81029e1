/** Wire types mirroring the orchestrator API payloads, field for field. */

export interface RunStatus {
  run_id: string;
  stage: string;
  plan_version: number;
  failure: string;
  config: Record<string, unknown>;
  events: number;
}

export interface SourceSnapshot {
  ref: string;
  locator: number;
  quote: string;
  reviewer_id: string;
  verified: boolean;
}

export interface ConcernSnapshot {
  concern_id: string;
  issue: string;
  priority: string;
  hooks: string[];
  sources: SourceSnapshot[];
}

export interface ActionItemSnapshot {
  description: string;
  rationale: string;
  scope: string;
}

export interface PlanCardSnapshot {
  concern_id: string;
  kind: string;
  argument: string;
  internal_refs: string[];
  external_refs: string[];
  action_items: ActionItemSnapshot[];
  deliverables: string[];
  feasibility: string;
}

export interface FindingSnapshot {
  target_id: string;
  kind: string;
  note: string;
}

export interface BriefSnapshot {
  concern_id: string;
  brief_id: string;
  title: string;
  url: string;
}

export interface PlanSnapshot {
  run_id: string;
  stage: string;
  version: number;
  provenance: string;
  author_feedback: string;
  approved: boolean;
  concerns: ConcernSnapshot[];
  plans: PlanCardSnapshot[];
  findings: FindingSnapshot[];
  briefs: BriefSnapshot[];
}

export interface PlaceholderSnapshot {
  location: number;
  numeral: string;
  marker: string;
  raw: string;
}

export interface FillRecord {
  location: number;
  replaced: string;
  value: string;
  evidence: string;
}

export interface DraftSectionSnapshot {
  title: string;
  reviewer_id: string;
  body: string;
}

export interface DraftSnapshot {
  run_id: string;
  stage: string;
  text: string;
  placeholder_style: string;
  placeholders: PlaceholderSnapshot[];
  pending: PlaceholderSnapshot[];
  fills: FillRecord[];
  sections: DraftSectionSnapshot[];
}

export interface CreateRunRequest {
  manuscript: string;
  reviews: string[];
  style?: string;
  auto_approve?: boolean;
  token_budget?: number | null;
  prior_rounds?: string;
}
