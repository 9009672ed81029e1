import { describe, expect, it } from "vitest";

import { buildPlanBoardView, renderBoardHtml, visibleStrings } from "../src/board.js";
import type { PlanSnapshot } from "../src/types.js";

const SNAPSHOT: PlanSnapshot = {
  run_id: "r-123",
  stage: "awaiting_approval",
  version: 2,
  provenance: "human_feedback",
  author_feedback: "drop q3",
  approved: false,
  concerns: [
    {
      concern_id: "q1",
      issue: 'No comparison with "LoRA" & friends <yet>.',
      priority: "P1",
      hooks: ["missing baseline"],
      sources: [
        {
          ref: "R1-W1",
          locator: 4,
          quote: "No comparison with parameter-efficient methods like LoRA is provided.",
          reviewer_id: "R1",
          verified: true,
        },
      ],
    },
    {
      concern_id: "q2",
      issue: "Motivation for mutual information is unclear.",
      priority: "P2",
      hooks: ["clarity"],
      sources: [],
    },
  ],
  plans: [
    {
      concern_id: "q1",
      kind: "experiment",
      argument: "We will add a LoRA baseline at matched parameter count.",
      internal_refs: ["Sec.4.2"],
      external_refs: ["b1"],
      action_items: [
        {
          description: "Run LoRA rank 8; report mean of 3 seeds",
          rationale: "Matches reviewer request",
          scope: "camera-ready",
        },
      ],
      deliverables: ["Table 2 row"],
      feasibility: "feasible within a week",
    },
  ],
  findings: [
    { target_id: "q1", kind: "coverage_gap", note: "hook not cited in argument" },
    { target_id: "q9", kind: "orphan", note: "points at a removed concern" },
  ],
  briefs: [
    {
      concern_id: "q1",
      brief_id: "b1",
      title: "LoRA: Low-Rank Adaptation",
      url: "https://arxiv.org/abs/2106.09685",
    },
  ],
};

describe("buildPlanBoardView", () => {
  it("keeps every snapshot string verbatim", () => {
    const view = buildPlanBoardView(SNAPSHOT);
    const strings = visibleStrings(view);
    const expected = [
      'No comparison with "LoRA" & friends <yet>.',
      "P1",
      "experiment",
      "We will add a LoRA baseline at matched parameter count.",
      "feasible within a week",
      "missing baseline",
      "Table 2 row",
      "R1-W1",
      "No comparison with parameter-efficient methods like LoRA is provided.",
      "R1",
      "Run LoRA rank 8; report mean of 3 seeds",
      "Matches reviewer request",
      "camera-ready",
      "Sec.4.2",
      "b1",
      "LoRA: Low-Rank Adaptation",
      "https://arxiv.org/abs/2106.09685",
      "coverage_gap",
      "hook not cited in argument",
    ];
    for (const text of expected) {
      expect(strings).toContain(text);
    }
  });

  it("renders one card per concern, in snapshot order", () => {
    const view = buildPlanBoardView(SNAPSHOT);
    expect(view.cards.map((c) => c.concernId)).toEqual(["q1", "q2"]);
  });

  it("gives concerns without a plan an explicit empty strategy", () => {
    const view = buildPlanBoardView(SNAPSHOT);
    const bare = view.cards[1];
    expect(bare?.strategyKind).toBe("none");
    expect(bare?.argument).toBe("");
    expect(bare?.actionItems).toEqual([]);
    expect(bare?.evidence).toEqual([]);
  });

  it("resolves external refs against briefs", () => {
    const view = buildPlanBoardView(SNAPSHOT);
    const external = view.cards[0]?.evidence.find((e) => e.source === "external");
    expect(external?.title).toBe("LoRA: Low-Rank Adaptation");
    expect(external?.url).toBe("https://arxiv.org/abs/2106.09685");
  });

  it("separates findings that target a missing concern", () => {
    const view = buildPlanBoardView(SNAPSHOT);
    expect(view.cards[0]?.findings.map((f) => f.kind)).toEqual(["coverage_gap"]);
    expect(view.orphanFindings.map((f) => f.target_id)).toEqual(["q9"]);
  });

  it("raises the stale banner only when the server is ahead", () => {
    expect(buildPlanBoardView(SNAPSHOT).staleBanner).toBe(false);
    expect(buildPlanBoardView(SNAPSHOT, 2).staleBanner).toBe(false);
    expect(buildPlanBoardView(SNAPSHOT, 1).staleBanner).toBe(true);
  });
});

describe("renderBoardHtml", () => {
  it("escapes markup-significant characters", () => {
    const html = renderBoardHtml(buildPlanBoardView(SNAPSHOT));
    expect(html).toContain("&quot;LoRA&quot; &amp; friends &lt;yet&gt;.");
    expect(html).not.toContain("<yet>");
  });

  it("emits a checked checkbox per action item with concern and index data", () => {
    const html = renderBoardHtml(buildPlanBoardView(SNAPSHOT));
    expect(html).toContain('data-concern="q1" data-item="0"');
    expect(html).toContain('type="checkbox" checked');
  });

  it("shows the stale banner only for stale views", () => {
    expect(renderBoardHtml(buildPlanBoardView(SNAPSHOT, 1))).toContain("banner stale");
    expect(renderBoardHtml(buildPlanBoardView(SNAPSHOT))).not.toContain("banner stale");
  });
});
