/** Browser shell: run list, plan board with feedback box, draft page.
 *
 * State lives on the server; this shell re-fetches after every mutation, so a
 * page reload always reproduces the same view from the API alone.
 */

import { ApiError, ReviewApiClient } from "./api.js";
import { buildPlanBoardView, renderBoardHtml, type PlanBoardView } from "./board.js";
import { buildDraftView, renderDraftHtml } from "./draft.js";
import { canSubmit, emptyEdits, serializeFeedback, type FeedbackEdits } from "./feedback.js";
import type { PlanSnapshot } from "./types.js";

function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get("api");
  return override ?? window.location.origin;
}

const client = new ReviewApiClient(apiBase());

interface BoardState {
  runId: string;
  snapshot: PlanSnapshot;
  view: PlanBoardView;
  edits: FeedbackEdits;
}

let board: BoardState | null = null;

function root(): HTMLElement {
  const el = document.getElementById("app");
  if (!el) throw new Error("missing #app container");
  return el;
}

function showError(err: unknown): void {
  const message =
    err instanceof ApiError
      ? err.isStaleVersion
        ? `${err.detail}; reload the plan and resubmit.`
        : err.detail
      : String(err);
  const box = document.createElement("div");
  box.className = "banner error";
  box.textContent = message;
  root().prepend(box);
}

async function showRunList(): Promise<void> {
  const runs = await client.listRuns();
  const rows = runs
    .map(
      (r) =>
        `<tr><td><a href="#/runs/${r.run_id}/plan">${r.run_id}</a></td><td>${r.stage}</td><td>v${r.plan_version}</td></tr>`,
    )
    .join("");
  root().innerHTML = `<h1>Runs</h1><table><thead><tr><th>run</th><th>stage</th><th>plan</th></tr></thead><tbody>${rows}</tbody></table>`;
}

function feedbackControls(state: BoardState): string {
  const enabled = canSubmit(state.edits) && !state.view.approved;
  return `<form id="feedback">
<textarea id="note" rows="4" placeholder="Notes for the revisor (optional when items are toggled)"></textarea>
<button id="submit-feedback" type="submit" ${enabled ? "" : "disabled"}>Submit feedback</button>
<button id="approve" type="button">Approve v${state.view.version}</button>
</form>`;
}

async function showPlan(runId: string): Promise<void> {
  try {
    const snapshot = await client.plan(runId);
    const previous = board && board.runId === runId ? board.view.version : undefined;
    const view = buildPlanBoardView(snapshot, previous);
    board = { runId, snapshot, view, edits: emptyEdits() };
    root().innerHTML = `<h1>Run ${runId}</h1>${renderBoardHtml(view)}${feedbackControls(board)}`;
    wirePlanEvents(board);
  } catch (err) {
    if (err instanceof ApiError && err.isConflict) {
      root().innerHTML = `<h1>Run ${runId}</h1><div class="banner">Plan not ready yet. Advance the run and reload.</div>`;
      return;
    }
    throw err;
  }
}

function wirePlanEvents(state: BoardState): void {
  for (const input of root().querySelectorAll<HTMLInputElement>("input[data-item]")) {
    input.addEventListener("change", () => {
      const concernId = input.dataset["concern"] ?? "";
      const index = Number(input.dataset["item"]);
      const card = state.view.cards.find((c) => c.concernId === concernId);
      const item = card?.actionItems[index];
      if (!item) return;
      const entry = { concernId, description: item.description };
      if (input.checked) {
        state.edits.removedActionItems = state.edits.removedActionItems.filter(
          (e) => !(e.concernId === entry.concernId && e.description === entry.description),
        );
      } else {
        state.edits.removedActionItems.push(entry);
      }
      refreshSubmit(state);
    });
  }
  const note = document.getElementById("note") as HTMLTextAreaElement | null;
  note?.addEventListener("input", () => {
    state.edits.note = note.value;
    refreshSubmit(state);
  });
  const form = document.getElementById("feedback");
  form?.addEventListener("submit", (event) => {
    event.preventDefault();
    void submitFeedback(state);
  });
  document.getElementById("approve")?.addEventListener("click", () => {
    void approvePlan(state);
  });
}

function refreshSubmit(state: BoardState): void {
  const button = document.getElementById("submit-feedback") as HTMLButtonElement | null;
  if (button) button.disabled = !canSubmit(state.edits) || state.view.approved;
}

async function submitFeedback(state: BoardState): Promise<void> {
  try {
    await client.submitFeedback(state.runId, serializeFeedback(state.edits));
    await showPlan(state.runId);
  } catch (err) {
    showError(err);
  }
}

async function approvePlan(state: BoardState): Promise<void> {
  try {
    await client.approve(state.runId, state.view.version);
    await client.advance(state.runId);
    window.location.hash = `#/runs/${state.runId}/draft`;
  } catch (err) {
    showError(err);
  }
}

async function showDraft(runId: string): Promise<void> {
  try {
    const snapshot = await client.draft(runId);
    const view = buildDraftView(snapshot);
    root().innerHTML = `<h1>Run ${runId}</h1>${renderDraftHtml(view)}`;
    for (const badge of root().querySelectorAll<HTMLElement>(".badge.pending")) {
      badge.addEventListener("click", () => {
        void fillBadge(runId, Number(badge.dataset["location"]));
      });
    }
  } catch (err) {
    if (err instanceof ApiError && err.isConflict) {
      root().innerHTML = `<h1>Run ${runId}</h1><div class="banner">No draft yet; the plan needs approval first.</div>`;
      return;
    }
    throw err;
  }
}

async function fillBadge(runId: string, location: number): Promise<void> {
  const value = window.prompt("Verified value for this placeholder:");
  if (!value) return;
  const note = window.prompt("Where does this number come from?");
  if (!note) return;
  try {
    await client.fillPlaceholder(runId, location, value, note);
    await showDraft(runId);
  } catch (err) {
    showError(err);
  }
}

async function route(): Promise<void> {
  const hash = window.location.hash;
  const plan = /^#\/runs\/([^/]+)\/plan$/.exec(hash);
  const draft = /^#\/runs\/([^/]+)\/draft$/.exec(hash);
  try {
    if (plan?.[1]) {
      await showPlan(plan[1]);
    } else if (draft?.[1]) {
      await showDraft(draft[1]);
    } else {
      await showRunList();
    }
  } catch (err) {
    showError(err);
  }
}

window.addEventListener("hashchange", () => void route());
void route();
