/** Edit model for the checkpoint and its serialization to feedback text.
 *
 * The backend revisor consumes prose, splitting directives on semicolons and
 * newlines.  The serializer therefore emits one directive per line and keeps
 * semicolons and newlines out of quoted item descriptions so a description
 * can never be misread as a second directive.
 */

export interface RemovedActionItem {
  concernId: string;
  description: string;
}

export interface FeedbackEdits {
  removedConcerns: string[];
  switchedToIntervention: string[];
  removedActionItems: RemovedActionItem[];
  note: string;
}

export function emptyEdits(): FeedbackEdits {
  return { removedConcerns: [], switchedToIntervention: [], removedActionItems: [], note: "" };
}

export function canSubmit(edits: FeedbackEdits): boolean {
  return (
    edits.removedConcerns.length > 0 ||
    edits.switchedToIntervention.length > 0 ||
    edits.removedActionItems.length > 0 ||
    edits.note.trim().length > 0
  );
}

function directiveSafe(text: string): string {
  return text.replace(/[;\n]+/g, ",").trim();
}

/** The exact line emitted when an action item is toggled off. */
export function removalDirective(item: RemovedActionItem): string {
  return `remove action item "${directiveSafe(item.description)}" from ${item.concernId}`;
}

export function serializeFeedback(edits: FeedbackEdits): string {
  const lines: string[] = [];
  for (const concernId of edits.removedConcerns) {
    lines.push(`drop ${concernId}`);
  }
  for (const concernId of edits.switchedToIntervention) {
    lines.push(`switch ${concernId} to intervention`);
  }
  for (const item of edits.removedActionItems) {
    lines.push(removalDirective(item));
  }
  const note = edits.note.trim();
  const directives = lines.join("\n");
  if (directives && note) {
    return `${directives}\n\n${note}`;
  }
  return directives || note;
}
