import type { Span } from "./types.js";

interface Marked {
  start: number;
  end: number;
  cls: string;
}

/**
 * Render a clinician transcript with the feedback phrase spans marked.
 * Strength and improvement spans get visually distinct mark classes.
 * Spans come from the API; nothing is re-matched client side.
 */
export function renderHighlighted(
  doc: Document,
  transcript: string,
  strengthSpans: Span[],
  improvementSpans: Span[],
): HTMLElement {
  const marks: Marked[] = [
    ...strengthSpans.map(([start, end]) => ({ start, end, cls: "hl-strength" })),
    ...improvementSpans.map(([start, end]) => ({ start, end, cls: "hl-improvement" })),
  ].sort((a, b) => a.start - b.start || a.end - b.end);

  const container = doc.createElement("span");
  container.className = "transcript-text";
  let cursor = 0;
  for (const mark of marks) {
    if (mark.start < cursor) continue; // overlapping span; first one wins
    if (mark.start > cursor) {
      container.appendChild(doc.createTextNode(transcript.slice(cursor, mark.start)));
    }
    const el = doc.createElement("mark");
    el.className = mark.cls;
    el.textContent = transcript.slice(mark.start, mark.end);
    container.appendChild(el);
    cursor = mark.end;
  }
  if (cursor < transcript.length) {
    container.appendChild(doc.createTextNode(transcript.slice(cursor)));
  }
  return container;
}
