// Pure HTML-string renderers for chat turns and checklists. Keeping these
// side-effect free makes every view snapshot-testable against fixture
// payloads; main.ts owns all DOM wiring.
//
// Invariants enforced here:
//  - answer text is never rendered without its verdict badge and citations
//    region (renderChatTurn emits all three unconditionally);
//  - flagged/rejected verdicts get a warning treatment;
//  - all visible text comes from the server payload, escaped, never invented.

import type { Citation, QueryResponse, SentenceSupport, ToolTraceEntry } from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Compact label for a citation chip, e.g. "Shelter Basics · FEMA (fixture) · Shelter > 1.4 · p.38". */
export function citationLabel(c: Citation): string {
  const parts = [c.title, c.publisher];
  if (c.section_path.length > 0) parts.push(c.section_path.join(" > "));
  if (c.page !== null && c.page !== undefined) parts.push(`p.${c.page}`);
  return parts.join(" · ");
}

function renderCitations(citations: Citation[]): string {
  if (citations.length === 0) {
    return `<div class="citations" data-empty="true">No citations</div>`;
  }
  const chips = citations
    .map(
      (c) =>
        `<span class="chip citation-chip" data-node-id="${escapeHtml(c.node_id)}">` +
        `${escapeHtml(citationLabel(c))}</span>`,
    )
    .join("");
  return `<div class="citations">${chips}</div>`;
}

function renderVerdictBadge(verdict: QueryResponse["verdict"]): string {
  const warning = verdict !== "grounded";
  return (
    `<span class="badge verdict-${verdict}${warning ? " warning" : ""}"` +
    ` role="status">${verdict.toUpperCase()}</span>`
  );
}

function renderSupportBars(perSentence: SentenceSupport[]): string {
  const rows = perSentence
    .map((s) => {
      const pct = Math.round(Math.max(0, Math.min(1, s.support)) * 100);
      return (
        `<li class="support-row">` +
        `<span class="support-sentence">${escapeHtml(s.sentence)}</span>` +
        `<span class="support-bar"><span class="support-fill" style="width:${pct}%"></span></span>` +
        `<span class="support-value">${pct}%</span>` +
        `</li>`
      );
    })
    .join("");
  return (
    `<details class="support"><summary>Sentence support</summary>` +
    `<ul>${rows}</ul></details>`
  );
}

function renderToolTrace(trace: ToolTraceEntry[]): string {
  const items = trace
    .map(
      (t) =>
        `<li class="trace-entry" data-status="${escapeHtml(t.status)}">` +
        `${escapeHtml(t.tool)} (${escapeHtml(t.status)})</li>`,
    )
    .join("");
  return `<details class="tool-trace"><summary>Tool trace</summary><ul>${items}</ul></details>`;
}

/** One chat turn: the user's query plus the server's answer with verdict
 *  badge, citation chips, support bars, and tool trace. */
export function renderChatTurn(query: string, response: QueryResponse): string {
  const warning = response.verdict !== "grounded";
  return (
    `<article class="turn${warning ? " turn-warning" : ""}">` +
    `<div class="query">${escapeHtml(query)}</div>` +
    `<div class="answer">` +
    renderVerdictBadge(response.verdict) +
    `<p class="answer-text">${escapeHtml(response.answer_text)}</p>` +
    renderCitations(response.citations) +
    renderSupportBars(response.per_sentence) +
    renderToolTrace(response.tool_trace) +
    `</div></article>`
  );
}

export interface ChecklistItemPayload {
  text: string;
  sources: {
    title: string;
    publisher: string;
    section_path?: string[];
    page?: number | null;
  }[];
}

/** Ordered checklist rows with client-local checkboxes and source chips.
 *  Row order mirrors the server payload; checkbox state never leaves the page. */
export function renderChecklist(items: ChecklistItemPayload[]): string {
  if (items.length === 0) {
    return `<div class="checklist" data-empty="true">No actionable items</div>`;
  }
  const rows = items
    .map((item, i) => {
      const chips = item.sources
        .map(
          (s) =>
            `<span class="chip source-chip">${escapeHtml(s.title)} · ${escapeHtml(s.publisher)}</span>`,
        )
        .join("");
      return (
        `<li class="checklist-row">` +
        `<label><input type="checkbox" data-index="${i}">` +
        `<span>${escapeHtml(item.text)}</span></label>${chips}</li>`
      );
    })
    .join("");
  return `<ol class="checklist">${rows}</ol>`;
}

/** Stub tool payloads (weather, maps, video) are shown as labeled
 *  placeholders rather than pretending to be real data. */
export function renderStubPayload(tool: string, payload: Record<string, unknown>): string {
  return (
    `<div class="stub-payload">` +
    `<span class="badge stub">STUB</span> ${escapeHtml(tool)}: ` +
    `<code>${escapeHtml(JSON.stringify(payload))}</code></div>`
  );
}

export function renderBuildingBanner(): string {
  return `<div class="banner banner-building">Knowledge base still building — try again shortly.</div>`;
}

export function renderErrorBanner(message: string): string {
  return (
    `<div class="banner banner-error">${escapeHtml(message)} ` +
    `<button class="retry" type="button">Retry</button></div>`
  );
}
