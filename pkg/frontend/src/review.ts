import type { ApiClient } from "./api.js";
import type { LabelQueue } from "./queue.js";
import type { Label, PairPayload } from "./types.js";

export type ReviewAction = { kind: "label"; label: Label } | { kind: "undo" } | null;

/** Keyboard mapping: m=match, n=nonmatch, u=unsure, z=undo. */
export function actionForKey(key: string): ReviewAction {
  switch (key.toLowerCase()) {
    case "m":
      return { kind: "label", label: "match" };
    case "n":
      return { kind: "label", label: "nonmatch" };
    case "u":
      return { kind: "label", label: "unsure" };
    case "z":
      return { kind: "undo" };
    default:
      return null;
  }
}

/**
 * Paging cursor over the disagreement-ordered pair stream.
 *
 * Labels are applied optimistically: the pair is stamped locally, the
 * write goes through the outbox queue, and the cursor advances. Undo
 * steps back to the previous card so the reviewer can relabel it (a
 * fresh revision server-side).
 */
export class ReviewFlow {
  pairs: PairPayload[] = [];
  cursor = 0;
  exhausted = false;
  private seen = new Set<string>();
  private loading = false;

  constructor(
    private api: ApiClient,
    private queue: LabelQueue,
    private annotator: string,
    private pageSize = 25,
  ) {}

  current(): PairPayload | null {
    return this.pairs[this.cursor] ?? null;
  }

  get labeledCount(): number {
    return this.pairs.filter((p) => p.label !== null).length;
  }

  async ensureLoaded(): Promise<void> {
    if (this.loading || this.exhausted || this.cursor < this.pairs.length - 3) {
      return;
    }
    this.loading = true;
    try {
      const page = await this.api.getPairs("unlabeled", 0, this.pageSize);
      const fresh = page.pairs.filter((p) => !this.seen.has(p.pair_id));
      for (const p of fresh) {
        this.seen.add(p.pair_id);
        this.pairs.push(p);
      }
      if (fresh.length === 0) {
        this.exhausted = true;
      }
    } finally {
      this.loading = false;
    }
  }

  async label(label: Label): Promise<void> {
    const pair = this.current();
    if (!pair) return;
    pair.label = label;
    this.queue.enqueue({ pairId: pair.pair_id, label, annotator: this.annotator });
    void this.queue.flush();
    this.cursor += 1;
    await this.ensureLoaded();
  }

  undo(): PairPayload | null {
    if (this.cursor > 0) {
      this.cursor -= 1;
    }
    return this.current();
  }

  async handle(action: ReviewAction): Promise<void> {
    if (!action) return;
    if (action.kind === "label") {
      await this.label(action.label);
    } else {
      this.undo();
    }
  }
}

function simCell(name: string, value: number | null): string {
  if (value === null) {
    return `<td class="sim missing" title="${name}: missing">—</td>`;
  }
  // intensity highlighting: green toward 1, red toward 0
  const hue = Math.round(120 * value);
  return `<td class="sim" style="background:hsl(${hue},70%,82%)">${value.toFixed(3)}</td>`;
}

function fieldRow(label: string, left: string, right: string): string {
  return `<tr><th>${label}</th><td>${left}</td><td>${right}</td></tr>`;
}

const esc = (s: unknown): string =>
  String(s ?? "").replace(/[&<>"]/g, (c) =>
    ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" }[c] as string));

/** Side-by-side card; every value comes straight from /api/pairs. */
export function renderPairCard(pair: PairPayload): string {
  const r = pair.resident;
  const c = pair.contact;
  const simFields = ["first", "middle", "last", "age", "village", "sex", "honorific"];
  return `
  <div class="pair-card" data-pair="${esc(pair.pair_id)}">
    <div class="pair-head">
      <span class="score">score ${pair.score === null ? "—" : pair.score.toFixed(4)}</span>
      <span class="frac">${(pair.classified_fraction * 100).toFixed(0)}% of configs say match</span>
      ${pair.label ? `<span class="current-label">${esc(pair.label)}</span>` : ""}
    </div>
    <table class="records">
      <tr><th></th><th>resident</th><th>named contact</th></tr>
      ${fieldRow("name", esc(r?.name), esc(c?.name))}
      ${fieldRow("age", esc(r?.age ?? "—"), esc(c?.age ?? "—"))}
      ${fieldRow("sex", esc(r?.sex ?? "—"), esc(c?.sex ?? "— (imputed)"))}
      ${fieldRow("village", esc(r?.village ?? "—"), esc(c?.village ?? "—"))}
      ${fieldRow("context", esc(r?.household ? `household ${r.household}` : ""),
                 esc(c?.domain ? `${c.domain} contact of ${c.namer}` : ""))}
    </table>
    <table class="sims">
      <tr>${simFields.map((f) => `<th>${f}</th>`).join("")}</tr>
      <tr>${simFields.map((f) => simCell(f, pair.sims[f] ?? null)).join("")}</tr>
    </table>
    <div class="label-buttons">
      <button data-label="match">match (m)</button>
      <button data-label="nonmatch">non-match (n)</button>
      <button data-label="unsure">unsure (u)</button>
      <button data-label="undo">back (z)</button>
    </div>
  </div>`;
}
