import type { Label } from "./types.js";

export interface PendingLabel {
  pairId: string;
  label: Label;
  annotator: string;
}

interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const STORAGE_KEY = "linkforge.pendingLabels";

/**
 * Outbox for label posts. A label is enqueued before the POST is
 * attempted and removed only after the server acknowledges it, so a
 * network drop never loses work; relabeling the same pair while offline
 * collapses to the latest value.
 */
export class LabelQueue {
  private pending: PendingLabel[] = [];
  private flushing = false;
  onChange: (depth: number) => void = () => {};

  constructor(
    private post: (item: PendingLabel) => Promise<unknown>,
    private storage: StorageLike | null = null,
  ) {
    if (this.storage) {
      const raw = this.storage.getItem(STORAGE_KEY);
      if (raw) {
        try {
          this.pending = JSON.parse(raw) as PendingLabel[];
        } catch {
          this.pending = [];
        }
      }
    }
  }

  get depth(): number {
    return this.pending.length;
  }

  snapshot(): PendingLabel[] {
    return [...this.pending];
  }

  enqueue(item: PendingLabel): void {
    const existing = this.pending.findIndex((p) => p.pairId === item.pairId);
    if (existing >= 0) {
      this.pending[existing] = item;
    } else {
      this.pending.push(item);
    }
    this.persist();
    this.onChange(this.depth);
  }

  /** Post pending labels in order; stops at the first failure. */
  async flush(): Promise<boolean> {
    if (this.flushing) return this.pending.length === 0;
    this.flushing = true;
    try {
      while (this.pending.length > 0) {
        const head = this.pending[0];
        try {
          await this.post(head);
        } catch {
          return false;
        }
        this.pending.shift();
        this.persist();
        this.onChange(this.depth);
      }
      return true;
    } finally {
      this.flushing = false;
    }
  }

  private persist(): void {
    if (!this.storage) return;
    if (this.pending.length === 0) {
      this.storage.removeItem(STORAGE_KEY);
    } else {
      this.storage.setItem(STORAGE_KEY, JSON.stringify(this.pending));
    }
  }
}
