import { describe, expect, it } from "vitest";
import { LabelQueue, type PendingLabel } from "../src/queue.js";

class FakeStorage {
  private map = new Map<string, string>();
  getItem(key: string): string | null {
    return this.map.get(key) ?? null;
  }
  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }
  removeItem(key: string): void {
    this.map.delete(key);
  }
}

function item(pairId: string, label: "match" | "nonmatch" | "unsure" = "match"): PendingLabel {
  return { pairId, label, annotator: "t" };
}

describe("LabelQueue", () => {
  it("flushes in order and empties", async () => {
    const posted: string[] = [];
    const q = new LabelQueue(async (p) => { posted.push(p.pairId); });
    q.enqueue(item("a"));
    q.enqueue(item("b"));
    expect(q.depth).toBe(2);
    expect(await q.flush()).toBe(true);
    expect(posted).toEqual(["a", "b"]);
    expect(q.depth).toBe(0);
  });

  it("keeps labels when the server is down, then flushes on reconnect", async () => {
    let up = false;
    const posted: string[] = [];
    const q = new LabelQueue(async (p) => {
      if (!up) throw new Error("offline");
      posted.push(p.pairId);
    });
    q.enqueue(item("a"));
    q.enqueue(item("b"));
    expect(await q.flush()).toBe(false);
    expect(q.depth).toBe(2);     // nothing lost
    up = true;
    expect(await q.flush()).toBe(true);
    expect(posted).toEqual(["a", "b"]);
  });

  it("collapses relabels of the same pair to the latest value", async () => {
    const posted: PendingLabel[] = [];
    const q = new LabelQueue(async (p) => { posted.push(p); });
    q.enqueue(item("a", "match"));
    q.enqueue(item("a", "nonmatch"));
    expect(q.depth).toBe(1);
    await q.flush();
    expect(posted).toEqual([item("a", "nonmatch")]);
  });

  it("persists pending labels across instances", async () => {
    const storage = new FakeStorage();
    const q1 = new LabelQueue(async () => { throw new Error("offline"); }, storage);
    q1.enqueue(item("a"));
    q1.enqueue(item("b"));
    await q1.flush();

    const posted: string[] = [];
    const q2 = new LabelQueue(async (p) => { posted.push(p.pairId); }, storage);
    expect(q2.depth).toBe(2);  // reloaded from storage
    await q2.flush();
    expect(posted).toEqual(["a", "b"]);
    const q3 = new LabelQueue(async () => {}, storage);
    expect(q3.depth).toBe(0);  // storage cleared after successful flush
  });

  it("reports depth changes", async () => {
    const depths: number[] = [];
    const q = new LabelQueue(async () => {});
    q.onChange = (d) => depths.push(d);
    q.enqueue(item("a"));
    await q.flush();
    expect(depths).toEqual([1, 0]);
  });
});
