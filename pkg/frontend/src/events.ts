import type { ApiEvent } from "./types.js";

/**
 * Reorders incoming events so consumers always see strictly increasing
 * seq values, even when the network delivers out of order. Gaps are
 * held until the missing event arrives; duplicates and stale events
 * are dropped.
 */
export class SeqBuffer {
  private pending = new Map<number, ApiEvent>();
  private next: number;

  constructor(
    private deliver: (event: ApiEvent) => void,
    firstSeq = 1,
  ) {
    this.next = firstSeq;
  }

  push(event: ApiEvent): void {
    if (event.seq < this.next || this.pending.has(event.seq)) {
      return;
    }
    this.pending.set(event.seq, event);
    while (this.pending.has(this.next)) {
      const ready = this.pending.get(this.next)!;
      this.pending.delete(this.next);
      this.next += 1;
      this.deliver(ready);
    }
  }

  get pendingCount(): number {
    return this.pending.size;
  }
}
