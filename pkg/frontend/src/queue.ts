import type { ApiClient } from "./api.js";
import type { JudgmentPayload, SubmitOutcome } from "./types.js";

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

/** At-most-one pending judgment, persisted so a network failure or page
 * reload never loses the annotator's selection. The server dedupes on
 * (task, candidate, annotator), so resending after an ambiguous failure
 * yields a duplicate-conflict, which counts as delivered. */
export class JudgmentOutbox {
  constructor(
    private readonly store: KeyValueStore,
    private readonly key: string = "selecteval.pending",
  ) {}

  save(payload: JudgmentPayload): void {
    this.store.setItem(this.key, JSON.stringify(payload));
  }

  load(): JudgmentPayload | null {
    const raw = this.store.getItem(this.key);
    if (raw === null) return null;
    try {
      return JSON.parse(raw) as JudgmentPayload;
    } catch {
      this.store.removeItem(this.key);
      return null;
    }
  }

  clear(): void {
    this.store.removeItem(this.key);
  }
}

/** Persist first, then send. Network failures leave the payload in the
 * outbox and rethrow; the caller retries with flushPending once reconnected. */
export async function deliverJudgment(
  api: ApiClient,
  outbox: JudgmentOutbox,
  payload: JudgmentPayload,
): Promise<SubmitOutcome> {
  outbox.save(payload);
  const result = await api.submitJudgment(payload); // throws offline
  outbox.clear();
  if (result.accepted) return "accepted";
  if (result.status === 409) return "duplicate";
  return "rejected";
}

/** Resend whatever is left in the outbox; "none" when it is empty. */
export async function flushPending(
  api: ApiClient,
  outbox: JudgmentOutbox,
): Promise<SubmitOutcome | "none"> {
  const pending = outbox.load();
  if (pending === null) return "none";
  return deliverJudgment(api, outbox, pending);
}
