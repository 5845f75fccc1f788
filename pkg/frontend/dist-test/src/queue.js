/** At-most-one pending judgment, persisted so a network failure or page
 * reload never loses the annotator's selection. The server dedupes on
 * (task, candidate, annotator), so resending after an ambiguous failure
 * yields a duplicate-conflict, which counts as delivered. */
export class JudgmentOutbox {
    constructor(store, key = "selecteval.pending") {
        this.store = store;
        this.key = key;
    }
    save(payload) {
        this.store.setItem(this.key, JSON.stringify(payload));
    }
    load() {
        const raw = this.store.getItem(this.key);
        if (raw === null)
            return null;
        try {
            return JSON.parse(raw);
        }
        catch {
            this.store.removeItem(this.key);
            return null;
        }
    }
    clear() {
        this.store.removeItem(this.key);
    }
}
/** Persist first, then send. Network failures leave the payload in the
 * outbox and rethrow; the caller retries with flushPending once reconnected. */
export async function deliverJudgment(api, outbox, payload) {
    outbox.save(payload);
    const result = await api.submitJudgment(payload); // throws offline
    outbox.clear();
    if (result.accepted)
        return "accepted";
    if (result.status === 409)
        return "duplicate";
    return "rejected";
}
/** Resend whatever is left in the outbox; "none" when it is empty. */
export async function flushPending(api, outbox) {
    const pending = outbox.load();
    if (pending === null)
        return "none";
    return deliverJudgment(api, outbox, pending);
}
