import { deliverJudgment, flushPending } from "./queue.js";
const sleep = (ms) => new Promise((resolve) => setTimeout(resolve, ms));
/** One annotator's fetch -> score -> submit loop. The same machinery drives
 * the browser app and headless scripted sessions. */
export class AnnotatorSession {
    constructor(api, outbox, annotatorId, options = {}) {
        this.api = api;
        this.outbox = outbox;
        this.annotatorId = annotatorId;
        this.options = options;
    }
    /** Deliver any judgment left over from a previous page load or crash. */
    async resume() {
        return this.withRetry(() => flushPending(this.api, this.outbox));
    }
    async fetchTask() {
        return this.withRetry(() => this.api.nextTask(this.annotatorId));
    }
    buildPayload(task, score) {
        return {
            task_id: task.task_id,
            candidate_id: task.candidate_id,
            annotator_id: this.annotatorId,
            score,
        };
    }
    /** Submit exactly what the annotator selected; never mutates the score. */
    async score(task, score) {
        const payload = this.buildPayload(task, score);
        return this.withRetry(() => deliverJudgment(this.api, this.outbox, payload));
    }
    /** Run to completion with a scoring callback; returns the payloads that
     * were delivered (accepted or already journaled as duplicates). */
    async run(scorer, onStep) {
        const delivered = [];
        await this.resume();
        for (;;) {
            const { task } = await this.fetchTask();
            if (task === null)
                return delivered;
            const value = scorer(task);
            const outcome = await this.score(task, value);
            if (outcome !== "rejected") {
                delivered.push(this.buildPayload(task, value));
            }
            onStep?.(task, outcome);
        }
    }
    async withRetry(operation) {
        const delay = this.options.retryDelayMs ?? 1000;
        const max = this.options.maxRetries ?? 0;
        for (let attempt = 0;; attempt++) {
            try {
                return await operation();
            }
            catch (error) {
                if (max > 0 && attempt + 1 >= max)
                    throw error;
                await sleep(delay);
            }
        }
    }
}
