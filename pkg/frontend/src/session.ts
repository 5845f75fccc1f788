import type { ApiClient } from "./api.js";
import { JudgmentOutbox, deliverJudgment, flushPending } from "./queue.js";
import type { JudgmentPayload, SubmitOutcome, TaskResponse, TaskView } from "./types.js";

export interface SessionOptions {
  /** Delay between retries after a network failure (ms). */
  retryDelayMs?: number;
  /** Give up after this many consecutive network failures (0 = never). */
  maxRetries?: number;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

/** One annotator's fetch -> score -> submit loop. The same machinery drives
 * the browser app and headless scripted sessions. */
export class AnnotatorSession {
  constructor(
    private readonly api: ApiClient,
    private readonly outbox: JudgmentOutbox,
    readonly annotatorId: string,
    private readonly options: SessionOptions = {},
  ) {}

  /** Deliver any judgment left over from a previous page load or crash. */
  async resume(): Promise<SubmitOutcome | "none"> {
    return this.withRetry(() => flushPending(this.api, this.outbox));
  }

  async fetchTask(): Promise<TaskResponse> {
    return this.withRetry(() => this.api.nextTask(this.annotatorId));
  }

  buildPayload(task: TaskView, score: number): JudgmentPayload {
    return {
      task_id: task.task_id,
      candidate_id: task.candidate_id,
      annotator_id: this.annotatorId,
      score,
    };
  }

  /** Submit exactly what the annotator selected; never mutates the score. */
  async score(task: TaskView, score: number): Promise<SubmitOutcome> {
    const payload = this.buildPayload(task, score);
    return this.withRetry(() => deliverJudgment(this.api, this.outbox, payload));
  }

  /** Run to completion with a scoring callback; returns the payloads that
   * were delivered (accepted or already journaled as duplicates). */
  async run(
    scorer: (task: TaskView) => number,
    onStep?: (task: TaskView, outcome: SubmitOutcome) => void,
  ): Promise<JudgmentPayload[]> {
    const delivered: JudgmentPayload[] = [];
    await this.resume();
    for (;;) {
      const { task } = await this.fetchTask();
      if (task === null) return delivered;
      const value = scorer(task);
      const outcome = await this.score(task, value);
      if (outcome !== "rejected") {
        delivered.push(this.buildPayload(task, value));
      }
      onStep?.(task, outcome);
    }
  }

  private async withRetry<T>(operation: () => Promise<T>): Promise<T> {
    const delay = this.options.retryDelayMs ?? 1000;
    const max = this.options.maxRetries ?? 0;
    for (let attempt = 0; ; attempt++) {
      try {
        return await operation();
      } catch (error) {
        if (max > 0 && attempt + 1 >= max) throw error;
        await sleep(delay);
      }
    }
  }
}
