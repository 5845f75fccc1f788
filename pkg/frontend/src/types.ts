export interface TaskView {
  task_id: string;
  question_id: string;
  context: string[];
  candidate_id: string;
  candidate_text: string;
}

export interface TaskResponse {
  task: TaskView | null;
  instructions: string;
}

export interface JudgmentPayload {
  task_id: string;
  candidate_id: string;
  annotator_id: string;
  score: number;
}

export interface Progress {
  tasks: number;
  judgments_per_candidate: number;
  judgments_needed: number;
  judgments_collected: number;
  candidates_complete: number;
  complete: boolean;
}

export type SubmitOutcome = "accepted" | "duplicate" | "rejected";

export const SCORE_MIN = 0;
export const SCORE_MAX = 5;

/** Score captions shown next to the buttons; 0 is reserved for ungrammatical text. */
export const SCORE_LABELS: Record<number, string> = {
  0: "ungrammatical",
  1: "not appropriate at all",
  2: "mostly inappropriate",
  3: "borderline",
  4: "mostly appropriate",
  5: "clearly appropriate",
};
