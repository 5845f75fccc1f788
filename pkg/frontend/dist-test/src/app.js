import { ApiClient } from "./api.js";
import { JudgmentOutbox } from "./queue.js";
import { AnnotatorSession } from "./session.js";
import { SCORE_LABELS, SCORE_MAX, SCORE_MIN } from "./types.js";
const $ = (id) => {
    const el = document.getElementById(id);
    if (!el)
        throw new Error(`missing element #${id}`);
    return el;
};
class App {
    constructor() {
        this.api = new ApiClient("");
        this.outbox = new JudgmentOutbox(window.localStorage);
        this.session = null;
        this.currentTask = null;
        this.selectedScore = null;
        this.busy = false;
    }
    start() {
        this.renderScoreButtons();
        $("start").addEventListener("click", () => void this.begin());
        $("annotator-id").addEventListener("keydown", (e) => {
            if (e.key === "Enter")
                void this.begin();
        });
        $("submit").addEventListener("click", () => void this.submit());
        document.addEventListener("keydown", (e) => this.onKey(e));
        const remembered = window.localStorage.getItem("selecteval.annotator");
        if (remembered)
            $("annotator-id").value = remembered;
    }
    async begin() {
        const annotatorId = $("annotator-id").value.trim();
        if (!annotatorId)
            return;
        window.localStorage.setItem("selecteval.annotator", annotatorId);
        this.session = new AnnotatorSession(this.api, this.outbox, annotatorId, {
            retryDelayMs: 1500,
            maxRetries: 1, // surface failures in the status line instead of spinning
        });
        $("setup").hidden = true;
        await this.recoverAndFetch();
    }
    async recoverAndFetch() {
        try {
            await this.session.resume();
        }
        catch {
            this.status("Offline: a saved judgment will be resent when the server is back.");
        }
        await this.nextTask();
    }
    async nextTask() {
        this.status("");
        await this.refreshProgress();
        let task = null;
        try {
            const response = await this.session.fetchTask();
            task = response.task;
            $("instructions").textContent = response.instructions;
        }
        catch {
            this.status("Cannot reach the server; retrying…");
            window.setTimeout(() => void this.recoverAndFetch(), 2000);
            return;
        }
        this.currentTask = task;
        this.selectedScore = null;
        this.syncSelection();
        if (task === null) {
            $("task").hidden = true;
            $("done").hidden = false;
            return;
        }
        $("done").hidden = true;
        $("task").hidden = false;
        const list = $("context");
        list.replaceChildren(...task.context.map((turn, i) => {
            const item = document.createElement("li");
            item.textContent = turn;
            item.className = i % 2 === 0 ? "speaker-a" : "speaker-b";
            return item;
        }));
        $("candidate").textContent = task.candidate_text;
    }
    renderScoreButtons() {
        const host = $("scores");
        for (let value = SCORE_MIN; value <= SCORE_MAX; value++) {
            const button = document.createElement("button");
            button.type = "button";
            button.dataset.score = String(value);
            button.className = "score";
            button.innerHTML = `<strong>${value}</strong><small>${SCORE_LABELS[value]}</small>`;
            button.addEventListener("click", () => this.select(value));
            host.appendChild(button);
        }
    }
    onKey(event) {
        if (this.currentTask === null)
            return;
        if (event.key >= "0" && event.key <= "5") {
            this.select(Number(event.key));
        }
        else if (event.key === "Enter" && this.selectedScore !== null) {
            void this.submit();
        }
    }
    select(value) {
        this.selectedScore = value;
        this.syncSelection();
    }
    syncSelection() {
        for (const button of document.querySelectorAll("button.score")) {
            button.classList.toggle("selected", Number(button.dataset.score) === this.selectedScore);
        }
        // submission stays disabled until the annotator has picked a score
        $("submit").disabled = this.selectedScore === null || this.busy;
    }
    async submit() {
        if (this.busy || this.currentTask === null || this.selectedScore === null)
            return;
        this.busy = true;
        this.syncSelection();
        try {
            const outcome = await this.session.score(this.currentTask, this.selectedScore);
            if (outcome === "rejected") {
                this.status("The server rejected this judgment; skipping forward.");
            }
            await this.nextTask();
        }
        catch {
            this.status("Offline: judgment saved locally, retrying…");
            window.setTimeout(() => void this.recoverAndFetch(), 2000);
        }
        finally {
            this.busy = false;
            this.syncSelection();
        }
    }
    async refreshProgress() {
        try {
            const progress = await this.api.progress();
            const percent = progress.judgments_needed
                ? Math.round((100 * progress.judgments_collected) / progress.judgments_needed)
                : 0;
            $("progress-bar").style.width = `${percent}%`;
            $("progress-text").textContent =
                `${progress.judgments_collected} / ${progress.judgments_needed} judgments`;
        }
        catch {
            // progress is cosmetic; never block annotation on it
        }
    }
    status(message) {
        $("status").textContent = message;
    }
}
new App().start();
