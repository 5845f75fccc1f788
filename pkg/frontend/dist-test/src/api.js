/** Thin client over the annotation backend's JSON API. */
export class ApiClient {
    constructor(baseUrl = "", fetchFn) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
    }
    async nextTask(annotatorId) {
        const url = `${this.baseUrl}/api/task?annotator=${encodeURIComponent(annotatorId)}`;
        const response = await this.fetchFn(url);
        if (!response.ok) {
            throw new Error(`task fetch failed: HTTP ${response.status}`);
        }
        return (await response.json());
    }
    /** Resolves for any HTTP status (callers branch on it); rejects only when
     * the request itself fails, e.g. the server is unreachable. */
    async submitJudgment(payload) {
        const response = await this.fetchFn(`${this.baseUrl}/api/judgment`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(payload),
        });
        let error;
        try {
            const body = (await response.json());
            error = body.error;
        }
        catch {
            error = undefined;
        }
        return { status: response.status, accepted: response.status === 201, error };
    }
    async progress() {
        const response = await this.fetchFn(`${this.baseUrl}/api/progress`);
        if (!response.ok) {
            throw new Error(`progress fetch failed: HTTP ${response.status}`);
        }
        return (await response.json());
    }
}
