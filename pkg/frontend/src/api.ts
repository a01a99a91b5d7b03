/**
 * Typed client for the devicesearch HTTP API.
 *
 * All requests accept an AbortSignal so the app can cancel stale searches.
 * Non-2xx responses become ApiError with the server's machine-readable
 * error code when one is present.
 */

export type SearchMode = 'semantic' | 'keyword';

export interface SearchResultItem {
    submission_id: string;
    device_name: string;
    company: string;
    pathway: string;
    rank: number;
    thesis_snippet: string;
    score?: number; // semantic mode only
}

export interface SearchResponse {
    query: string;
    mode: SearchMode;
    results: SearchResultItem[];
    took_ms: number;
}

export interface DeviceFeatures {
    summary: string;
    keywords: string[];
    questions: string[];
    key_concepts: string[];
    thesis: string;
    search_boost: string;
    query_match_1: string;
    query_match_2: string;
    query_match_3: string;
    warnings: string[];
}

export interface DeviceDetail {
    submission_id: string;
    device_name: string;
    company: string;
    pathway: string;
    panel: string;
    decision_date: string | null;
    features: DeviceFeatures;
}

export class ApiError extends Error {
    constructor(
        readonly status: number,
        readonly code: string,
        message: string,
    ) {
        super(message);
        this.name = 'ApiError';
    }
}

async function errorFromResponse(response: Response): Promise<ApiError> {
    let code = 'http_error';
    let message = `request failed with status ${response.status}`;
    try {
        const body = await response.json();
        if (body?.error?.code) {
            code = body.error.code;
            message = body.error.message ?? message;
        }
    } catch {
        // non-JSON error body; keep the generic message
    }
    return new ApiError(response.status, code, message);
}

export class ApiClient {
    constructor(private readonly baseUrl: string = '') {}

    async search(
        query: string,
        mode: SearchMode,
        k: number,
        signal?: AbortSignal,
    ): Promise<SearchResponse> {
        const params = new URLSearchParams({
            q: query,
            k: String(k),
            mode,
        });
        const response = await fetch(
            `${this.baseUrl}/api/search?${params.toString()}`,
            { signal },
        );
        if (!response.ok) {
            throw await errorFromResponse(response);
        }
        return (await response.json()) as SearchResponse;
    }

    async getDevice(
        submissionId: string,
        signal?: AbortSignal,
    ): Promise<DeviceDetail> {
        const response = await fetch(
            `${this.baseUrl}/api/devices/${encodeURIComponent(submissionId)}`,
            { signal },
        );
        if (!response.ok) {
            throw await errorFromResponse(response);
        }
        return (await response.json()) as DeviceDetail;
    }
}
