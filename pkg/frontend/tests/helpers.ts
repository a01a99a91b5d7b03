import { vi } from 'vitest';

import type { SearchResultItem } from '../src/api.js';

export function makeResult(
    rank: number,
    overrides: Partial<SearchResultItem> = {},
): SearchResultItem {
    return {
        submission_id: `K25000${rank}`,
        device_name: `Device ${rank}`,
        company: `Company ${rank}`,
        pathway: '510k',
        rank,
        thesis_snippet: `thesis snippet ${rank}`,
        score: 1 - rank * 0.05,
        ...overrides,
    };
}

export function jsonResponse(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
        status,
        headers: { 'Content-Type': 'application/json' },
    });
}

export interface FetchCall {
    url: string;
    params: URLSearchParams;
    signal: AbortSignal | undefined;
}

/** Install a fetch stub that records calls and answers via `respond`. */
export function stubFetch(
    respond: (call: FetchCall) => Response | Promise<Response>,
): FetchCall[] {
    const calls: FetchCall[] = [];
    vi.stubGlobal(
        'fetch',
        vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
            const url = String(input);
            const query = url.includes('?') ? url.slice(url.indexOf('?') + 1) : '';
            const call: FetchCall = {
                url,
                params: new URLSearchParams(query),
                signal: init?.signal ?? undefined,
            };
            calls.push(call);
            return respond(call);
        }),
    );
    return calls;
}

export const PAGE_HTML = `
<form id="search-form">
  <input id="query-input" type="text" />
  <button type="submit">Search</button>
  <label><input type="radio" name="mode" value="semantic" checked />Semantic</label>
  <label><input type="radio" name="mode" value="keyword" />Keyword</label>
</form>
<div id="banner"></div>
<button id="back-button" hidden></button>
<div id="results"></div>
<div id="detail" hidden></div>
`;

export function mountPage(): void {
    document.body.innerHTML = PAGE_HTML;
}

export function flushAsync(): Promise<void> {
    return new Promise((resolve) => setTimeout(resolve, 0));
}
