/**
 * DOM wiring: query box with 300 ms debounce plus explicit submit, a
 * semantic/keyword mode toggle, ranked result cards, and a device detail
 * view. At most one search is in flight; newer submissions abort stale
 * requests and a sequence counter makes rendering last-write-wins.
 */

import { ApiClient, ApiError } from './api.js';
import type { SearchMode } from './api.js';
import {
    UiSearchState,
    backToResults,
    deviceSelected,
    initialState,
    searchFailed,
    searchStarted,
    searchSucceeded,
    setQuery,
    switchMode,
    validationFailed,
} from './state.js';
import {
    renderDetail,
    renderError,
    renderNotFound,
    renderResults,
    renderValidation,
} from './render.js';

export const DEBOUNCE_MS = 300;
export const DEFAULT_K = 10;

export interface AppHandle {
    getState(): UiSearchState;
    submit(): Promise<void>;
    destroy(): void;
}

export function initApp(
    root: Document | HTMLElement,
    client: ApiClient,
    options: { debounceMs?: number } = {},
): AppHandle {
    const debounceMs = options.debounceMs ?? DEBOUNCE_MS;
    const form = mustFind<HTMLFormElement>(root, '#search-form');
    const input = mustFind<HTMLInputElement>(root, '#query-input');
    const banner = mustFind<HTMLElement>(root, '#banner');
    const resultsBox = mustFind<HTMLElement>(root, '#results');
    const detailBox = mustFind<HTMLElement>(root, '#detail');
    const backButton = mustFind<HTMLButtonElement>(root, '#back-button');
    const modeInputs = Array.from(
        (root instanceof Document ? root : root.ownerDocument!).querySelectorAll<
            HTMLInputElement
        >('input[name="mode"]'),
    );

    let state = initialState();
    let controller: AbortController | null = null;
    let searchSeq = 0;
    let debounceTimer: ReturnType<typeof setTimeout> | null = null;

    function render(): void {
        banner.innerHTML = state.error
            ? renderError(state.error)
            : state.validation
              ? renderValidation(state.validation)
              : '';
        resultsBox.classList.toggle('loading', state.loading);

        if (state.selectedDevice !== null) {
            resultsBox.hidden = true;
            detailBox.hidden = false;
            backButton.hidden = false;
        } else {
            detailBox.hidden = true;
            backButton.hidden = true;
            resultsBox.hidden = false;
            resultsBox.innerHTML =
                state.results === null
                    ? ''
                    : renderResults(state.results, state.mode);
        }
    }

    async function runSearch(): Promise<void> {
        const query = state.query.trim();
        if (!query) {
            state = validationFailed(state, 'Enter a search query.');
            render();
            return; // client-side guard: no network call
        }

        controller?.abort();
        controller = new AbortController();
        const seq = ++searchSeq;
        const mode = state.mode;
        state = searchStarted(state);
        render();

        try {
            const response = await client.search(
                query,
                mode,
                DEFAULT_K,
                controller.signal,
            );
            if (seq !== searchSeq) {
                return; // a newer search owns the screen
            }
            state = searchSucceeded(state, response.results);
        } catch (error) {
            if (seq !== searchSeq || isAbort(error)) {
                return;
            }
            if (error instanceof ApiError && error.status === 400) {
                state = validationFailed(state, error.message);
            } else {
                state = searchFailed(
                    state,
                    error instanceof Error ? error.message : 'Search failed.',
                );
            }
        }
        render();
    }

    function scheduleDebouncedSearch(): void {
        if (debounceTimer !== null) {
            clearTimeout(debounceTimer);
        }
        debounceTimer = setTimeout(() => {
            debounceTimer = null;
            if (state.query.trim()) {
                void runSearch();
            }
        }, debounceMs);
    }

    async function openDevice(submissionId: string): Promise<void> {
        state = deviceSelected(state, submissionId);
        render();
        try {
            const detail = await client.getDevice(submissionId);
            if (state.selectedDevice !== submissionId) {
                return;
            }
            detailBox.innerHTML = renderDetail(detail);
        } catch (error) {
            if (state.selectedDevice !== submissionId) {
                return;
            }
            if (error instanceof ApiError && error.status === 404) {
                detailBox.innerHTML = renderNotFound(submissionId);
            } else {
                detailBox.innerHTML = renderError(
                    error instanceof Error ? error.message : 'Request failed.',
                );
            }
        }
    }

    const onSubmit = (event: Event): void => {
        event.preventDefault();
        if (debounceTimer !== null) {
            clearTimeout(debounceTimer);
            debounceTimer = null;
        }
        void runSearch();
    };

    const onInput = (): void => {
        state = setQuery(state, input.value);
        scheduleDebouncedSearch();
    };

    const onModeChange = (event: Event): void => {
        const target = event.target as HTMLInputElement;
        if (!target.checked) {
            return;
        }
        state = switchMode(state, target.value as SearchMode);
        render();
        if (state.query.trim()) {
            void runSearch();
        }
    };

    const onResultsClick = (event: Event): void => {
        const card = (event.target as HTMLElement).closest('.result-card');
        const id = card?.getAttribute('data-id');
        if (id) {
            void openDevice(id);
        }
    };

    const onBannerClick = (event: Event): void => {
        if ((event.target as HTMLElement).classList.contains('retry')) {
            void runSearch();
        }
    };

    const onBack = (): void => {
        // Previous results are still in state; no refetch.
        state = backToResults(state);
        render();
    };

    form.addEventListener('submit', onSubmit);
    input.addEventListener('input', onInput);
    modeInputs.forEach((el) => el.addEventListener('change', onModeChange));
    resultsBox.addEventListener('click', onResultsClick);
    banner.addEventListener('click', onBannerClick);
    backButton.addEventListener('click', onBack);

    render();

    return {
        getState: () => state,
        submit: runSearch,
        destroy: () => {
            controller?.abort();
            if (debounceTimer !== null) {
                clearTimeout(debounceTimer);
            }
            form.removeEventListener('submit', onSubmit);
            input.removeEventListener('input', onInput);
            modeInputs.forEach((el) =>
                el.removeEventListener('change', onModeChange),
            );
            resultsBox.removeEventListener('click', onResultsClick);
            banner.removeEventListener('click', onBannerClick);
            backButton.removeEventListener('click', onBack);
        },
    };
}

function mustFind<T extends Element>(
    root: Document | HTMLElement,
    selector: string,
): T {
    const element = root.querySelector<T>(selector);
    if (!element) {
        throw new Error(`missing required element: ${selector}`);
    }
    return element;
}

function isAbort(error: unknown): boolean {
    return error instanceof DOMException && error.name === 'AbortError';
}
