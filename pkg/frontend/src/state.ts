/**
 * UI state and its pure transitions.
 *
 * Invariants: `loading` and `error` are never set together; switching
 * search mode clears results; going back from a detail view preserves the
 * result list untouched (no refetch needed).
 */

import type { SearchMode, SearchResultItem } from './api.js';

export interface UiSearchState {
    query: string;
    mode: SearchMode;
    loading: boolean;
    /** null = nothing searched yet; [] = a search returned no matches */
    results: SearchResultItem[] | null;
    selectedDevice: string | null;
    error: string | null;
    validation: string | null;
}

export function initialState(): UiSearchState {
    return {
        query: '',
        mode: 'semantic',
        loading: false,
        results: null,
        selectedDevice: null,
        error: null,
        validation: null,
    };
}

export function setQuery(state: UiSearchState, query: string): UiSearchState {
    return { ...state, query, validation: null };
}

export function switchMode(state: UiSearchState, mode: SearchMode): UiSearchState {
    if (mode === state.mode) {
        return state;
    }
    return {
        ...state,
        mode,
        results: null,
        selectedDevice: null,
        loading: false,
        error: null,
        validation: null,
    };
}

export function searchStarted(state: UiSearchState): UiSearchState {
    return { ...state, loading: true, error: null, validation: null };
}

export function searchSucceeded(
    state: UiSearchState,
    results: SearchResultItem[],
): UiSearchState {
    return { ...state, loading: false, error: null, results, selectedDevice: null };
}

export function searchFailed(state: UiSearchState, message: string): UiSearchState {
    return { ...state, loading: false, error: message };
}

export function validationFailed(
    state: UiSearchState,
    message: string,
): UiSearchState {
    return { ...state, loading: false, validation: message };
}

export function deviceSelected(
    state: UiSearchState,
    submissionId: string,
): UiSearchState {
    return { ...state, selectedDevice: submissionId };
}

export function backToResults(state: UiSearchState): UiSearchState {
    return { ...state, selectedDevice: null };
}
