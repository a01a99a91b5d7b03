/** Pure HTML renderers; the app swaps these strings into containers. */

import type { DeviceDetail, SearchMode, SearchResultItem } from './api.js';

export function escapeHtml(text: string): string {
    return text
        .replace(/&/g, '&amp;')
        .replace(/</g, '&lt;')
        .replace(/>/g, '&gt;')
        .replace(/"/g, '&quot;')
        .replace(/'/g, '&#39;');
}

export function renderResults(
    results: SearchResultItem[],
    mode: SearchMode,
): string {
    if (results.length === 0) {
        return '<p class="no-matches">No matches found.</p>';
    }
    const cards = results.map((item) => {
        const score =
            mode === 'semantic' && item.score !== undefined
                ? `<span class="score">${item.score.toFixed(3)}</span>`
                : '';
        return `
<article class="result-card" data-id="${escapeHtml(item.submission_id)}">
  <header>
    <span class="rank">#${item.rank}</span>
    <h3>${escapeHtml(item.device_name)}</h3>
    ${score}
  </header>
  <p class="company">${escapeHtml(item.company)} &middot; ${escapeHtml(item.pathway)}</p>
  <p class="snippet">${escapeHtml(item.thesis_snippet)}</p>
</article>`;
    });
    return cards.join('\n');
}

export function renderDetail(detail: DeviceDetail): string {
    const features = detail.features;
    const keywords = features.keywords
        .map((k) => `<li>${escapeHtml(k)}</li>`)
        .join('');
    const questions = features.questions
        .map((q) => `<li>${escapeHtml(q)}</li>`)
        .join('');
    return `
<article class="device-detail" data-id="${escapeHtml(detail.submission_id)}">
  <h2>${escapeHtml(detail.device_name)}</h2>
  <p class="meta">
    ${escapeHtml(detail.submission_id)} &middot;
    ${escapeHtml(detail.company)} &middot;
    ${escapeHtml(detail.pathway)}
    ${detail.panel ? ` &middot; ${escapeHtml(detail.panel)}` : ''}
  </p>
  <section><h4>Thesis</h4><p>${escapeHtml(features.thesis)}</p></section>
  <section><h4>Keywords</h4><ul class="keywords">${keywords}</ul></section>
  <section><h4>Questions</h4><ul class="questions">${questions}</ul></section>
</article>`;
}

export function renderNotFound(submissionId: string): string {
    return `<p class="not-found">Device ${escapeHtml(submissionId)} was not found. It may have been removed in a corpus update.</p>`;
}

export function renderError(message: string): string {
    return `
<div class="error-banner" role="alert">
  <span>${escapeHtml(message)}</span>
  <button type="button" class="retry">Retry</button>
</div>`;
}

export function renderValidation(message: string): string {
    return `<p class="validation">${escapeHtml(message)}</p>`;
}
