/** Page entry point: boots the app once the DOM is available. */

import { ApiClient } from './api.js';
import { initApp } from './app.js';

function boot(): void {
    const base =
        (window as { DEVICESEARCH_API_BASE?: string }).DEVICESEARCH_API_BASE ??
        '';
    initApp(document, new ApiClient(base));
}

if (document.readyState === 'loading') {
    document.addEventListener('DOMContentLoaded', boot);
} else {
    boot();
}
