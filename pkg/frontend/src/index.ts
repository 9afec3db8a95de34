/**
 * Entry point: mount the studio against the orchestrator API.
 *
 * The API origin defaults to the page origin and can be pointed
 * elsewhere with `?api=http://host:port` while developing against a
 * separately served backend.
 */

import { ApiClient } from "./api.js";
import { StudioApp } from "./app.js";

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? window.location.origin;
}

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}
new StudioApp(new ApiClient(apiBase())).mount(root);
