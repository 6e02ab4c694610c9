import { GuidanceApi } from "./api.js";
import { DrawingApp } from "./app.js";

const base = (window as { PORTRAITGUIDE_URL?: string }).PORTRAITGUIDE_URL ?? "";
const app = new DrawingApp(document, new GuidanceApi(base));
app.start().catch((err) => {
  const status = document.getElementById("status");
  if (status) status.textContent = `failed to start: ${err}`;
});
