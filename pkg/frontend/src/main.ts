import { App } from "./app.js";

function required<T extends Element>(selector: string): T {
  const el = document.querySelector<T>(selector);
  if (!el) throw new Error(`missing element ${selector}`);
  return el;
}

const params = new URLSearchParams(window.location.search);
const url = params.get("ws") ?? "ws://127.0.0.1:8080/session";

new App(url, required<HTMLCanvasElement>("#view"), {
  status: required("#status"),
  start: required("#btn-start"),
  reset: required("#btn-reset"),
  integrator: required("#sel-integrator"),
  dimension: required("#sel-dimension"),
  startSave: required("#btn-start-save"),
  stopSave: required("#btn-stop-save"),
  dialog: required("#save-dialog"),
  dialogName: required("#save-name"),
  dialogDir: required("#save-dir"),
  dialogSave: required("#btn-save-confirm"),
  toasts: required("#toasts"),
});
