// UI state: latest frame, cached topology, connection status and the
// save-controls cycle. Pure logic, exercised directly by the unit tests.

import type { ServerMsg, WireObject } from "./messages.js";

export type SaveState =
  | { phase: "idle" }
  | { phase: "recording" }
  | { phase: "prompt"; defaultName: string; defaultDir: string; frames: number };

export type ConnectionState = "connecting" | "connected" | "busy" | "lost";

export interface Toast {
  kind: "info" | "error";
  text: string;
}

export class ViewModel {
  connection: ConnectionState = "connecting";
  frame: { t: number; objects: WireObject[]; dragForce: string } | null = null;
  topology = new Map<number, [number, number][]>();
  mode: "idle" | "running" = "idle";
  integrator = "rk4";
  dimension = 3;
  save: SaveState = { phase: "idle" };
  toasts: Toast[] = [];
  lastFrameAt = 0;
  savedPath: string | null = null;

  get controlsEnabled(): boolean {
    return this.connection === "connected";
  }

  /** True when no frame arrived for over a second while connected. */
  stale(now: number): boolean {
    return this.connection === "connected" && this.frame !== null && now - this.lastFrameAt > 1000;
  }

  pushToast(kind: Toast["kind"], text: string): void {
    this.toasts.push({ kind, text });
    if (this.toasts.length > 4) this.toasts.shift();
  }

  apply(msg: ServerMsg, now = Date.now()): void {
    switch (msg.type) {
      case "frame": {
        for (const obj of msg.objects) {
          if (msg.topology && obj.springs) this.topology.set(obj.id, obj.springs);
        }
        if (msg.topology) {
          const ids = new Set(msg.objects.map((o) => o.id));
          for (const known of [...this.topology.keys()]) {
            if (!ids.has(known)) this.topology.delete(known);
          }
        }
        this.frame = { t: msg.t, objects: msg.objects, dragForce: msg.drag_force };
        this.lastFrameAt = now;
        break;
      }
      case "state":
        this.mode = msg.mode;
        this.integrator = msg.integrator;
        this.dimension = msg.dimension;
        // recording toggles arrive via state; prompt/idle transitions are
        // driven by the dedicated messages below
        if (msg.recording && this.save.phase === "idle") this.save = { phase: "recording" };
        if (!msg.recording && this.save.phase === "recording") this.save = { phase: "idle" };
        break;
      case "save_prompt":
        this.save = {
          phase: "prompt",
          defaultName: msg.default_name,
          defaultDir: msg.default_dir,
          frames: msg.frames,
        };
        break;
      case "saved":
        this.save = { phase: "idle" };
        this.savedPath = msg.path;
        this.pushToast("info", `saved: ${msg.path}`);
        break;
      case "error":
        if (msg.code === "busy") {
          this.connection = "busy";
        }
        this.pushToast("error", `${msg.code}: ${msg.message}`);
        break;
    }
  }
}
