// Wire schema shared with the simulation server (JSON over websocket).

export type ClientMsg =
  | { type: "start" }
  | { type: "reset" }
  | { type: "drag_start"; x: number; y: number; z: number }
  | { type: "drag_move"; x: number; y: number; z: number }
  | { type: "drag_end" }
  | { type: "nudge"; dir: "up" | "down" | "left" | "right" }
  | { type: "set_integrator"; kind: "euler" | "midpoint" | "rk4" }
  | { type: "set_dimension"; d: 1 | 2 | 3 }
  | { type: "link"; a: number; pa: number; b: number; pb: number; stiffness?: number; damping?: number }
  | { type: "start_save" }
  | { type: "stop_save" }
  | { type: "save_confirm"; name?: string; dir?: string };

export interface WireParticle {
  id: number;
  px: number; py: number; pz: number;
  vx: number; vy: number; vz: number;
}

export interface WireObject {
  id: number;
  particles: WireParticle[];
  springs?: [number, number][];
}

export type ServerMsg =
  | { type: "frame"; t: number; objects: WireObject[]; drag_force: string; topology?: boolean }
  | { type: "save_prompt"; default_name: string; default_dir: string; frames: number }
  | { type: "saved"; path: string }
  | { type: "error"; code: string; message: string }
  | { type: "state"; mode: "idle" | "running"; integrator: string; dimension: number; recording: boolean };

const SERVER_TYPES = new Set(["frame", "save_prompt", "saved", "error", "state"]);

/** Parse one server payload; returns null on anything malformed. */
export function parseServerMsg(raw: string): ServerMsg | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as { type?: unknown };
  if (typeof msg.type !== "string" || !SERVER_TYPES.has(msg.type)) return null;
  if (msg.type === "frame") {
    const frame = data as { t?: unknown; objects?: unknown; drag_force?: unknown };
    if (typeof frame.t !== "number" || !Number.isFinite(frame.t)) return null;
    if (!Array.isArray(frame.objects)) return null;
    if (typeof frame.drag_force !== "string") return null;
  }
  return data as ServerMsg;
}

export function encode(msg: ClientMsg): string {
  return JSON.stringify(msg);
}
