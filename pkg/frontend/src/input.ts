// Pointer/keyboard to client messages. Move events are throttled so at
// most one drag_move goes out per animation frame.

import type { ClientMsg } from "./messages.js";

export interface WorldPoint {
  x: number;
  y: number;
  z: number;
}

export class DragInput {
  private dragging = false;
  private pendingMove: WorldPoint | null = null;

  constructor(
    private readonly send: (msg: ClientMsg) => void,
    private readonly enabled: () => boolean,
  ) {}

  get isDragging(): boolean {
    return this.dragging;
  }

  pointerDown(world: WorldPoint | null): void {
    if (!this.enabled() || world === null || this.dragging) return;
    this.dragging = true;
    this.pendingMove = null;
    this.send({ type: "drag_start", x: world.x, y: world.y, z: world.z });
  }

  pointerMove(world: WorldPoint | null): void {
    if (!this.dragging || world === null) return;
    this.pendingMove = world; // flushed on the next animation frame
  }

  pointerUp(): void {
    if (!this.dragging) return;
    this.flush();
    this.dragging = false;
    if (this.enabled()) this.send({ type: "drag_end" });
  }

  /** Called once per animation frame; emits at most one drag_move. */
  flush(): void {
    if (this.dragging && this.pendingMove !== null && this.enabled()) {
      const p = this.pendingMove;
      this.pendingMove = null;
      this.send({ type: "drag_move", x: p.x, y: p.y, z: p.z });
    }
  }

  arrowKey(key: string): boolean {
    if (!this.dragging || !this.enabled()) return false;
    const dir = (
      {
        ArrowUp: "up",
        ArrowDown: "down",
        ArrowLeft: "left",
        ArrowRight: "right",
      } as const
    )[key as "ArrowUp" | "ArrowDown" | "ArrowLeft" | "ArrowRight"];
    if (dir === undefined) return false;
    this.send({ type: "nudge", dir });
    return true;
  }
}
