// Canvas renderer: springs as segments, particles as dots, a rubber band
// while dragging and the drag-force readout from the server.

import type { Camera, Viewport } from "./projection.js";
import type { ViewModel } from "./viewmodel.js";
import type { WorldPoint } from "./input.js";

export interface RenderOptions {
  cursorWorld: WorldPoint | null;
  dragging: boolean;
}

export function render(
  ctx: CanvasRenderingContext2D,
  vm: ViewModel,
  camera: Camera,
  options: RenderOptions,
): void {
  const view: Viewport = { width: ctx.canvas.width, height: ctx.canvas.height, extent: 4.4 };
  ctx.clearRect(0, 0, view.width, view.height);

  // view-space border
  ctx.strokeStyle = "#949aa5";
  ctx.lineWidth = 1;
  const scale = Math.min(view.width, view.height) / view.extent;
  ctx.strokeRect(view.width / 2 - 2 * scale, view.height / 2 - 2 * scale, 4 * scale, 4 * scale);

  const frame = vm.frame;
  if (!frame) return;

  for (const obj of frame.objects) {
    const projected = obj.particles.map((p) =>
      camera.toScreen({ x: p.px, y: p.py, z: p.pz }, view),
    );
    const springs = vm.topology.get(obj.id) ?? [];
    ctx.strokeStyle = "#3b6ea5";
    ctx.lineWidth = 1.25;
    ctx.beginPath();
    for (const [a, b] of springs) {
      const pa = projected[a];
      const pb = projected[b];
      if (!pa || !pb) continue;
      ctx.moveTo(pa.x, pa.y);
      ctx.lineTo(pb.x, pb.y);
    }
    ctx.stroke();

    ctx.fillStyle = "#16324f";
    for (const p of projected) {
      ctx.beginPath();
      ctx.arc(p.x, p.y, 3, 0, 2 * Math.PI);
      ctx.fill();
    }
  }

  // rubber band from the cursor while dragging
  if (options.dragging && options.cursorWorld) {
    const tip = camera.toScreen(options.cursorWorld, view);
    ctx.strokeStyle = "#c23b22";
    ctx.setLineDash([4, 3]);
    ctx.beginPath();
    ctx.arc(tip.x, tip.y, 5, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  ctx.fillStyle = "#16324f";
  ctx.font = "14px monospace";
  ctx.fillText(`drag force ${frame.dragForce}`, 12, 20);
  ctx.fillText(`t ${frame.t.toFixed(3)}s`, 12, 38);
}
