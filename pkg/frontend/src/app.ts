// Wires the socket, the view model, pointer/key input and the controls.

import { encode, parseServerMsg, type ClientMsg } from "./messages.js";
import { Camera } from "./projection.js";
import { ViewModel } from "./viewmodel.js";
import { DragInput, type WorldPoint } from "./input.js";
import { render } from "./render.js";

const RECONNECT_DELAY_MS = 1000;
const BUSY_RETRY_MS = 5000;

export class App {
  readonly vm = new ViewModel();
  readonly camera = new Camera();
  private socket: WebSocket | null = null;
  private cursorWorld: WorldPoint | null = null;
  private input: DragInput;

  constructor(
    private readonly url: string,
    private readonly canvas: HTMLCanvasElement,
    private readonly dom: {
      status: HTMLElement;
      start: HTMLButtonElement;
      reset: HTMLButtonElement;
      integrator: HTMLSelectElement;
      dimension: HTMLSelectElement;
      startSave: HTMLButtonElement;
      stopSave: HTMLButtonElement;
      dialog: HTMLElement;
      dialogName: HTMLInputElement;
      dialogDir: HTMLInputElement;
      dialogSave: HTMLButtonElement;
      toasts: HTMLElement;
    },
  ) {
    this.input = new DragInput(
      (msg) => this.send(msg),
      () => this.vm.controlsEnabled,
    );
    this.bindControls();
    this.bindPointer();
    this.connect();
    requestAnimationFrame(() => this.frameLoop());
  }

  private send(msg: ClientMsg): void {
    if (this.socket && this.socket.readyState === WebSocket.OPEN) {
      this.socket.send(encode(msg));
    }
  }

  private connect(): void {
    this.vm.connection = "connecting";
    const socket = new WebSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.vm.connection = "connected";
    };
    socket.onmessage = (event) => {
      const msg = parseServerMsg(String(event.data));
      if (msg) this.vm.apply(msg);
    };
    socket.onclose = () => {
      const wasBusy = this.vm.connection === "busy";
      if (!wasBusy) this.vm.connection = "lost";
      this.socket = null;
      setTimeout(() => this.connect(), wasBusy ? BUSY_RETRY_MS : RECONNECT_DELAY_MS);
    };
    socket.onerror = () => socket.close();
  }

  private bindControls(): void {
    this.dom.start.onclick = () => this.send({ type: "start" });
    this.dom.reset.onclick = () => this.send({ type: "reset" });
    this.dom.integrator.onchange = () =>
      this.send({
        type: "set_integrator",
        kind: this.dom.integrator.value as "euler" | "midpoint" | "rk4",
      });
    this.dom.dimension.onchange = () =>
      this.send({ type: "set_dimension", d: Number(this.dom.dimension.value) as 1 | 2 | 3 });
    this.dom.startSave.onclick = () => this.send({ type: "start_save" });
    this.dom.stopSave.onclick = () => this.send({ type: "stop_save" });
    this.dom.dialogSave.onclick = () => {
      const msg: Extract<ClientMsg, { type: "save_confirm" }> = { type: "save_confirm" };
      if (this.dom.dialogName.value.trim()) msg.name = this.dom.dialogName.value.trim();
      if (this.dom.dialogDir.value.trim()) msg.dir = this.dom.dialogDir.value.trim();
      this.send(msg);
    };
    window.addEventListener("keydown", (event) => {
      if (this.input.arrowKey(event.key)) event.preventDefault();
    });
  }

  private worldAt(event: PointerEvent): WorldPoint | null {
    const rect = this.canvas.getBoundingClientRect();
    const sx = ((event.clientX - rect.left) / rect.width) * this.canvas.width;
    const sy = ((event.clientY - rect.top) / rect.height) * this.canvas.height;
    const view = { width: this.canvas.width, height: this.canvas.height, extent: 4.4 };
    return this.camera.toWorldOnZPlane(sx, sy, view);
  }

  private bindPointer(): void {
    this.canvas.addEventListener("pointerdown", (event) => {
      if (event.shiftKey) return; // shift-drag rotates the camera
      this.canvas.setPointerCapture(event.pointerId);
      const world = this.worldAt(event);
      this.cursorWorld = world;
      this.input.pointerDown(world);
    });
    this.canvas.addEventListener("pointermove", (event) => {
      if (event.shiftKey && event.buttons) {
        this.camera.yaw += event.movementX * 0.01;
        this.camera.pitch += event.movementY * 0.01;
        return;
      }
      const world = this.worldAt(event);
      this.cursorWorld = world;
      this.input.pointerMove(world);
    });
    this.canvas.addEventListener("pointerup", () => {
      this.input.pointerUp();
    });
  }

  private syncControls(): void {
    const vm = this.vm;
    const enabled = vm.controlsEnabled;
    for (const el of [
      this.dom.start,
      this.dom.reset,
      this.dom.integrator,
      this.dom.dimension,
      this.dom.startSave,
      this.dom.stopSave,
    ]) {
      el.disabled = !enabled;
    }
    this.dom.startSave.disabled = !enabled || vm.save.phase !== "idle";
    this.dom.stopSave.disabled = !enabled || vm.save.phase !== "recording";

    const status =
      vm.connection === "busy"
        ? "busy: another controller is connected"
        : vm.connection !== "connected"
          ? "reconnecting..."
          : vm.stale(Date.now())
            ? "reconnecting..."
            : `${vm.mode} | ${vm.integrator} | ${vm.dimension}D`;
    this.dom.status.textContent = status;

    if (vm.save.phase === "prompt") {
      if (this.dom.dialog.hidden) {
        this.dom.dialogName.value = vm.save.defaultName;
        this.dom.dialogDir.value = vm.save.defaultDir;
        this.dom.dialog.hidden = false;
      }
    } else {
      this.dom.dialog.hidden = true;
    }

    this.dom.toasts.textContent = vm.toasts.map((t) => `[${t.kind}] ${t.text}`).join("\n");
  }

  private frameLoop(): void {
    this.input.flush(); // throttle: at most one drag_move per frame
    const ctx = this.canvas.getContext("2d");
    if (ctx) {
      render(ctx, this.vm, this.camera, {
        cursorWorld: this.cursorWorld,
        dragging: this.input.isDragging,
      });
    }
    this.syncControls();
    requestAnimationFrame(() => this.frameLoop());
  }
}
