/**
 * Browser entry point: wires the WebSocket client, keyboard input, canvas
 * scene view, optional camera-frame stream, and recording controls.
 */
import { TeleopClient, type SessionView, type SocketLike } from "./client.js";
import { defaultMapping, InputState } from "./input.js";
import { DEFAULT_VIEWPORT, drawScene } from "./scene.js";

const SETTINGS_KEY = "surgibench-teleop-settings";

interface Settings {
  url: string;
  seed: number;
  translationScale: number;
  rotationScale: number;
}

function loadSettings(): Settings {
  const fallback: Settings = {
    url: "ws://127.0.0.1:8765",
    seed: 0,
    translationScale: 0.002,
    rotationScale: 0.05,
  };
  try {
    const raw = localStorage.getItem(SETTINGS_KEY);
    return raw ? { ...fallback, ...JSON.parse(raw) } : fallback;
  } catch {
    return fallback;
  }
}

function saveSettings(s: Settings): void {
  try {
    localStorage.setItem(SETTINGS_KEY, JSON.stringify(s));
  } catch {
    // private-mode storage failures are non-fatal
  }
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function start(): void {
  const settings = loadSettings();
  const canvas = el<HTMLCanvasElement>("scene");
  canvas.width = DEFAULT_VIEWPORT.width;
  canvas.height = DEFAULT_VIEWPORT.height;
  const ctx = canvas.getContext("2d")!;
  const frameImg = el<HTMLImageElement>("camera-frame");
  const statusEl = el("status");
  const overlayEl = el("overlay");
  const recBadge = el("rec-badge");
  const toastEl = el("toast");
  const urlInput = el<HTMLInputElement>("server-url");
  const seedInput = el<HTMLInputElement>("seed");
  urlInput.value = settings.url;
  seedInput.value = String(settings.seed);

  const mapping = defaultMapping();
  mapping.translationScale = settings.translationScale;
  mapping.rotationScale = settings.rotationScale;

  let client: TeleopClient | null = null;
  let input: InputState | null = null;
  let sendTimer: number | null = null;

  function render(view: SessionView): void {
    statusEl.textContent = view.status;
    statusEl.className = `status ${view.status}`;
    if (view.spec) {
      el("task-name").textContent = view.spec.task.name;
    }
    if (view.state) {
      drawScene(ctx, view.state);
      overlayEl.textContent =
        `step ${view.state.step_count}` +
        (view.state.success ? "  SUCCESS" : "") +
        `  arm ${input?.selectedArm ?? 0}` +
        `  jaw ${input?.jaw === 1 ? "close" : "open"}`;
    }
    if (view.frame) {
      frameImg.src = `data:image/png;base64,${view.frame.png}`;
    }
    recBadge.style.display = view.recording ? "inline-block" : "none";
    if (view.lastError) {
      toast(`${view.lastError.code}: ${view.lastError.msg}`);
      view.lastError = null;
    }
    if (view.lastSavedEpisode) {
      toast(`saved ${view.lastSavedEpisode}`);
      view.lastSavedEpisode = null;
    }
    (el<HTMLButtonElement>("btn-save")).disabled = !view.recording;
  }

  let toastTimer: number | null = null;
  function toast(msg: string): void {
    toastEl.textContent = msg;
    toastEl.style.display = "block";
    if (toastTimer !== null) clearTimeout(toastTimer);
    toastTimer = window.setTimeout(() => (toastEl.style.display = "none"), 4000);
  }

  function connect(): void {
    if (sendTimer !== null) clearInterval(sendTimer);
    client?.close();
    settings.url = urlInput.value;
    saveSettings(settings);

    const socket = new WebSocket(settings.url) as unknown as SocketLike;
    client = new TeleopClient(socket);
    client.onChange(render);
    client.onChange((view) => {
      // Lockstep: start ticking actions once a spec and a state exist.
      if (view.status === "connected" && view.spec && view.state && sendTimer === null) {
        input = new InputState(mapping, view.spec.task.num_arms);
        const periodMs = 1000 / view.spec.control_rate_hz;
        const limits = view.spec.limits;
        sendTimer = window.setInterval(() => {
          if (input && client) client.send(input.tick(limits));
        }, periodMs);
      }
      if (view.status === "disconnected" && sendTimer !== null) {
        clearInterval(sendTimer);
        sendTimer = null;
        toast("disconnected — reconnect to continue");
      }
    });
  }

  window.addEventListener("keydown", (e) => {
    if (e.target instanceof HTMLInputElement) return;
    input?.keyDown(e.code);
    if (Object.keys(mapping.translationKeys).includes(e.code)) e.preventDefault();
  });
  window.addEventListener("keyup", (e) => input?.keyUp(e.code));
  window.addEventListener("blur", () => input?.clearHeld());

  el("btn-connect").addEventListener("click", connect);
  el("btn-reset").addEventListener("click", () => {
    const seed = parseInt(seedInput.value, 10) || 0;
    settings.seed = seed;
    saveSettings(settings);
    input?.onReset();
    client?.reset(seed);
  });
  el("btn-record").addEventListener("click", () => client?.record("start"));
  el("btn-stop").addEventListener("click", () => client?.record("stop"));
  el("btn-save").addEventListener("click", () => client?.record("save"));
}

window.addEventListener("DOMContentLoaded", start);
