/** Environment setting stage: choose the scene, place characters on the
 * monitor view, orbit the monitor camera. */

import { ApiError } from "./api.js";
import { StudioState } from "./state.js";

const MONITOR_WIDTH = 480;

function el(tag: string, cls?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderEnvironment(root: HTMLElement, state: StudioState,
                                  onChange: () => void): void {
  root.replaceChildren();

  // Choose Scene window.
  const scenePanel = el("section", "panel scene-panel");
  scenePanel.append(el("h2", undefined, "Scene"));
  const sceneList = el("div", "scene-list");
  for (const scene of state.scenes) {
    const card = el("button", "scene-card") as HTMLButtonElement;
    card.dataset.scene = scene.id;
    card.textContent = `${scene.id} (${scene.objects.length} objects)`;
    if (state.project?.scene_id === scene.id) card.classList.add("active");
    card.disabled = state.project !== null;
    sceneList.append(card);
  }
  scenePanel.append(sceneList);
  root.append(scenePanel);

  // Choose Characters window.
  const charPanel = el("section", "panel character-panel");
  charPanel.append(el("h2", undefined, "Characters"));
  const hint = el("p", "hint",
    "Pick a character, then click the monitor to place it.");
  charPanel.append(hint);
  for (const character of state.characters) {
    const card = el("button", "character-card") as HTMLButtonElement;
    card.dataset.character = character.id;
    const placed = state.project?.placements.find(
      (p) => p.character_id === character.id);
    card.textContent = placed
      ? `${character.id} @ (${placed.position[0].toFixed(1)}, ${placed.position[1].toFixed(1)})`
      : `${character.id} (${character.height_m} m)`;
    if (state.activeCharacter === character.id) card.classList.add("active");
    card.addEventListener("click", () => {
      state.activeCharacter = character.id;
      onChange();
    });
    charPanel.append(card);
  }
  root.append(charPanel);

  // Scene Setting window: monitor camera controls.
  const settingPanel = el("section", "panel setting-panel");
  settingPanel.append(el("h2", undefined, "Scene setting"));
  const modeBtn = el("button", "mode-toggle") as HTMLButtonElement;
  modeBtn.textContent = state.monitor.mode === "top"
    ? "view: top-down map" : "view: orbit";
  modeBtn.addEventListener("click", () => {
    state.monitor.mode = state.monitor.mode === "top" ? "orbit" : "top";
    onChange();
  });
  settingPanel.append(modeBtn);
  const yaw = el("input", "yaw-slider") as HTMLInputElement;
  yaw.type = "range";
  yaw.min = "0"; yaw.max = "360"; yaw.value = String(state.monitor.yawDeg);
  yaw.addEventListener("change", () => {
    state.monitor.yawDeg = Number(yaw.value);
    onChange(); // each orbit step fetches a fresh schematic frame
  });
  settingPanel.append(el("label", undefined, "orbit yaw"), yaw);
  root.append(settingPanel);

  // Monitor View window.
  const monitorPanel = el("section", "panel monitor-panel");
  monitorPanel.append(el("h2", undefined, "Monitor"));
  const errorBox = el("div", "placement-error");
  errorBox.style.display = "none";
  if (state.project) {
    const img = el("img", "monitor-view") as HTMLImageElement;
    img.width = MONITOR_WIDTH;
    const scene = state.scene();
    if (scene) {
      const [lo, hi] = scene.bounds;
      img.height = Math.round(MONITOR_WIDTH * (hi[1] - lo[1]) / (hi[0] - lo[0]));
    }
    img.src = state.api.monitorUrl(state.project.id, {
      mode: state.monitor.mode, yawDeg: state.monitor.yawDeg,
      pitchDeg: state.monitor.pitchDeg, width: MONITOR_WIDTH,
    });
    img.addEventListener("click", async (event) => {
      if (!state.project || !state.activeCharacter) return;
      if (state.monitor.mode !== "top") return; // placement is map-mode only
      const rect = img.getBoundingClientRect();
      const world = state.clickToWorld(event.clientX - rect.left,
                                       event.clientY - rect.top,
                                       img.width, img.height);
      if (!world) return;
      try {
        state.project = await state.api.placeCharacter(state.project.id, {
          character_id: state.activeCharacter,
          position: [world[0], world[1], 0],
          facing_rad: 0,
        });
        errorBox.style.display = "none";
        await state.refresh();
        onChange();
      } catch (err) {
        if (err instanceof ApiError) {
          // Keep the current view; surface the rejection at the drop point.
          errorBox.textContent = String(err.detail);
          errorBox.style.left = `${event.clientX - rect.left}px`;
          errorBox.style.top = `${event.clientY - rect.top}px`;
          errorBox.style.display = "block";
        } else {
          throw err;
        }
      }
    });
    monitorPanel.append(img, errorBox);
  } else {
    monitorPanel.append(el("p", "hint", "Create a project to see the scene."));
  }
  root.append(monitorPanel);
}
