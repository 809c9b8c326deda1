/** Studio shell: project creation, the two stage tabs, screen switching. */

import { ApiClient } from "./api.js";
import { renderEnvironment } from "./environment.js";
import { renderFilming } from "./filming.js";
import { StudioState } from "./state.js";

function el(tag: string, cls?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export async function boot(root: HTMLElement, apiBase: string): Promise<StudioState> {
  const state = new StudioState(new ApiClient(apiBase));
  await state.loadCatalog();

  const header = el("header", "studio-header");
  const tabs = el("nav", "stage-tabs");
  const content = el("main", "stage-content");
  root.replaceChildren(header, tabs, content);

  function render(): void {
    header.replaceChildren();
    header.append(el("h1", undefined, "previz studio"));
    if (state.project) {
      header.append(el("span", "project-label",
        `${state.project.id} · ${state.project.scene_id}`));
    } else {
      const form = el("div", "project-form");
      const idInput = el("input", "project-id") as HTMLInputElement;
      idInput.placeholder = "project id";
      const sceneSelect = el("select", "project-scene") as HTMLSelectElement;
      for (const scene of state.scenes) {
        const opt = document.createElement("option");
        opt.value = scene.id;
        opt.textContent = scene.id;
        sceneSelect.append(opt);
      }
      const createBtn = el("button", "project-create", "create project");
      createBtn.addEventListener("click", async () => {
        if (!idInput.value) return;
        state.project = await state.api.createProject(idInput.value,
                                                      sceneSelect.value);
        await state.refresh();
        render();
      });
      form.append(idInput, sceneSelect, createBtn);
      header.append(form);
    }

    tabs.replaceChildren();
    for (const stage of ["environment", "filming"] as const) {
      const tab = el("button", "stage-tab") as HTMLButtonElement;
      tab.dataset.stage = stage;
      tab.textContent = stage === "environment"
        ? "1 · environment setting" : "2 · filming";
      if (state.stage === stage) tab.classList.add("active");
      // Filming stays locked until a scene is chosen and a character placed.
      tab.disabled = stage === "filming" && !state.filmingUnlocked();
      tab.addEventListener("click", () => {
        state.stage = stage;
        render();
      });
      tabs.append(tab);
    }

    content.replaceChildren();
    if (state.stage === "environment") {
      renderEnvironment(content, state, render);
    } else {
      renderFilming(content, state, render);
    }
  }

  render();
  (state as StudioState & { rerender?: () => void }).rerender = render;
  return state;
}

declare global {
  interface Window {
    previzBoot?: typeof boot;
  }
}

if (typeof window !== "undefined") {
  window.previzBoot = boot;
  const mount = document.getElementById("app");
  if (mount && mount.dataset.autoboot !== "off") {
    const base = new URLSearchParams(window.location.search).get("api")
      ?? "http://127.0.0.1:8040";
    void boot(mount, base);
  }
}
