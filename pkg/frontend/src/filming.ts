/** Filming stage: script inputs, generation jobs, the ranked proposal
 * drawer, the selected-shot output strip and live statistics. */

import { ApiError, RunEntry } from "./api.js";
import { StudioState } from "./state.js";

function el(tag: string, cls?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function caretError(text: string, offset: number, message: string): HTMLElement {
  const box = el("div", "script-error");
  box.append(el("pre", undefined, text));
  const caretLine = " ".repeat(Math.max(0, Math.min(offset, text.length))) + "^";
  box.append(el("pre", "caret", caretLine));
  box.append(el("span", undefined, message));
  return box;
}

function proposalCard(state: StudioState, entry: RunEntry, selected: boolean,
                      onSelect: (id: string) => void): HTMLElement {
  const card = el("div", "proposal-card" + (selected ? " selected" : ""));
  card.dataset.proposal = entry.id;
  const sheet = el("img", "card-sheet") as HTMLImageElement;
  sheet.src = state.api.sheetUrl(entry.id);
  sheet.alt = `keyframes of ${entry.id}`;
  card.append(sheet);
  card.append(el("div", "card-score",
    `#${entry.rank + 1}  score ${entry.score.toFixed(4)}`));
  card.append(el("div", "card-tag",
    `${entry.camera_text} · ${entry.clip_key} · ${entry.duration_frames}f`));
  const pick = el("button", "card-select", selected ? "selected" : "select");
  pick.addEventListener("click", () => onSelect(entry.id));
  card.append(pick);
  return card;
}

export function renderFilming(root: HTMLElement, state: StudioState,
                              onChange: () => void): void {
  root.replaceChildren();
  const project = state.project;
  if (!project) return;

  // Input windows: one row per script line plus the new-line box.
  const inputPanel = el("section", "panel input-panel");
  inputPanel.append(el("h2", undefined, "Script lines"));
  project.lines.forEach((line) => {
    const row = el("div", "line-row" +
      (state.selectedLine === line.index ? " active" : ""));
    row.dataset.line = String(line.index);
    const label = el("button", "line-text", `${line.index}: ${line.text}`);
    label.addEventListener("click", () => {
      state.selectedLine = line.index;
      state.drawerCount = 5;
      onChange();
    });
    row.append(label);
    const status = line.run
      ? `${line.run.entries.length} proposals`
      : "not generated";
    row.append(el("span", "line-status",
      status + (line.selection ? " · selected" : "")));
    const genBtn = el("button", "line-generate") as HTMLButtonElement;
    genBtn.textContent = state.generating.has(line.index) ? "generating…" : "generate";
    genBtn.disabled = state.generating.has(line.index);
    genBtn.addEventListener("click", async () => {
      if (state.generating.has(line.index)) return; // one job per line
      state.generating.add(line.index);
      onChange();
      try {
        const { job_id } = await state.api.generate(project.id, line.index);
        const job = await state.api.pollJob(job_id);
        if (job.status === "failed") {
          window.alert(`generation failed: ${job.error}`);
        }
        await state.refresh();
      } finally {
        state.generating.delete(line.index);
        onChange();
      }
    });
    row.append(genBtn);
    inputPanel.append(row);
  });

  const newLine = el("div", "new-line");
  const input = el("input", "line-input") as HTMLInputElement;
  input.placeholder = "(Anna walk-to door);(follow medium eye-level)";
  const addBtn = el("button", "line-add", "add line");
  const errorSlot = el("div", "error-slot");
  addBtn.addEventListener("click", async () => {
    errorSlot.replaceChildren();
    try {
      await state.api.addLine(project.id, input.value);
      input.value = "";
      await state.refresh();
      onChange();
    } catch (err) {
      if (err instanceof ApiError && typeof err.detail === "object" && err.detail) {
        const detail = err.detail as { message?: string; offset?: number };
        errorSlot.append(caretError(input.value, detail.offset ?? 0,
                                    detail.message ?? "invalid script"));
      } else if (err instanceof ApiError) {
        errorSlot.append(el("span", "script-error", String(err.detail)));
      } else {
        throw err;
      }
    }
  });
  newLine.append(input, addBtn, errorSlot);
  inputPanel.append(newLine);
  root.append(inputPanel);

  // Proposal drawer: ranked cards for the selected line, pages of five.
  const drawer = el("section", "panel drawer-panel");
  drawer.append(el("h2", undefined, `Proposals for line ${state.selectedLine}`));
  const line = project.lines[state.selectedLine];
  if (line?.run) {
    const entries = line.run.entries.slice(0, state.drawerCount);
    const grid = el("div", "drawer-grid");
    for (const entry of entries) {
      grid.append(proposalCard(state, entry, line.selection === entry.id,
        async (id) => {
          await state.api.select(project.id, state.selectedLine, id);
          await state.refresh();
          onChange();
        }));
    }
    drawer.append(grid);
    if (line.run.entries.length > state.drawerCount) {
      const more = el("button", "drawer-more",
        `more (${line.run.entries.length - state.drawerCount} left)`);
      more.addEventListener("click", () => {
        state.drawerCount += 5;
        onChange();
      });
      drawer.append(more);
    }
    for (const warning of line.run.warnings) {
      drawer.append(el("div", "warning", warning));
    }
  } else {
    drawer.append(el("p", "hint", "Generate this line to see ranked proposals."));
  }
  root.append(drawer);

  // Output window: selected shots in line order.
  const output = el("section", "panel output-panel");
  output.append(el("h2", undefined, "Output strip"));
  const strip = el("div", "output-strip");
  for (const ln of project.lines) {
    if (!ln.selection) continue;
    const thumb = el("img", "output-thumb") as HTMLImageElement;
    thumb.src = state.api.sheetUrl(ln.selection);
    thumb.title = ln.text;
    strip.append(thumb);
  }
  output.append(strip);
  const exportBtn = el("button", "export-button", "export storyboard") as HTMLButtonElement;
  exportBtn.disabled = !state.exportReady();
  output.append(exportBtn);
  root.append(output);

  // Statistics window.
  const statsPanel = el("section", "panel stats-panel");
  statsPanel.append(el("h2", undefined, "Statistics"));
  if (state.stats) {
    statsPanel.append(el("div", "stat-total",
      `${state.stats.total_shots} shots · ${state.stats.total_frames} frames`));
    const table = el("div", "stat-table");
    for (const [group, counts] of [["movement", state.stats.by_movement],
                                   ["scale", state.stats.by_scale],
                                   ["angle", state.stats.by_angle]] as const) {
      const used = Object.entries(counts).filter(([, n]) => n > 0);
      table.append(el("div", "stat-row",
        `${group}: ` + (used.map(([k, n]) => `${k} ×${n}`).join(", ") || "—")));
    }
    statsPanel.append(table);
  }
  root.append(statsPanel);
}
