/** Client-side mirror of the server project plus pure view state.
 *
 * The server is the source of truth: `refresh()` rebuilds everything the
 * screens display from API responses, so a page reload reconstructs the
 * identical visible state. The client never computes rankings, trajectories
 * or statistics itself.
 */

import { ApiClient, CharacterInfo, ProjectDoc, SceneInfo, StatsDoc } from "./api.js";

export type Stage = "environment" | "filming";

export interface MonitorView {
  mode: "top" | "orbit";
  yawDeg: number;
  pitchDeg: number;
}

export class StudioState {
  scenes: SceneInfo[] = [];
  characters: CharacterInfo[] = [];
  project: ProjectDoc | null = null;
  stats: StatsDoc | null = null;
  stage: Stage = "environment";
  monitor: MonitorView = { mode: "top", yawDeg: 45, pitchDeg: -35 };
  activeCharacter: string | null = null;
  selectedLine = 0;
  drawerCount = 5; // "top 5", expandable by pages of 5
  generating = new Set<number>(); // one active generation per line

  constructor(public api: ApiClient) {}

  async loadCatalog(): Promise<void> {
    this.scenes = (await this.api.scenes()).scenes;
    this.characters = (await this.api.characters()).characters;
  }

  async refresh(): Promise<void> {
    if (this.project === null) return;
    this.project = await this.api.getProject(this.project.id);
    this.stats = await this.api.stats(this.project.id);
    if (this.selectedLine >= this.project.lines.length) {
      this.selectedLine = Math.max(0, this.project.lines.length - 1);
    }
  }

  scene(): SceneInfo | undefined {
    return this.scenes.find((s) => s.id === this.project?.scene_id);
  }

  /** Filming stage unlocks once a scene is set and a character is placed. */
  filmingUnlocked(): boolean {
    return this.project !== null && this.project.placements.length >= 1;
  }

  /** Export unlocks when every line carries a selection. */
  exportReady(): boolean {
    const lines = this.project?.lines ?? [];
    return lines.length > 0 && lines.every((ln) => ln.selection !== null);
  }

  /** Map a click on the top-down monitor image to world coordinates using
   * only the server-provided scene bounds (row 0 is the max-y edge). */
  clickToWorld(pxX: number, pxY: number, imgW: number, imgH: number):
      [number, number] | null {
    const scene = this.scene();
    if (!scene || imgW <= 0 || imgH <= 0) return null;
    const [lo, hi] = scene.bounds;
    const wx = lo[0] + (pxX / imgW) * (hi[0] - lo[0]);
    const wy = hi[1] - (pxY / imgH) * (hi[1] - lo[1]);
    return [wx, wy];
  }
}
