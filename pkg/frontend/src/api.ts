/** Typed client for the previz studio HTTP/JSON API. */

export interface SceneInfo {
  id: string;
  nodes: number;
  bounds: [number[], number[]];
  objects: string[];
}

export interface CharacterInfo {
  id: string;
  height_m: number;
  capsule_radius_m: number;
}

export interface PlacementDoc {
  character_id: string;
  position: [number, number, number];
  facing_rad: number;
}

export interface RunEntry {
  id: string;
  rank: number;
  score: number;
  ranker: string;
  story_text: string;
  camera_text: string;
  clip_key: string;
  duration_frames: number;
  camera_tag: Record<string, unknown>;
  metrics: Record<string, number>;
}

export interface RunDoc {
  run_id: string;
  seed: number;
  entries: RunEntry[];
  warnings: string[];
}

export interface LineDoc {
  index: number;
  text: string;
  selection: string | null;
  run: RunDoc | null;
}

export interface ProjectDoc {
  id: string;
  scene_id: string;
  placements: PlacementDoc[];
  lines: LineDoc[];
}

export interface ProposalPage {
  run_id: string;
  total: number;
  offset: number;
  warnings: string[];
  selection: string | null;
  proposals: RunEntry[];
}

export interface StatsDoc {
  by_movement: Record<string, number>;
  by_scale: Record<string, number>;
  by_angle: Record<string, number>;
  total_shots: number;
  total_frames: number;
}

export interface JobDoc {
  id: string;
  status: "queued" | "running" | "done" | "failed";
  error: string | null;
  proposal_count: number | null;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: unknown) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
  }
}

export class ApiClient {
  constructor(public base: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await fetch(this.base + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await resp.json().catch(() => null);
    if (!resp.ok) {
      throw new ApiError(resp.status, payload?.detail ?? payload);
    }
    return payload as T;
  }

  scenes(): Promise<{ scenes: SceneInfo[] }> {
    return this.request("GET", "/api/scenes");
  }

  characters(): Promise<{ characters: CharacterInfo[] }> {
    return this.request("GET", "/api/characters");
  }

  createProject(id: string, sceneId: string): Promise<ProjectDoc> {
    return this.request("POST", "/api/projects", { id, scene_id: sceneId });
  }

  getProject(id: string): Promise<ProjectDoc> {
    return this.request("GET", `/api/projects/${id}`);
  }

  placeCharacter(projectId: string, placement: PlacementDoc): Promise<ProjectDoc> {
    return this.request("POST", `/api/projects/${projectId}/placements`, placement);
  }

  addLine(projectId: string, text: string): Promise<{ index: number; text: string }> {
    return this.request("POST", `/api/projects/${projectId}/lines`, { text });
  }

  generate(projectId: string, line: number): Promise<{ job_id: string }> {
    return this.request("POST", `/api/projects/${projectId}/lines/${line}/generate`);
  }

  job(jobId: string): Promise<JobDoc> {
    return this.request("GET", `/api/jobs/${jobId}`);
  }

  proposals(projectId: string, line: number, top = 5, offset = 0): Promise<ProposalPage> {
    return this.request(
      "GET",
      `/api/projects/${projectId}/lines/${line}/proposals?top=${top}&offset=${offset}`,
    );
  }

  select(projectId: string, line: number, proposalId: string): Promise<unknown> {
    return this.request("POST", `/api/projects/${projectId}/lines/${line}/select`, {
      proposal_id: proposalId,
    });
  }

  stats(projectId: string): Promise<StatsDoc> {
    return this.request("GET", `/api/projects/${projectId}/stats`);
  }

  monitorUrl(projectId: string, opts: { mode: "top" | "orbit"; yawDeg: number;
                                        pitchDeg: number; width: number }): string {
    const q = new URLSearchParams({
      mode: opts.mode,
      yaw_deg: String(opts.yawDeg),
      pitch_deg: String(opts.pitchDeg),
      width: String(opts.width),
    });
    // Cache-buster: placements change the picture at the same URL.
    q.set("_", String(Date.now()));
    return `${this.base}/api/projects/${projectId}/monitor.png?${q}`;
  }

  sheetUrl(proposalId: string): string {
    return `${this.base}/api/proposals/${proposalId}/sheet.png`;
  }

  frameUrl(proposalId: string, t: number): string {
    return `${this.base}/api/proposals/${proposalId}/frames/${t}.png`;
  }

  async pollJob(jobId: string, intervalMs = 250, timeoutMs = 120_000): Promise<JobDoc> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
      const job = await this.job(jobId);
      if (job.status === "done" || job.status === "failed") {
        return job;
      }
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
    throw new Error(`job ${jobId} timed out`);
  }
}
