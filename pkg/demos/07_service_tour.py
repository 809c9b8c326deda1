"""A scripted tour of the HTTP/JSON studio API (no network: in-process client).

Run with:  python demos/07_service_tour.py
The same app serves real clients via `previz serve`.
"""

import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from previz.pipeline import PipelineConfig
from previz.service import create_app

ASSETS = Path(__file__).resolve().parents[1] / "src" / "previz" / "assets"

store = tempfile.mkdtemp(prefix="previz_store_")
app = create_app(store, ASSETS / "registry.json",
                 PipelineConfig(render_size=(320, 180)))
client = TestClient(app)

print("== environment stage ==")
scenes = client.get("/api/scenes").json()["scenes"]
print(f"scenes: {[s['id'] for s in scenes]}")
print(f"characters: {[c['id'] for c in client.get('/api/characters').json()['characters']]}")

client.post("/api/projects", json={"id": "tour", "scene_id": "apartment"})
resp = client.post("/api/projects/tour/placements",
                   json={"character_id": "Bob", "position": [2.0, 5.0, 0.0],
                         "facing_rad": 0.4})
print(f"placed Bob: HTTP {resp.status_code}")
bad = client.post("/api/projects/tour/placements",
                  json={"character_id": "Anna", "position": [3.5, 3.0, 0.0]})
print(f"placing Anna inside the table: HTTP {bad.status_code} "
      f"({bad.json()['detail']})")
monitor = client.get("/api/projects/tour/monitor.png?yaw_deg=40&width=320")
print(f"monitor view: {len(monitor.content)} PNG bytes")

print("\n== filming stage ==")
client.post("/api/projects/tour/lines",
            json={"text": "(Bob sing);(static close-up eye-level)"})
job_id = client.post("/api/projects/tour/lines/0/generate").json()["job_id"]
while True:
    job = client.get(f"/api/jobs/{job_id}").json()
    if job["status"] in ("done", "failed"):
        break
    time.sleep(0.2)
print(f"generation job: {job['status']}, {job['proposal_count']} proposals")

page = client.get("/api/projects/tour/lines/0/proposals?top=5").json()
for entry in page["proposals"]:
    print(f"  #{entry['rank']} score {entry['score']:.4f} "
          f"azimuth {entry['camera_tag'].get('azimuth', 0):.2f}")
best = page["proposals"][0]["id"]
client.post("/api/projects/tour/lines/0/select", json={"proposal_id": best})
sheet = client.get(f"/api/proposals/{best}/sheet.png")
frame = client.get(f"/api/proposals/{best}/frames/0.png")
print(f"selected {best}: contact sheet {len(sheet.content)} B, "
      f"frame 0 {len(frame.content)} B")
print(f"stats: {client.get('/api/projects/tour/stats').json()['by_movement']}")
