"""previz: script-driven storyboard pre-visualization.

Parse story/camera scripts, expand them into character-route and camera
trajectory proposals under cinematic subspace rules, execute each proposal
through a schematic simulator, and rank the results with a trainable shot
discriminator.
"""

__version__ = "0.1.0"

from .scripts import (Angle, CameraScript, Movement, Scale, ScriptLine,
                      StoryScript, parse_camera_script, parse_line,
                      parse_script_file, parse_story_script,
                      validate_against_assets)
from .scene import AssetRegistry, SceneGraph, load_registry, load_scene, resolve_target
from .navgrid import OccupancyGrid, Path, build_grid, plan_paths
from .story import (ActionClip, CharacterState, ClipPool, StoryParams,
                    character_at, load_clip_pool, propose_story, retrieve_clips)
from .camera import (CameraPose, CameraTrajectory, GeneratorTag, ShotPreset,
                     SphericalOffset, easing, look_at, spherical_to_world,
                     world_to_spherical)
from .proposals import EnumerationConfig, enumerate_camera_proposals
from .raster import Frame, render_frame
from .shots import (ShotProposal, perturb_negative, sample_frames, simulate_shot)
from .features import ShotFeatures, extract_features
from .ranker import (RankerConfig, RankerModel, forward, loss_binary,
                     loss_class, loss_contrastive, rank_shots, train_step)
