"""Story and camera script parsing.

Scripts are parenthesized whitespace-separated tuples, one pair per line:

    (Anna walk-to door);(follow medium eye-level)

The story tuple is ``(<character> <verb> [<target>])``; the camera tuple is
``(<movement> <scale> <angle>)`` over closed vocabularies.  The full grammar
ships in ``docs/script_grammar.ebnf``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field


class ScriptError(Exception):
    """Base for script parsing problems. Carries the byte offset of the fault."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte {offset})")
        self.message = message
        self.offset = offset


class ScriptSyntaxError(ScriptError):
    """Malformed tuple: bad parentheses, wrong arity, missing target."""


class UnknownTokenError(ScriptError):
    """A camera-tuple token outside its closed vocabulary."""

    def __init__(self, field_name: str, token: str, offset: int = 0):
        super().__init__(f"unknown {field_name} token {token!r}", offset)
        self.field_name = field_name
        self.token = token


class Movement(enum.Enum):
    STATIC = "static"
    FOLLOW = "follow"
    PUSH = "push"
    PULL = "pull"
    ZOOM_IN = "zoom_in"
    ZOOM_OUT = "zoom_out"
    TILT = "tilt"
    PAN = "pan"
    DOLLY = "dolly"
    PEDESTAL = "pedestal"
    ARC = "arc"


class Scale(enum.Enum):
    CLOSE_UP = "close_up"
    MEDIUM = "medium"
    FULL = "full"


class Angle(enum.Enum):
    EYE_LEVEL = "eye_level"
    HIGH = "high"
    LOW = "low"


# Hyphen spellings are accepted on input; canonical output uses underscores.
def _alias_table(enum_cls) -> dict[str, enum.Enum]:
    table = {}
    for member in enum_cls:
        table[member.value] = member
        table[member.value.replace("_", "-")] = member
    return table


_MOVEMENT_ALIASES = _alias_table(Movement)
_SCALE_ALIASES = _alias_table(Scale)
_ANGLE_ALIASES = _alias_table(Angle)

# Verbs with the "-to" suffix are object/place interactions and take a target.
_TARGETED_VERB_SUFFIX = "-to"

_IDENT_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_\-]*")


@dataclass(frozen=True)
class StoryScript:
    character_id: str
    action_verb: str
    target_ref: str | None = None


@dataclass(frozen=True)
class CameraScript:
    movement: Movement
    scale: Scale
    angle: Angle


@dataclass(frozen=True)
class ScriptLine:
    index: int
    story: StoryScript
    camera: CameraScript
    raw_text: str


@dataclass
class ValidationReport:
    """Unresolved identifiers found while checking a story script against assets."""

    unknown_character: str | None = None
    unknown_verb: str | None = None
    unknown_target: str | None = None
    problems: list[str] = field(default_factory=list)

    def ok(self) -> bool:
        return not self.problems


def _split_tuple(text: str, base_offset: int = 0) -> tuple[list[str], list[int]]:
    """Return the whitespace-separated tokens inside one parenthesized tuple,
    together with each token's byte offset in the original input."""
    stripped = text.strip()
    lead = len(text) - len(text.lstrip())
    if not stripped.startswith("("):
        raise ScriptSyntaxError("expected '('", base_offset + lead)
    if not stripped.endswith(")"):
        raise ScriptSyntaxError("expected ')'", base_offset + lead + len(stripped))
    inner = stripped[1:-1]
    if "(" in inner or ")" in inner:
        bad = inner.index("(") if "(" in inner else inner.index(")")
        raise ScriptSyntaxError("nested parenthesis", base_offset + lead + 1 + bad)
    tokens, offsets = [], []
    for m in re.finditer(r"\S+", inner):
        tokens.append(m.group(0))
        offsets.append(base_offset + lead + 1 + m.start())
    return tokens, offsets


def _check_ident(token: str, what: str, offset: int) -> str:
    if not _IDENT_RE.fullmatch(token):
        raise ScriptSyntaxError(f"invalid {what} {token!r}", offset)
    return token


def parse_story_script(text: str, base_offset: int = 0) -> StoryScript:
    """Parse ``(<character> <verb> [<target>])``. Identifier case is preserved.

    Verbs ending in ``-to`` are interaction verbs and require the target token.
    """
    tokens, offsets = _split_tuple(text, base_offset)
    if len(tokens) < 2:
        raise ScriptSyntaxError(
            f"story tuple needs character and verb, got {len(tokens)} token(s)",
            offsets[-1] if offsets else base_offset,
        )
    if len(tokens) > 3:
        raise ScriptSyntaxError("story tuple has too many tokens", offsets[3])
    character = _check_ident(tokens[0], "character", offsets[0])
    verb = _check_ident(tokens[1], "verb", offsets[1])
    target = None
    if len(tokens) == 3:
        target = _check_ident(tokens[2], "target", offsets[2])
    elif verb.endswith(_TARGETED_VERB_SUFFIX):
        raise ScriptSyntaxError(f"verb {verb!r} requires a target", offsets[1])
    return StoryScript(character_id=character, action_verb=verb, target_ref=target)


def _resolve_enum(token: str, aliases: dict, field_name: str, offset: int):
    member = aliases.get(token)
    if member is None:
        raise UnknownTokenError(field_name, token, offset)
    return member


def parse_camera_script(text: str, base_offset: int = 0) -> CameraScript:
    """Parse ``(<movement> <scale> <angle>)`` over the closed vocabularies."""
    tokens, offsets = _split_tuple(text, base_offset)
    if len(tokens) != 3:
        raise ScriptSyntaxError(
            f"camera tuple needs movement, scale and angle, got {len(tokens)} token(s)",
            offsets[-1] if offsets else base_offset,
        )
    movement = _resolve_enum(tokens[0], _MOVEMENT_ALIASES, "movement", offsets[0])
    scale = _resolve_enum(tokens[1], _SCALE_ALIASES, "scale", offsets[1])
    angle = _resolve_enum(tokens[2], _ANGLE_ALIASES, "angle", offsets[2])
    return CameraScript(movement=movement, scale=scale, angle=angle)


def format_story_script(script: StoryScript) -> str:
    parts = [script.character_id, script.action_verb]
    if script.target_ref is not None:
        parts.append(script.target_ref)
    return "(" + " ".join(parts) + ")"


def format_camera_script(script: CameraScript) -> str:
    return f"({script.movement.value} {script.scale.value} {script.angle.value})"


def format_line(line: ScriptLine) -> str:
    return f"{format_story_script(line.story)};{format_camera_script(line.camera)}"


def parse_line(text: str, index: int = 0, base_offset: int = 0) -> ScriptLine:
    """Parse one ``story_tuple ";" camera_tuple`` pair."""
    if ";" not in text:
        raise ScriptSyntaxError("expected ';' between story and camera tuples",
                                base_offset + len(text))
    story_part, camera_part = text.split(";", 1)
    story = parse_story_script(story_part, base_offset)
    camera = parse_camera_script(camera_part, base_offset + len(story_part) + 1)
    return ScriptLine(index=index, story=story, camera=camera, raw_text=text.strip())


def parse_script_file(text: str) -> list[ScriptLine]:
    """Parse a whole script document. ``#`` starts a comment line; blank lines
    are skipped. Line indices are contiguous over the surviving lines."""
    lines: list[ScriptLine] = []
    offset = 0
    for raw in text.splitlines(keepends=True):
        stripped = raw.strip()
        if stripped and not stripped.startswith("#"):
            lines.append(parse_line(raw.rstrip("\n"), index=len(lines), base_offset=offset))
        offset += len(raw)
    return lines


def validate_against_assets(script: StoryScript, registry) -> ValidationReport:
    """Check a parsed story script against an asset registry.

    Never raises; an empty report means the script is executable.
    """
    report = ValidationReport()
    if script.character_id not in registry.characters:
        report.unknown_character = script.character_id
        report.problems.append(f"unknown character {script.character_id!r}")
    if script.action_verb not in registry.verbs:
        report.unknown_verb = script.action_verb
        report.problems.append(f"unknown verb {script.action_verb!r}")
    if script.target_ref is not None and not registry.has_target(script.target_ref):
        report.unknown_target = script.target_ref
        report.problems.append(f"unknown target {script.target_ref!r}")
    return report
