"""
Scenario Manager - load, validate and serialize scenario JSON files
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from pydantic import ValidationError

from components.errors import ScenarioError
from components.managers.config_manager import resolve_scenario_path
from components.models.scenario import SCHEMA_VERSION, Scenario

logger = logging.getLogger(__name__)


def _reject_duplicates(pairs: List[Tuple[str, Any]]) -> Dict[str, Any]:
    result: Dict[str, Any] = {}
    for key, value in pairs:
        if key in result:
            raise ScenarioError(f"duplicate key '{key}'", field=key)
        result[key] = value
    return result


def _line_of(text: str, loc: Sequence[Union[str, int]]) -> Optional[int]:
    """Best-effort line number of a field path inside the JSON text"""
    position = 0
    found = None
    for part in loc:
        if not isinstance(part, str):
            continue
        index = text.find(f'"{part}"', position)
        if index < 0:
            break
        position = index + 1
        found = index
    if found is None:
        return None
    return text.count("\n", 0, found) + 1


def _field_path(loc: Sequence[Union[str, int]]) -> str:
    path = ""
    for part in loc:
        if isinstance(part, int):
            path += f"[{part}]"
        else:
            path += f".{part}" if path else part
    return path


def loads(text: str, source: str = "<string>") -> Scenario:
    """Parse and validate scenario JSON text"""
    try:
        raw = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{source}: invalid JSON: {e.msg}", field="json", line=e.lineno)

    if not isinstance(raw, dict):
        raise ScenarioError(f"{source}: top level must be an object")
    version = raw.get("schema_version")
    if version is None:
        raise ScenarioError(f"{source}: schema_version is missing", field="schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioError(
            f"{source}: unsupported schema_version {version!r} (this build reads {SCHEMA_VERSION})",
            field="schema_version",
            line=_line_of(text, ["schema_version"]),
        )

    try:
        scenario = Scenario.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        loc = tuple(p for p in first["loc"] if p not in ("__root__",))
        raise ScenarioError(
            f"{source}: {first['msg']}",
            field=_field_path(loc) or "scenario",
            line=_line_of(text, loc),
        )
    logger.debug(f"✅ Loaded scenario '{scenario.name}' from {source}")
    return scenario


def load(path: Union[str, Path]) -> Scenario:
    """Load a scenario by path or by name inside the scenario directory"""
    resolved = resolve_scenario_path(path)
    return loads(resolved.read_text(encoding="utf-8"), source=str(resolved))


def dumps(scenario: Scenario) -> str:
    """Serialize to the on-disk format (2-space JSON, LF, trailing newline)"""
    data = scenario.model_dump(mode="json", exclude_none=True)
    return json.dumps(data, indent=2) + "\n"


def save(scenario: Scenario, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(dumps(scenario), encoding="utf-8", newline="\n")
    logger.info(f"✅ Wrote scenario '{scenario.name}' to {path}")
    return path
