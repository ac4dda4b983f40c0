"""
Config Manager - scenario directory lookup
MESHPROBE_SCENARIO_DIR is the only setting read from the environment
"""
import logging
import os
from pathlib import Path
from typing import Union

try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass

logger = logging.getLogger(__name__)

SCENARIO_DIR_ENV = "MESHPROBE_SCENARIO_DIR"
REPO_ROOT = Path(__file__).resolve().parents[2]
DEFAULT_SCENARIO_DIR = REPO_ROOT / "scenarios"


def scenario_dir() -> Path:
    """Directory holding scenario files"""
    override = os.getenv(SCENARIO_DIR_ENV)
    if override:
        return Path(override)
    return DEFAULT_SCENARIO_DIR


def resolve_scenario_path(arg: Union[str, Path]) -> Path:
    """Existing path as given, else the name looked up in scenario_dir()"""
    path = Path(arg)
    if path.exists():
        return path
    candidates = [scenario_dir() / path, scenario_dir() / path.name]
    if not path.suffix:
        candidates.append(scenario_dir() / f"{path.name}.json")
    for candidate in candidates:
        if candidate.exists():
            logger.debug(f"Resolved scenario '{arg}' to {candidate}")
            return candidate
    raise FileNotFoundError(f"scenario '{arg}' not found (looked in {scenario_dir()})")
