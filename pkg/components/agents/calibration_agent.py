"""
Calibration Agent - radio grid fit from a targets file and Monte Carlo fit of the stochastic model
"""
import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from components.agents.simulation_agent import SimulationAgent
from components.errors import CalibrationError, ScenarioError
from components.managers.event_bus import EventBus
from components.managers.scenario_manager import load
from components.models.budget import direction_floors
from components.models.calibration import CalibrationGrid, CalibrationResult, CalibrationTarget, calibrate
from components.models.measurement import summarize
from components.models.scenario import Scenario, StochasticModel

logger = logging.getLogger(__name__)

DEFAULT_FIT_SEEDS = (11, 23, 37)


class TargetEntry(BaseModel):
    """One row of a targets file: a link in a scenario and its measured figures"""

    model_config = ConfigDict(extra="forbid")

    label: Optional[str] = None
    scenario: str
    link: List[int] = Field(min_length=2, max_length=2)
    attenuation: float
    snr: float


class TargetsFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    targets: List[TargetEntry]
    grid: CalibrationGrid = Field(default_factory=CalibrationGrid)


def load_targets(path: Union[str, Path]) -> tuple:
    """Targets file -> (targets, grid); scenario paths resolve next to the file first"""
    path = Path(path)
    try:
        targets_file = TargetsFile.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}: invalid JSON: {e.msg}", field="json", line=e.lineno)
    except ValidationError as e:
        first = e.errors()[0]
        raise ScenarioError(f"{path}: {first['msg']}", field=".".join(str(p) for p in first["loc"]))

    targets = []
    for entry in targets_file.targets:
        local = path.parent / entry.scenario
        scenario = load(local if local.exists() else entry.scenario)
        positions = {n.id: n.position for n in scenario.nodes}
        a, b = entry.link
        if a not in positions or b not in positions:
            raise ScenarioError(f"link {entry.link} not in scenario '{scenario.name}'", field="targets.link")
        targets.append(CalibrationTarget(
            label=entry.label or f"{scenario.name}:{a}-{b}",
            plan=scenario.floor_plan,
            a=positions[a],
            b=positions[b],
            attenuation=entry.attenuation,
            snr=entry.snr,
        ))
    return targets, targets_file.grid


def calibrate_from_file(path: Union[str, Path]) -> CalibrationResult:
    targets, grid = load_targets(path)
    return calibrate(targets, grid=grid)


class StochasticFit(BaseModel):
    """Fitted stochastic block plus what it reproduces"""

    model: StochasticModel
    mean_pd: float
    pdr: float
    floor_pd: float


class CalibrationAgent:
    """Fits contention and loss so seeded sessions land on reference figures"""

    def __init__(self, n_requests: int = 1000, seeds: Sequence[int] = DEFAULT_FIT_SEEDS,
                 iterations: int = 30):
        self.n_requests = n_requests
        self.seeds = tuple(seeds)
        self.iterations = iterations
        # fitting runs stay off the global bus
        self.bus = EventBus(max_history=1)

    def _measure(self, scenario: Scenario) -> tuple:
        agent = SimulationAgent(scenario, self.bus)
        means, pdrs = [], []
        for seed in self.seeds:
            stats = summarize(agent.run_session(self.n_requests, seed))
            pdrs.append(stats.pdr)
            if stats.mean_pd is not None:
                means.append(stats.mean_pd)
        mean_pd = sum(means) / len(means) if means else float("nan")
        return mean_pd, sum(pdrs) / len(pdrs)

    def fit_stochastic_model(self, scenario: Scenario, target_mean_pd: float,
                             target_pdr: float) -> StochasticFit:
        """
        contention_mean = target PD - deterministic floor PD; loss_scale by
        bisection on the Monte Carlo PDR (same seeds at every step)
        """
        agent = SimulationAgent(scenario, self.bus)
        floors = direction_floors(agent.route.router_count, scenario.protocol)
        floor_pd = (floors.forward_us + floors.return_us) / 2 / 1000
        contention = target_mean_pd - floor_pd
        if contention < 0:
            raise CalibrationError(
                f"target PD {target_mean_pd} ms is below the deterministic floor {floor_pd:.3f} ms"
            )
        model = scenario.stochastic.model_copy(update={"contention_mean": round(contention, 2)})

        def with_scale(scale: float) -> Scenario:
            return scenario.model_copy(update={"stochastic": model.model_copy(update={"loss_scale": scale})})

        if all(att <= model.loss_anchor_db for att in agent.link_attenuation):
            logger.warning(f"⚠️ '{scenario.name}': no link above the loss anchor; loss_scale left as is")
        else:
            low, high = 0.0, 1.0
            _, pdr_high = self._measure(with_scale(high))
            if pdr_high > target_pdr:
                logger.warning(f"⚠️ '{scenario.name}': PDR {target_pdr} unreachable, using loss_scale 1")
                low = high
            for _ in range(self.iterations):
                if high - low < 1e-4:
                    break
                middle = (low + high) / 2
                _, pdr = self._measure(with_scale(middle))
                if pdr > target_pdr:
                    low = middle
                else:
                    high = middle
            model = model.model_copy(update={"loss_scale": round((low + high) / 2, 4)})

        fitted = scenario.model_copy(update={"stochastic": model})
        mean_pd, pdr = self._measure(fitted)
        logger.info(
            f"✅ '{scenario.name}': contention {model.contention_mean} ms, loss_scale "
            f"{model.loss_scale} -> mean PD {mean_pd:.2f} ms, PDR {pdr:.3f}"
        )
        return StochasticFit(model=model, mean_pd=mean_pd, pdr=pdr, floor_pd=floor_pd)
