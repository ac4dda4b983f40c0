"""
Radio Link Model - log-distance path loss plus per-wall attenuation
Both figures follow the field convention: lower dB is a better link
"""
import math
from enum import Enum
from typing import Dict

from pydantic import BaseModel, ConfigDict, Field

from components.errors import GeometryError, RadioError
from components.models.floorplan import FloorPlan, Point2D, Wall, WallMaterial, distance, wall_crossings

# Connectability thresholds
USABLE_ATTENUATION_DB = 70.0
USABLE_SNR_DB = 60.0
DEAD_ATTENUATION_DB = 90.0

DEFAULT_MATERIAL_ATTENUATION: Dict[WallMaterial, float] = {
    WallMaterial.REINFORCED_CONCRETE: 12.0,
    WallMaterial.CINDER_BLOCK: 6.0,
    WallMaterial.DRYWALL: 3.0,
    WallMaterial.WOOD: 2.0,
}


class LinkGrade(str, Enum):
    """Link verdict"""
    GOOD = "Good"
    WEAK = "Weak"
    DEAD = "Dead"


class RadioParams(BaseModel):
    """Propagation model parameters; one block per scenario"""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    reference_loss_l0: float = 11.0
    path_loss_exponent: float = Field(default=2.0, ge=1.5, le=6.0)
    ambient_noise_floor: float = 20.0
    interference_bonus: float = 11.0
    material_attenuation: Dict[WallMaterial, float] = Field(
        default_factory=lambda: dict(DEFAULT_MATERIAL_ATTENUATION)
    )

    def wall_attenuation(self, wall: Wall) -> float:
        """Per-crossing loss: the wall's own figure, else the material default"""
        if wall.attenuation is not None:
            return wall.attenuation
        try:
            return self.material_attenuation[wall.material]
        except KeyError:
            return DEFAULT_MATERIAL_ATTENUATION[wall.material]


class LinkQuality(BaseModel):
    """Attenuation and SNR-metric for one node pair, with the verdict"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    attenuation: float
    snr_metric: float
    usable: bool
    grade: LinkGrade
    distance: float = 0.0
    walls: int = 0


def classify(attenuation: float, snr_metric: float, link_distance: float = 0.0, walls: int = 0) -> LinkQuality:
    """Apply the thresholds: <=70 dB and <=60 dB usable, >90 dB dead"""
    usable = attenuation <= USABLE_ATTENUATION_DB and snr_metric <= USABLE_SNR_DB
    if usable:
        grade = LinkGrade.GOOD
    elif attenuation <= DEAD_ATTENUATION_DB:
        grade = LinkGrade.WEAK
    else:
        grade = LinkGrade.DEAD
    return LinkQuality(
        attenuation=attenuation,
        snr_metric=snr_metric,
        usable=usable,
        grade=grade,
        distance=link_distance,
        walls=walls,
    )


def link_quality(a: Point2D, b: Point2D, plan: FloorPlan, params: RadioParams) -> LinkQuality:
    """Link quality between two positions through the floor plan"""
    if a == b:
        raise GeometryError(f"link endpoints coincide at ({a.x}, {a.y})")
    for end in (a, b):
        if not plan.extent.contains(end):
            raise RadioError(f"link endpoint ({end.x}, {end.y}) lies outside the floor plan extent")

    crossed = wall_crossings(a, b, plan)
    link_distance = distance(a, b)
    # fsum keeps the result independent of crossing order (a->b vs b->a)
    wall_loss = math.fsum(params.wall_attenuation(w) for w in crossed)
    attenuation = (
        params.reference_loss_l0
        + 10.0 * params.path_loss_exponent * math.log10(link_distance)
        + wall_loss
    )
    snr_metric = params.ambient_noise_floor + params.interference_bonus * len(crossed)
    return classify(attenuation, snr_metric, link_distance, len(crossed))
