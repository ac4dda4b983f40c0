"""
Radio Calibration - exhaustive grid fit of the link model to measured dB figures
Attenuation and SNR-metric are fitted independently; each is linear in its parameters
"""
import logging
import math
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field

from components.errors import CalibrationError, GeometryError
from components.models.floorplan import FloorPlan, Point2D, WallMaterial, distance, wall_crossings
from components.models.radio import DEFAULT_MATERIAL_ATTENUATION, RadioParams, link_quality

logger = logging.getLogger(__name__)

# cells evaluated per chunk of the attenuation grid
_CHUNK_CELLS = 2 ** 22


class CalibrationTarget(BaseModel):
    """One measured link: geometry plus the dB figures observed on it"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    label: str
    plan: FloorPlan
    a: Point2D
    b: Point2D
    attenuation: float
    snr: float


class CalibrationGrid(BaseModel):
    """Search ranges (inclusive) and steps"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    l0_min: float = 0.0
    l0_max: float = 40.0
    l0_step: float = 0.5
    exponent_min: float = 1.5
    exponent_max: float = 4.0
    exponent_step: float = 0.05
    material_min: float = 0.0
    material_max: float = 20.0
    material_step: float = 0.5
    noise_min: float = 0.0
    noise_max: float = 40.0
    noise_step: float = 0.5
    bonus_min: float = 0.0
    bonus_max: float = 20.0
    bonus_step: float = 0.5
    tolerance_db: float = Field(default=15.0, gt=0)
    # concrete > cinder block > drywall > wood, strictly, over the resolved table
    ordered_materials: bool = True


class TargetResidual(BaseModel):
    """Fit quality for one target"""

    label: str
    attenuation_target: float
    attenuation_fitted: float
    snr_target: float
    snr_fitted: float

    @computed_field
    @property
    def attenuation_residual(self) -> float:
        return self.attenuation_fitted - self.attenuation_target

    @computed_field
    @property
    def snr_residual(self) -> float:
        return self.snr_fitted - self.snr_target

    @computed_field
    @property
    def worst(self) -> float:
        return max(abs(self.attenuation_residual), abs(self.snr_residual))


class CalibrationResult(BaseModel):
    """Fitted parameters and how well they reproduce each target"""

    params: RadioParams
    residuals: List[TargetResidual]
    searched_materials: List[WallMaterial]
    sse: float

    @computed_field
    @property
    def max_residual(self) -> float:
        return max(r.worst for r in self.residuals)


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(round((hi - lo) / step))
    return np.round(lo + step * np.arange(count + 1), 10)


class _Geometry:
    """Linear decomposition of one target's attenuation and SNR"""

    def __init__(self, target: CalibrationTarget):
        if target.a == target.b:
            raise GeometryError(f"target '{target.label}' has coincident endpoints")
        crossed = wall_crossings(target.a, target.b, target.plan)
        self.key = (round(distance(target.a, target.b), 9), tuple(sorted(
            ((w.material.value, w.attenuation) for w in crossed), key=str
        )))
        self.log_term = 10.0 * math.log10(distance(target.a, target.b))
        self.fixed = math.fsum(w.attenuation for w in crossed if w.attenuation is not None)
        self.counts = {m: 0 for m in WallMaterial}
        for wall in crossed:
            if wall.attenuation is None:
                self.counts[wall.material] += 1
        self.walls = len(crossed)


def _design(targets, geometries, materials, grid):
    """Residual of every (L0, exponent) cell before wall terms, plus the material axis"""
    y = np.array([t.attenuation - g.fixed for t, g in zip(targets, geometries)])
    log_terms = np.array([g.log_term for g in geometries])
    counts = np.array([[g.counts[m] for m in materials] for g in geometries], dtype=float)
    counts = counts.reshape(len(geometries), len(materials))

    l0_axis = _axis(grid.l0_min, grid.l0_max, grid.l0_step)
    exp_axis = _axis(grid.exponent_min, grid.exponent_max, grid.exponent_step)
    mat_axis = _axis(grid.material_min, grid.material_max, grid.material_step)

    l0_flat = np.repeat(l0_axis, len(exp_axis))
    exp_flat = np.tile(exp_axis, len(l0_axis))
    residual_base = y[None, :] - l0_flat[:, None] - exp_flat[:, None] * log_terms[None, :]
    return residual_base, l0_flat, exp_flat, mat_axis, counts


def _wall_terms(index, mat_axis, counts, materials, n_targets):
    if not materials:
        return np.zeros((1, n_targets))
    digits = np.stack(np.unravel_index(index, (len(mat_axis),) * len(materials)), axis=1)
    return mat_axis[digits] @ counts.T


def _ordered(index, mat_axis, materials, resolved):
    """Mask of material combos whose full table strictly decreases in WallMaterial order"""
    if resolved is None or not materials:
        return np.ones(len(index), dtype=bool)
    digits = np.stack(np.unravel_index(index, (len(mat_axis),) * len(materials)), axis=1)
    columns = [
        mat_axis[digits[:, materials.index(m)]] if m in materials else np.full(len(index), resolved[m])
        for m in WallMaterial
    ]
    return np.all(np.diff(np.stack(columns, axis=1), axis=1) < 0, axis=1)


def _fit_attenuation(targets, geometries, materials, grid, resolved=None):
    """Least-squares grid search; returns (l0, exponent, material values, sse)"""
    residual_base, l0_flat, exp_flat, mat_axis, counts = _design(targets, geometries, materials, grid)
    base_sq = (residual_base ** 2).sum(axis=1)

    combos = len(mat_axis) ** len(materials)
    chunk = max(1, _CHUNK_CELLS // len(l0_flat))
    best_value, best_loc = math.inf, None
    for start in range(0, combos, chunk):
        index = np.arange(start, min(combos, start + chunk))
        allowed = _ordered(index, mat_axis, materials, resolved)
        if not allowed.any():
            continue
        wall_terms = _wall_terms(index, mat_axis, counts, materials, len(geometries))
        sse = (
            base_sq[:, None]
            - 2.0 * residual_base @ wall_terms.T
            + (wall_terms ** 2).sum(axis=1)[None, :]
        )
        sse = np.round(sse, 9)
        sse[:, ~allowed] = np.inf
        flat = int(np.argmin(sse))
        row, col = np.unravel_index(flat, sse.shape)
        value = float(sse[row, col])
        loc = (int(row), start + int(col))
        # row-major argmin already prefers the smallest parameter vector
        if value < best_value or (value == best_value and loc < best_loc):
            best_value, best_loc = value, loc

    if best_loc is None:
        raise CalibrationError("no material table on the grid keeps concrete > cinder block > drywall > wood")
    row, combo = best_loc
    if materials:
        digits = np.unravel_index(combo, (len(mat_axis),) * len(materials))
        values = [float(mat_axis[d]) for d in digits]
    else:
        values = []
    return float(l0_flat[row]), float(exp_flat[row]), values, max(best_value, 0.0)


def _minimax_attenuation(targets, geometries, materials, grid, resolved=None) -> float:
    """Smallest achievable worst-case attenuation error over the grid"""
    residual_base, l0_flat, _, mat_axis, counts = _design(targets, geometries, materials, grid)

    combos = len(mat_axis) ** len(materials)
    chunk = max(1, (_CHUNK_CELLS // 8) // (len(l0_flat) * len(geometries)))
    best = math.inf
    for start in range(0, combos, chunk):
        index = np.arange(start, min(combos, start + chunk))
        allowed = _ordered(index, mat_axis, materials, resolved)
        if not allowed.any():
            continue
        wall_terms = _wall_terms(index, mat_axis, counts, materials, len(geometries))
        worst = np.abs(residual_base[:, None, :] - wall_terms[None, :, :]).max(axis=2)
        worst[:, ~allowed] = np.inf
        best = min(best, float(worst.min()))
    return best


def _fit_snr(targets, geometries, grid):
    """Grid search over (noise floor, per-wall bonus); returns (noise, bonus, sse, minimax)"""
    snr = np.array([t.snr for t in targets])
    walls = np.array([g.walls for g in geometries], dtype=float)
    noise_axis = _axis(grid.noise_min, grid.noise_max, grid.noise_step)
    bonus_axis = _axis(grid.bonus_min, grid.bonus_max, grid.bonus_step)
    predicted = noise_axis[:, None, None] + bonus_axis[None, :, None] * walls[None, None, :]
    error = predicted - snr[None, None, :]
    sse = np.round((error ** 2).sum(axis=2), 9)
    i, j = np.unravel_index(int(np.argmin(sse)), sse.shape)
    minimax = float(np.abs(error).max(axis=2).min())
    return float(noise_axis[i]), float(bonus_axis[j]), float(sse[i, j]), minimax


def calibrate(
    targets: List[CalibrationTarget],
    base: Optional[RadioParams] = None,
    grid: Optional[CalibrationGrid] = None,
) -> CalibrationResult:
    """
    Fit RadioParams to measured (attenuation, SNR-metric) pairs

    Minimizes the summed squared dB error on the grid; ties go to the
    lexicographically smallest parameter vector. Materials no target crosses
    keep their value from `base`. With `grid.ordered_materials` the resolved
    table must fall strictly from concrete to wood.
    """
    base = base or RadioParams()
    grid = grid or CalibrationGrid()
    if not targets:
        raise CalibrationError("calibration needs at least one target")

    geometries = [_Geometry(t) for t in targets]
    if len({g.key for g in geometries}) < 2:
        logger.warning("⚠️ Fewer than two distinct target geometries; the fit is under-determined")

    materials = [m for m in WallMaterial if any(g.counts[m] for g in geometries)]
    logger.info(
        f"🔍 Calibrating on {len(targets)} targets, searching materials: "
        f"{[m.value for m in materials] or 'none'}"
    )

    resolved = None
    if grid.ordered_materials:
        resolved = {m: base.material_attenuation.get(m, DEFAULT_MATERIAL_ATTENUATION[m]) for m in WallMaterial}
    l0, exponent, material_values, att_sse = _fit_attenuation(targets, geometries, materials, grid, resolved)
    noise, bonus, snr_sse, snr_minimax = _fit_snr(targets, geometries, grid)

    table = dict(base.material_attenuation)
    table.update(dict(zip(materials, material_values)))
    params = base.model_copy(update={
        "reference_loss_l0": l0,
        "path_loss_exponent": exponent,
        "ambient_noise_floor": noise,
        "interference_bonus": bonus,
        "material_attenuation": table,
    })

    residuals = []
    for target in targets:
        quality = link_quality(target.a, target.b, target.plan, params)
        residuals.append(TargetResidual(
            label=target.label,
            attenuation_target=target.attenuation,
            attenuation_fitted=quality.attenuation,
            snr_target=target.snr,
            snr_fitted=quality.snr_metric,
        ))
    result = CalibrationResult(
        params=params,
        residuals=residuals,
        searched_materials=materials,
        sse=att_sse + snr_sse,
    )

    if result.max_residual > grid.tolerance_db:
        att_minimax = _minimax_attenuation(targets, geometries, materials, grid, resolved)
        if att_minimax > grid.tolerance_db or snr_minimax > grid.tolerance_db:
            raise CalibrationError(
                f"no grid point within {grid.tolerance_db} dB of every target "
                f"(best worst-case: attenuation {att_minimax:.2f} dB, snr {snr_minimax:.2f} dB)",
                residuals=[
                    {
                        "label": r.label,
                        "attenuation_residual": r.attenuation_residual,
                        "snr_residual": r.snr_residual,
                    }
                    for r in residuals
                ],
            )
        logger.warning(
            f"⚠️ Least-squares optimum misses a target by {result.max_residual:.2f} dB; "
            "a minimax fit would stay within tolerance"
        )

    logger.info(f"✅ Calibration done, max residual {result.max_residual:.2f} dB")
    return result
