"""
Calibrate Shipped Scenarios
Fits the radio model to the measured worst-link figures and the stochastic model
(contention delay, loss scale) to each scenario's pinned mean PD and PDR.
The radio fit is applied before the stochastic fit, since per-link loss depends
on attenuation. Both blocks are written back only with --write.
"""
import argparse
import os
import sys
from pathlib import Path
from typing import Optional

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from components.agents.calibration_agent import CalibrationAgent, calibrate_from_file
from components.errors import MeshProbeError
from components.managers.config_manager import scenario_dir
from components.managers.scenario_manager import load, save
from components.models.radio import RadioParams

SHIPPED = ["config1.json", "config2.json", "config3.json", "config4.json"]


def fit_radio(targets: Path):
    print("📡 Fitting radio parameters...")
    result = calibrate_from_file(targets)
    params = result.params
    print(f"   L0 {params.reference_loss_l0} dB, exponent {params.path_loss_exponent}")
    print(f"   noise floor {params.ambient_noise_floor} dB, per-wall {params.interference_bonus} dB")
    for material in result.searched_materials:
        print(f"   {material.value}: {params.material_attenuation[material]} dB")
    for residual in result.residuals:
        print(f"   {residual.label}: attenuation {residual.attenuation_residual:+.2f} dB, "
              f"snr {residual.snr_residual:+.2f} dB")
    print(f"✅ Max residual {result.max_residual:.2f} dB")
    return result


def fit_stochastic(names, requests: int, write: bool, radio: Optional[RadioParams] = None):
    agent = CalibrationAgent(n_requests=requests)
    for name in names:
        scenario = load(scenario_dir() / name)
        if radio is not None:
            if scenario.radio != radio:
                print(f"📡 {scenario.name}: radio block differs from the fit")
            scenario = scenario.model_copy(update={"radio": radio})
        expected = scenario.expected
        if expected is None or expected.mean_pd is None or expected.pdr is None:
            print(f"⚠️  {scenario.name}: no pinned mean PD / PDR, stochastic fit skipped")
            if write and radio is not None:
                print(f"✅ Updated {save(scenario, scenario_dir() / name)}")
            continue
        print(f"\n🎲 {scenario.name}: target mean PD {expected.mean_pd} ms, PDR {expected.pdr}")
        fit = agent.fit_stochastic_model(scenario, expected.mean_pd, expected.pdr)
        print(f"   floor PD {fit.floor_pd:.3f} ms")
        print(f"   contention {fit.model.contention_mean} ms (stddev {fit.model.contention_stddev})")
        print(f"   loss_scale {fit.model.loss_scale}")
        print(f"   -> mean PD {fit.mean_pd:.2f} ms, PDR {fit.pdr:.3f}")
        if write:
            path = save(scenario.model_copy(update={"stochastic": fit.model}), scenario_dir() / name)
            print(f"✅ Updated {path}")


def main():
    parser = argparse.ArgumentParser(description="Calibrate the shipped scenarios")
    parser.add_argument("--targets", type=Path, default=scenario_dir() / "calibration_targets.json")
    parser.add_argument("--requests", type=int, default=1000)
    parser.add_argument("--skip-radio", action="store_true")
    parser.add_argument("--write", action="store_true", help="rewrite the scenario files")
    parser.add_argument("scenarios", nargs="*", default=SHIPPED)
    args = parser.parse_args()

    print("=" * 60)
    print("🚀 Calibrating scenarios")
    print("=" * 60)
    try:
        radio = None if args.skip_radio else fit_radio(args.targets).params
        fit_stochastic(args.scenarios, args.requests, args.write, radio)
    except MeshProbeError as e:
        print(f"❌ {e}", file=sys.stderr)
        sys.exit(2)


if __name__ == "__main__":
    main()
