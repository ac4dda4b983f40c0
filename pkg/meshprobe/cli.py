"""
CLI - simulate, budget, topology, report, calibrate and live probing
Errors go to stderr as `meshprobe-error: <kind>: <message>`
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from components.agents.calibration_agent import calibrate_from_file
from components.agents.event_handlers import EventHandlers
from components.agents.export_agent import SESSION_COLUMNS, ExportAgent, OutputFormat
from components.agents.live_agent import LiveRole, live_session
from components.agents.simulation_agent import run_session
from components.errors import FormationFailure, LiveSessionError, MeshProbeError
from components.managers.event_bus import EventBus, set_event_bus
from components.managers.scenario_manager import load
from components.models.budget import compute_budget, direction_floors
from components.models.measurement import pooled_mean, summarize
from components.models.protocol import ProtocolParams
from components.models.reports import BudgetReport, StatsReport, TopologyReport
from components.models.scenario import coverage
from components.models.topology import build_graph, diagnose

logger = logging.getLogger("meshprobe")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_FORMATION = 3
EXIT_IO = 4


class UsageError(Exception):
    """Bad command line"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default=None,
                        help="output format (default: json, table for budget/topology)")
    common.add_argument("--out", type=Path, help="write the report here instead of stdout")
    common.add_argument("--verbose", action="store_true", help="debug logging on stderr")

    parser = _Parser(prog="meshprobe", description="Wireless mesh measurement lab")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    simulate = sub.add_parser("simulate", parents=[common], help="seeded simulated probe session")
    simulate.add_argument("--scenario", required=True)
    simulate.add_argument("--requests", type=_positive_int, default=100)
    simulate.add_argument("--seed", type=int, required=True)

    budget = sub.add_parser("budget", parents=[common], help="deterministic delay budget")
    budget.add_argument("--scenario", required=True)
    budget.add_argument("--per-router-delay", type=float, default=2.0)
    budget.add_argument("--wifi-module-max", type=float, default=19.0)

    topology = sub.add_parser("topology", parents=[common], help="link qualities, path and verdict")
    topology.add_argument("--scenario", required=True)

    report = sub.add_parser("report", parents=[common], help="statistics of a recorded session")
    report.add_argument("--session", required=True, type=Path)
    report.add_argument("--scenario", help="scenario whose pinned figures are compared")

    calibrate = sub.add_parser("calibrate", parents=[common], help="fit radio parameters")
    calibrate.add_argument("--targets", required=True, type=Path)

    live = sub.add_parser("live", help="probe protocol over TCP")
    roles = live.add_subparsers(dest="role", required=True, parser_class=_Parser)
    device = roles.add_parser("device", parents=[common], help="serve pose strings")
    device.add_argument("--listen", required=True, metavar="HOST:PORT")
    device.add_argument("--seed", type=int, default=0, help="sensor stream seed")
    device.add_argument("--sessions", type=_positive_int, default=None,
                        help="exit after this many clients (default: serve forever)")
    device.add_argument("--scenario", help="take protocol parameters from this scenario")
    client = roles.add_parser("client", parents=[common], help="issue probes to a device")
    client.add_argument("--connect", required=True, metavar="HOST:PORT")
    client.add_argument("--requests", type=_positive_int, default=100)
    client.add_argument("--scenario", help="take protocol parameters from this scenario")
    return parser


class MeshProbeCLI:
    """Subcommand handlers; each returns the rendered report"""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.export = ExportAgent()

    def fmt(self, default: OutputFormat = OutputFormat.JSON) -> OutputFormat:
        return OutputFormat(self.args.format) if self.args.format else default

    def simulate(self) -> str:
        scenario = load(self.args.scenario)
        session = run_session(scenario, self.args.requests, self.args.seed)
        fmt = self.fmt()
        if fmt == OutputFormat.TABLE:
            stats = summarize(session)
            return self.export.export_table(
                self.export.stats_rows(stats), ["metric", "value"],
                title=f"{scenario.name} seed {session.seed}",
            )
        return self.export.render(
            fmt, session, self.export.session_rows(session), SESSION_COLUMNS,
        )

    def budget(self) -> str:
        scenario = load(self.args.scenario)
        graph = build_graph(scenario.nodes, scenario.floor_plan, scenario.radio)
        formation = diagnose(graph)
        if formation.path is not None:
            routers = formation.path.router_count
            hops = routers - 1
        else:
            routers, hops = len(scenario.nodes), None
        budget = compute_budget(routers, scenario.protocol, self.args.per_router_delay,
                                self.args.wifi_module_max)
        notes = self.export.budget_notes(budget, hops)
        if formation.path is None:
            notes.append(f"topology {formation.verdict.value}: charged every router in the scenario")
        report = BudgetReport(
            scenario=scenario.name,
            budget=budget,
            hop_count=hops,
            floors=direction_floors(routers, scenario.protocol, self.args.per_router_delay,
                                    self.args.wifi_module_max),
            notes=notes,
        )
        return self.export.render(
            self.fmt(OutputFormat.TABLE), report, self.export.budget_rows(budget), ["component", "ms"],
            title=f"{scenario.name}: delay budget, {routers} routers", notes=notes,
        )

    def topology(self) -> str:
        scenario = load(self.args.scenario)
        formation = diagnose(build_graph(scenario.nodes, scenario.floor_plan, scenario.radio))
        cover = coverage(scenario)
        report = TopologyReport(scenario=scenario.name, formation=formation, coverage=cover,
                                expected=scenario.expected)
        fields = ["a", "b", "distance_m", "walls", "attenuation_db", "snr_db", "grade", "usable"]
        return self.export.render(
            self.fmt(OutputFormat.TABLE), report, self.export.topology_rows(formation), fields,
            title=f"{scenario.name}: links", notes=self.export.topology_notes(formation, cover),
        )

    def report(self) -> str:
        session = self.export.read_session(self.args.session)
        pooled = reported = None
        notes: List[str] = []
        if self.args.scenario:
            scenario = load(self.args.scenario)
            expected = scenario.expected
            if expected is not None and expected.test_means:
                pooled = pooled_mean(expected.test_means)
                reported = expected.mean_pd
                if reported is not None and abs(pooled - reported) > 0.005:
                    notes.append(f"equal-weight pooling of the per-test means gives {pooled:.3f} ms; "
                                 f"the reported mean is {reported} ms")
        stats = summarize(session)
        report = StatsReport(stats=stats, pooled_test_mean=pooled, reported_mean=reported, notes=notes)
        fmt = self.fmt()
        if fmt == OutputFormat.CSV:
            return self.export.export_csv(
                self.export.dataset_rows(stats), ["index", "size", "mean_pd", "partial"],
            )
        return self.export.render(
            fmt, report, self.export.stats_rows(stats), ["metric", "value"],
            title=f"{stats.scenario}: session statistics", notes=notes,
        )

    def calibrate(self) -> str:
        result = calibrate_from_file(self.args.targets)
        fields = ["label", "attenuation_target", "attenuation_fitted", "snr_target", "snr_fitted"]
        params = result.params
        notes = [
            f"L0 {params.reference_loss_l0} dB, exponent {params.path_loss_exponent}, "
            f"noise {params.ambient_noise_floor} dB, per-wall {params.interference_bonus} dB",
            "materials: " + ", ".join(f"{m.value} {params.material_attenuation[m]} dB"
                                      for m in result.searched_materials),
        ]
        return self.export.render(
            self.fmt(), result, self.export.calibration_rows(result), fields,
            title="calibration residuals", notes=notes,
        )

    def _protocol(self) -> ProtocolParams:
        if getattr(self.args, "scenario", None):
            return load(self.args.scenario).protocol
        return ProtocolParams()

    def live(self) -> str:
        params = self._protocol()
        if self.args.role == "device":
            live_session(LiveRole.DEVICE, self.args.listen, 0, params,
                         sensor_seed=self.args.seed, max_sessions=self.args.sessions)
            return ""
        session = live_session(LiveRole.CLIENT, self.args.connect, self.args.requests, params)
        if self.fmt() == OutputFormat.TABLE:
            stats = summarize(session)
            return self.export.export_table(
                self.export.stats_rows(stats), ["metric", "value"],
                title=f"live session against {self.args.connect}",
            )
        return self.export.render(
            self.fmt(), session, self.export.session_rows(session), SESSION_COLUMNS,
        )


def _emit(text: str, out: Optional[Path]):
    if not text:
        return
    if out is not None:
        out.write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(f"meshprobe-error: {kind}: {message}\n")
    return code


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        return _fail("usage", str(e), EXIT_USAGE)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )
    bus = EventBus()
    set_event_bus(bus)
    EventHandlers(bus)

    cli = MeshProbeCLI(args)
    handlers: Dict[str, Callable[[], str]] = {
        "simulate": cli.simulate,
        "budget": cli.budget,
        "topology": cli.topology,
        "report": cli.report,
        "calibrate": cli.calibrate,
        "live": cli.live,
    }
    try:
        _emit(handlers[args.command](), args.out)
    except FormationFailure as e:
        if e.report is not None:
            fmt = cli.fmt(OutputFormat.TABLE)
            export = cli.export
            rows = export.topology_rows(e.report)
            fields = ["a", "b", "distance_m", "walls", "attenuation_db", "snr_db", "grade", "usable"]
            _emit(export.render(fmt, e.report, rows, fields, title="formation report",
                                notes=export.topology_notes(e.report)), args.out)
        return _fail(e.kind, str(e), EXIT_FORMATION)
    except LiveSessionError as e:
        return _fail(e.kind, str(e), EXIT_IO)
    except MeshProbeError as e:
        return _fail(e.kind, str(e), EXIT_INVALID)
    except ValidationError as e:
        return _fail("validation", str(e).splitlines()[0], EXIT_INVALID)
    except ValueError as e:
        return _fail("validation", str(e), EXIT_INVALID)
    except OSError as e:
        return _fail("io", str(e), EXIT_IO)
    except KeyboardInterrupt:
        return _fail("io", "interrupted", EXIT_IO)
    return EXIT_OK
