#!/usr/bin/env python3
"""
CXL-SSD Device-in-the-Loop Simulator - Main Application

Entry point for running experiments, generating synthetic traces, comparing
reports and validating configuration files.

Subcommands:
- run: execute one experiment and write report.json plus CSV tables
- gen-trace: write a deterministic synthetic trace file
- compare: per-metric ratios and deltas between two reports
- validate-config: check a configuration without running it
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from src.analytics.compare import compare_reports
from src.config.settings import Settings, load_settings
from src.host.trace import write_trace
from src.host.trace_generator import generate_trace, trace_summary
from src.storage.report_writer import load_report
from src.utils.errors import ConfigError, ReportIOError, SimulatorError
from src.utils.logger import get_logger, setup_logging
from src.workflow.simulation import run_experiment

logger = get_logger(__name__)

GENERATOR_FLAGS = {
    "cores": "trace.generator.cores",
    "threads": "trace.generator.threads",
    "count": "trace.generator.count",
    "read_ratio": "trace.generator.read_ratio",
    "distribution": "trace.generator.distribution",
    "theta": "trace.generator.theta",
    "footprint_bytes": "trace.generator.footprint_bytes",
    "base": "trace.generator.base",
    "dram_fraction": "trace.generator.dram_fraction",
    "gap_mean": "trace.generator.gap_mean",
    "gap_distribution": "trace.generator.gap_distribution",
}


class SimulatorCLI:
    """Implements each subcommand on top of the simulation package."""

    def __init__(self, config_file: Optional[str] = None, overrides: Optional[List[str]] = None):
        self.config_file = config_file
        self.overrides = list(overrides or [])

    def load(self, extra_overrides: Optional[List[str]] = None) -> Settings:
        return load_settings(self.config_file, self.overrides + list(extra_overrides or []))

    def run(self, seed: Optional[int] = None, out: Optional[str] = None, emit_events: bool = False) -> int:
        extra = []
        if seed is not None:
            extra.append(f"seed={seed}")
        if out is not None:
            extra.append(f"output_dir={out}")
        if emit_events:
            extra.append("report.emit_events=true")
        settings = self.load(extra)

        report, paths = run_experiment(settings)
        print(f"✅ {settings.experiment_name}: {report.counts.accesses} accesses, "
              f"{report.total_cycles} cycles, CPI {report.cycles_per_instruction}")
        print(f"   Reports: {Path(settings.output_dir).resolve()} ({len(paths)} files)")
        return 0

    def gen_trace(self, out: str, seed: Optional[int], generator_values: Dict[str, Any]) -> int:
        extra = [f"{GENERATOR_FLAGS[name]}={value}" for name, value in generator_values.items() if value is not None]
        if seed is not None:
            extra.append(f"seed={seed}")
        settings = self.load(extra)

        requests = generate_trace(settings.trace.generator, settings.host, settings.seed)
        write_trace(out, requests, settings.trace.format)
        summary = trace_summary(requests)
        print(f"✅ Wrote {summary['count']} records to {out}")
        print(f"   Read ratio achieved: {summary['read_ratio']:.4f} ({summary['reads']} reads, {summary['writes']} writes)")
        print(f"   Per core: {summary['per_core']}")
        return 0

    @staticmethod
    def compare(report_a: str, report_b: str, out: Optional[str] = None) -> int:
        comparison = compare_reports(load_report(report_a), load_report(report_b))
        print(f"{'metric':<40} {'a':>16} {'b':>16} {'delta':>16} {'ratio':>10}")
        for metric, values in comparison.items():
            ratio = "n/a" if values["ratio"] is None else f"{values['ratio']:.4f}"
            print(f"{metric:<40} {values['a']:>16.6g} {values['b']:>16.6g} {values['delta']:>16.6g} {ratio:>10}")
        if out:
            try:
                with open(out, "w") as f:
                    json.dump(comparison, f, indent=2, sort_keys=True)
            except OSError as e:
                raise ReportIOError(f"cannot write comparison {out}: {e}") from e
        return 0

    def validate_config(self) -> int:
        settings = Settings(config_file=self.config_file, overrides=self.overrides)
        errors = settings.validate_configuration()
        if errors:
            for error in errors:
                print(f"❌ {error}")
            raise ConfigError(f"{len(errors)} configuration error(s)")
        print(f"✅ Configuration valid: {self.config_file or '(defaults)'}")
        return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="CXL-SSD device-in-the-loop simulator",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py run --config configs/minimal.yaml
  python main.py run --config configs/constant_baseline.yaml --override compaction_mode=parallel
  python main.py gen-trace --count 1000 --read-ratio 0.5 --seed 7 --out traces/small.trace
  python main.py compare results/empirical results/constant
  python main.py validate-config --config configs/empirical_nand.yaml
        """
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable debug logging")
    parser.add_argument("--log-file", help="Also log to a rotating file")

    def add_config_args(sub):
        sub.add_argument("--config", "-c", help="YAML configuration file")
        sub.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                         help="Override a setting (repeatable); dotted path or unique key")

    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Run one experiment")
    add_config_args(run)
    run.add_argument("--out", "-o", help="Output directory (default: output_dir setting)")
    run.add_argument("--seed", type=int, help="Random seed")
    run.add_argument("--emit-events", action="store_true", help="Write the raw events.csv stream")

    gen = subparsers.add_parser("gen-trace", help="Generate a synthetic trace file")
    add_config_args(gen)
    gen.add_argument("--out", "-o", required=True, help="Trace file to write")
    gen.add_argument("--seed", type=int, help="Random seed")
    gen.add_argument("--cores", type=int)
    gen.add_argument("--threads", type=int)
    gen.add_argument("--count", type=int)
    gen.add_argument("--read-ratio", type=float)
    gen.add_argument("--distribution", choices=["uniform", "zipfian"])
    gen.add_argument("--theta", type=float)
    gen.add_argument("--footprint-bytes")
    gen.add_argument("--base")
    gen.add_argument("--dram-fraction", type=float)
    gen.add_argument("--gap-mean", type=float)
    gen.add_argument("--gap-distribution", choices=["fixed", "geometric"])

    compare = subparsers.add_parser("compare", help="Compare two reports")
    compare.add_argument("report_a", help="report.json (or its directory) of run A")
    compare.add_argument("report_b", help="report.json (or its directory) of run B")
    compare.add_argument("--out", "-o", help="Write the comparison as JSON")

    validate = subparsers.add_parser("validate-config", help="Validate a configuration")
    add_config_args(validate)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch the subcommand and map errors to exit codes."""
    args = build_parser().parse_args(argv)
    setup_logging(log_level="DEBUG" if args.verbose else "INFO", log_file=args.log_file, force=True)

    try:
        if args.command == "compare":
            return SimulatorCLI.compare(args.report_a, args.report_b, args.out)

        cli = SimulatorCLI(args.config, args.override)
        if args.command == "run":
            return cli.run(seed=args.seed, out=args.out, emit_events=args.emit_events)
        if args.command == "gen-trace":
            values = {name: getattr(args, name) for name in GENERATOR_FLAGS}
            return cli.gen_trace(args.out, args.seed, values)
        return cli.validate_config()

    except SimulatorError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except KeyboardInterrupt:
        logger.error("Interrupted")
        return 1
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
