"""Command-line interface: ``modent {spectrum,ensemble,sweep,edges}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 1 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time

from modent.config import COMMANDS, ENSEMBLE_KEYS, OTHER_KEYS, SWEEP_KEYS, RunConfig, load_config_file, parse_config
from modent.eigensolve import diagonalize
from modent.ensemble import run_ensemble
from modent.entanglement import spectrum_concurrence
from modent.errors import ConfigError, ConvergenceFailure
from modent.models import MODEL_KEYS, build_hamiltonian
from modent.output import emit_plot_data, write_curve, write_edges, write_sweep
from modent.sweep import mobility_edges_for, sweep_parameter

log = logging.getLogger("modent")

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

_FLAG_KEYS = sorted((MODEL_KEYS | {"alpha"} | ENSEMBLE_KEYS.keys() | SWEEP_KEYS.keys() | OTHER_KEYS.keys()) - {"command"})


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="modent", description="Mode-entanglement concurrence of 1D tight-binding models.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    helps = {
        "spectrum": "per-state concurrence of one realization",
        "ensemble": "energy-binned concurrence averaged over disorder",
        "sweep": "global concurrence against a control parameter",
        "edges": "mobility edges from an ensemble curve",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="TOML/JSON config, or an output file to re-run from its provenance")
        for key in _FLAG_KEYS:
            p.add_argument(f"--{key}", dest=f"key_{key}", metavar="VALUE", default=None)
    return parser


def resolve(argv=None) -> tuple[RunConfig, bool]:
    args = build_parser().parse_args(argv)
    if args.command is None:
        raise ConfigError("a command is required: " + ", ".join(COMMANDS))
    data = load_config_file(args.config) if args.config else {}
    for key in _FLAG_KEYS:
        value = getattr(args, f"key_{key}")
        if value is not None:
            data[key] = value
    return parse_config(data, args.command), args.verbose


def _print_header(cfg: RunConfig) -> None:
    print("# modent run configuration (defaults resolved)", file=sys.stderr)
    for key, value in cfg.resolved().items():
        print(f"#   {key} = {json.dumps(value)}", file=sys.stderr)


def execute(cfg: RunConfig) -> None:
    prov = cfg.provenance()
    if cfg.command == "spectrum":
        report = spectrum_concurrence(diagonalize(build_hamiltonian(cfg.model), cfg.ensemble.solver))
        write_curve(report, cfg.output, cfg.format, prov)
        if cfg.plot_dir:
            emit_plot_data(report, cfg.plot_dir, prov)
        log.info("N<C> = %.6g", report.scaled_global)
    elif cfg.command in ("ensemble", "edges"):
        curve, stats = run_ensemble(cfg.ensemble, workers=cfg.workers)
        if cfg.command == "ensemble":
            write_curve(curve, cfg.output, cfg.format, prov, stats)
        else:
            edges = mobility_edges_for(cfg.ensemble, curve, cfg.threshold)
            write_edges(edges, cfg.output, cfg.format, prov)
            log.info("edges: lower=%s upper=%s", edges.lower_edge, edges.upper_edge)
        if cfg.plot_dir:
            emit_plot_data(curve, cfg.plot_dir, prov)
    else:
        sw = cfg.sweep
        t0 = time.time()

        def progress(n, value, stats):
            log.info("N=%d %s=%g  N<C>=%.5f +- %.5f  (%.0fs)", n, sw.parameter, value, stats.mean, stats.stderr, time.time() - t0)

        result = sweep_parameter(cfg.ensemble, sw.parameter, sw.grid, sw.sizes, sw.samples, cfg.workers, progress)
        write_sweep(result, cfg.output, cfg.format, prov)
        if cfg.plot_dir:
            emit_plot_data(result, cfg.plot_dir, prov)
        for n in result.sizes:
            est = result.transition_estimates[n]
            if est is None:
                log.info("N=%d: no transition", n)
            else:
                log.info("N=%d: transition at %s=%.4g (%s)", n, sw.parameter, est.location, est.method.value)


def main(argv=None) -> int:
    try:
        cfg, verbose = resolve(argv)
    except ConfigError as exc:
        print(f"modent: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    _print_header(cfg)
    try:
        execute(cfg)
    except ConfigError as exc:
        print(f"modent: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceFailure, ArithmeticError) as exc:
        print(f"modent: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"modent: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
