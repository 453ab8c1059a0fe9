"""CSV/JSON writers and plot-data emission.

Every file carries its provenance: CSV files start with ``#`` comment lines
holding the package version, RNG version and the resolved config as one line
of JSON; JSON files carry the same under ``metadata``. Floats are written with
17 significant digits so values read back bit-for-bit.
"""

from __future__ import annotations

import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from modent.config import CONFIG_PREFIX
from modent.ensemble import BinnedCurve, GlobalStats
from modent.entanglement import ConcurrenceReport
from modent.models import RNG_VERSION
from modent.sweep import MobilityEdgeEstimate, SweepResult, TransitionEstimate

BINNED_COLUMNS = ("energy", "scaled_concurrence_mean", "stderr", "count")
STATE_COLUMNS = ("index", "energy", "state_concurrence", "scaled_concurrence", "participation_ratio")
EDGE_COLUMNS = ("N", "lower_edge", "upper_edge", "threshold", "advisory")


def sweep_columns(parameter: str) -> tuple[str, ...]:
    return (parameter, "N", "scaled_global_concurrence", "stderr")


def _version() -> str:
    from modent import __version__

    return __version__


def metadata(config: dict[str, Any] | None) -> dict[str, Any]:
    return {"package": "modent", "version": _version(), "rng": RNG_VERSION, "config": config or {}}


def fmt(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return format(x, ".17g")


def _jsonable(x: Any) -> Any:
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return None if math.isnan(x) else x
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _header(config) -> list[str]:
    meta = metadata(config)
    return [
        f"# {meta['package']} {meta['version']}",
        f"# rng: {meta['rng']}",
        CONFIG_PREFIX + json.dumps(meta["config"], sort_keys=True, separators=(",", ":")),
    ]


def render_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]], config=None, footer: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in _header(config):
        buf.write(line + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    for line in footer:
        buf.write("# " + line + "\n")
    return buf.getvalue()


def render_json(columns: Sequence[str], rows: Iterable[Sequence[Any]], config=None, **extra) -> str:
    doc = {
        "metadata": metadata(config),
        "columns": list(columns),
        "records": [{c: _jsonable(v) for c, v in zip(columns, row)} for row in rows],
    }
    doc.update({k: v for k, v in extra.items() if v is not None})
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def _write(text: str, path: str | Path) -> None:
    if str(path) == "-":
        sys.stdout.write(text)
        return
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None


def binned_rows(curve: BinnedCurve):
    for e, m, s, c in zip(curve.bin_centers, curve.mean_scaled_concurrence, curve.stderr, curve.counts):
        if c > 0:
            yield (float(e), float(m), float(s), int(c))


def state_rows(report: ConcurrenceReport):
    for i, (e, c, s, pr) in enumerate(zip(report.energies, report.state_concurrence, report.scaled, report.participation_ratio)):
        yield (i, float(e), float(c), float(s), float(pr))


def sweep_rows(result: SweepResult):
    for n in sorted(result.sizes):
        for x, m, s in zip(result.grid, result.means[n], result.stderrs[n]):
            yield (float(x), n, float(m), float(s))


def _estimate_dict(est: TransitionEstimate | None):
    if est is None:
        return None
    return {"location": float(est.location), "method": est.method.value, "uncertainty": float(est.uncertainty), "max_slope": float(est.max_slope)}


def transitions_dict(result: SweepResult) -> dict[str, Any]:
    out = {}
    for n in sorted(result.sizes):
        out[str(n)] = {
            "headline": _estimate_dict(result.transition_estimates.get(n)),
            "estimates": {m.value: _estimate_dict(e) for m, e in result.estimates.get(n, {}).items()},
        }
    return out


def _transition_footer(result: SweepResult) -> list[str]:
    lines = []
    for n in sorted(result.sizes):
        est = result.transition_estimates.get(n)
        if est is None:
            lines.append(f"transition N={n} none")
        else:
            lines.append(f"transition N={n} location={fmt(est.location)} method={est.method.value} uncertainty={fmt(est.uncertainty)} max_slope={fmt(est.max_slope)}")
    return lines


def _global_footer(stats: GlobalStats | None) -> list[str]:
    if stats is None:
        return []
    return [f"global scaled_concurrence={fmt(stats.mean)} stderr={fmt(stats.stderr)} samples={stats.samples}"]


def write_curve(curve: BinnedCurve | ConcurrenceReport, path, file_format: str = "csv", config=None, stats: GlobalStats | None = None) -> None:
    """Write a binned ensemble curve or a per-state report."""
    if isinstance(curve, ConcurrenceReport):
        columns, rows = STATE_COLUMNS, list(state_rows(curve))
        glob = {"scaled_concurrence": curve.scaled_global, "state_concurrence": curve.global_concurrence, "M": curve.M}
        footer = [f"global scaled_concurrence={fmt(curve.scaled_global)} M={curve.M}"]
    else:
        columns, rows = BINNED_COLUMNS, list(binned_rows(curve))
        glob = None if stats is None else {"scaled_concurrence": stats.mean, "stderr": stats.stderr, "samples": stats.samples}
        footer = _global_footer(stats)
        if curve.out_of_range:
            footer.append(f"out_of_range {curve.out_of_range}")
    if file_format == "json":
        text = render_json(columns, rows, config, **{"global": glob})
    else:
        text = render_csv(columns, rows, config, footer)
    _write(text, path)


def write_sweep(result: SweepResult, path, file_format: str = "csv", config=None) -> None:
    columns = sweep_columns(result.parameter)
    rows = list(sweep_rows(result))
    if file_format == "json":
        text = render_json(columns, rows, config, transitions=transitions_dict(result))
    else:
        text = render_csv(columns, rows, config, _transition_footer(result))
    _write(text, path)


def write_edges(edges: MobilityEdgeEstimate, path, file_format: str = "csv", config=None) -> None:
    row = (edges.N, edges.lower_edge, edges.upper_edge, edges.threshold, edges.advisory)
    if file_format == "json":
        text = render_json(EDGE_COLUMNS, [row], config)
    else:
        text = render_csv(EDGE_COLUMNS, [row], config)
    _write(text, path)


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Header and raw string rows of a CSV written by this module."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln and not ln.startswith("#")]
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


def emit_plot_data(result, directory, config=None) -> list[Path]:
    """Whitespace-delimited series files, one per system size, plus ``manifest.json``.

    Series are listed in ascending N, which matches the top-to-bottom order of
    the curves when larger systems give smaller concurrence.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    series = []
    if isinstance(result, SweepResult):
        kind, columns = "sweep", [result.parameter, "scaled_global_concurrence", "stderr"]
        for n in sorted(result.sizes):
            rows = zip(result.grid, result.means[n], result.stderrs[n])
            series.append((n, rows))
    elif isinstance(result, BinnedCurve):
        kind, columns = "binned_curve", ["energy", "scaled_concurrence_mean", "stderr", "count"]
        series.append((result.N, binned_rows(result)))
    elif isinstance(result, ConcurrenceReport):
        kind, columns = "spectrum", ["energy", "scaled_concurrence", "participation_ratio"]
        series.append((result.N, zip(result.energies, result.scaled, result.participation_ratio)))
    else:
        raise TypeError(f"cannot emit plot data for {type(result).__name__}")

    written, entries = [], []
    header = _header(config)
    for n, rows in series:
        name = f"series_N{n}.dat"
        lines = header + ["# " + " ".join(columns)]
        lines += [" ".join(fmt(v) for v in row) for row in rows]
        _write("\n".join(lines) + "\n", directory / name)
        written.append(directory / name)
        entries.append({"N": n, "file": name})
    manifest = {"metadata": metadata(config), "kind": kind, "columns": columns, "series": entries}
    _write(json.dumps(manifest, indent=1) + "\n", directory / "manifest.json")
    written.append(directory / "manifest.json")
    return written
