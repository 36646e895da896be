"""Command-line front end: run the solver pipelines and export CSV/JSON data.

Commands
--------
spectrum-line   non-real eigenvalues on the line for damping x^(2n) + a0
spectrum-strip  eigenvalue grid lambda_{jk} on the strip R x (-ell, ell)
oscillator      anharmonic oscillator eigenvalues mu_k(n)
converge        n -> infinity convergence experiment against the limit spectrum
essential       quasimode residual-ratio decay for lambda <= 0
verify          independent grid-pencil verification (contour count + sigma_min)
figure          plot-ready data for the two spectrum figures

All outputs are deterministic: identical configurations produce byte-identical
files.  Results are written atomically (temp file + rename).  Exit codes:
0 success, 2 parameter error, 3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, convergence, dispersion, oscillator, pencil, quasimodes
from .errors import DampedWaveError, OutputError, ParameterError

__all__ = ["RunConfig", "SpectrumExport", "main", "run", "export_figure"]

OUTDIR_ENV = "DAMPEDWAVE_OUTDIR"
GENERATED_BY = f"dampedwave {__version__}"
#: finite plotting cut for the essential-spectrum semiaxis
DEFAULT_RE_CUT = -10.0
#: sigma_min acceptance threshold, relative to the pencil norm scale
SIGMA_REL_TOL = 1e-4

_COMMANDS = (
    "spectrum-line",
    "spectrum-strip",
    "oscillator",
    "converge",
    "essential",
    "verify",
    "figure",
)


@dataclass(frozen=True)
class RunConfig:
    """One validated CLI invocation: command, typed parameters, output target."""

    command: str
    parameters: dict
    output: Path
    fmt: str

    def __post_init__(self):
        if self.command not in _COMMANDS:
            raise ParameterError(f"unknown command {self.command!r}")
        if self.fmt not in ("csv", "json"):
            raise ParameterError(f"unknown output format {self.fmt!r}")

    def metadata(self) -> dict:
        params = {
            key: (str(value) if isinstance(value, Path) else value)
            for key, value in sorted(self.parameters.items())
        }
        return {
            "generated_by": GENERATED_BY,
            "command": self.command,
            "parameters": params,
            "format": self.fmt,
        }


@dataclass
class SpectrumExport:
    """Eigenvalue rows plus the essential-spectrum marker, ready to write.

    Conjugate pairs are expanded on export: for every stored Im > 0
    representative both (Re, Im) and (Re, -Im) rows are emitted, matching the
    spectral plots.
    """

    rows: list
    essential_re_cut: float = DEFAULT_RE_CUT
    extra_columns: tuple = ()

    COLUMNS = ("branch_index", "re_lambda", "im_lambda", "mu", "residual", "verified")

    def header(self) -> tuple:
        return self.extra_columns + self.COLUMNS

    def expanded_rows(self) -> list:
        out = []
        for row in self.rows:
            out.append(row)
            if row["im_lambda"] > 0:
                mirrored = dict(row)
                mirrored["im_lambda"] = -row["im_lambda"]
                out.append(mirrored)
        return out

    def essential_segment(self) -> dict:
        return {
            "re_cut": self.essential_re_cut,
            "points": [[self.essential_re_cut, 0.0], [0.0, 0.0]],
        }


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _atomic_write(path: Path, text: str):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def write_csv(path: Path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row[col]) for col in header])
    _atomic_write(path, buf.getvalue())


def write_json(path: Path, payload: dict):
    def _default(obj):
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        if isinstance(obj, complex):
            return {"re": obj.real, "im": obj.imag}
        raise TypeError(f"not JSON serializable: {type(obj)}")

    text = json.dumps(payload, indent=2, sort_keys=True, default=_default) + "\n"
    _atomic_write(path, text)


def _branch_row(branch, index_name="branch_index"):
    return {
        index_name: branch.k,
        "re_lambda": branch.lam.real,
        "im_lambda": branch.lam.imag,
        "mu": branch.mu,
        "residual": branch.residual,
        "verified": branch.verified,
    }


# ---------------------------------------------------------------------------
# pipelines


def _line_mu_values(n: int, k_max: int, mu_source: str, tol: float) -> np.ndarray:
    if mu_source == "exact":
        if n != 1:
            raise ParameterError("--mu exact is only available for n=1 (mu_k = 2k+1)")
        return 2.0 * np.arange(k_max + 1) + 1.0
    if mu_source != "numeric":
        raise ParameterError(f"unknown mu source {mu_source!r}; choose exact or numeric")
    return oscillator.anharmonic_eigenvalues(n, k_max, tol=tol).values


def line_spectrum(
    n: int,
    a0: float,
    q0: float,
    k_max: int,
    mu_source: str = "numeric",
    tol: float = 1e-8,
    verify: bool = False,
):
    """All admissible line branches for k = 0..k_max, optionally grid-verified."""
    params = dispersion.PencilParams(n=n, a0=a0, q0=q0)
    mus = _line_mu_values(n, k_max, mu_source, tol)
    branches = []
    for k, mu in enumerate(mus):
        rs = dispersion.roots_all(dispersion.line_char_poly(params, float(mu)))
        for branch in dispersion.physical_roots(rs, params, mu=float(mu), k=k):
            branches.append(branch)
    if verify and branches:
        grid = _verification_pencil(params, branches)
        for branch in branches:
            sigma = pencil.smallest_singular_value(grid, branch.lam)
            scale = grid.norm_scale(branch.lam)
            branch.verified = bool(sigma.value < SIGMA_REL_TOL * scale)
    return branches


def _verification_pencil(params, branches, n_cap=60_000):
    return pencil.assemble_for_eigenvalues(
        params, [b.lam for b in branches], n_cap=n_cap
    )


def strip_spectrum(ell: float, a0: float, q0: float, j_max: int, k_max: int):
    """Admissible strip branches for j = 1..j_max, k = 0..k_max."""
    params = dispersion.StripParams(ell=ell, a0=a0, q0=q0)
    branches = []
    for j in range(1, j_max + 1):
        for k in range(k_max + 1):
            rs = dispersion.roots_all(dispersion.strip_char_poly(params, j, k))
            mu = float(2 * k + 1)
            branches.extend(dispersion.physical_roots(rs, params, mu=mu, k=k, j=j))
    return branches


def _cmd_spectrum_line(config: RunConfig) -> dict:
    p = config.parameters
    branches = line_spectrum(
        p["n"], p["a0"], p["q0"], p["k_max"],
        mu_source=p["mu"], tol=p["tol"], verify=p["verify"],
    )
    export = SpectrumExport(rows=[_branch_row(b) for b in branches],
                            essential_re_cut=p["re_cut"])
    for b in branches:
        print(
            f"k={b.k} lambda = {b.lam.real:+.10f} {b.lam.imag:+.10f}i "
            f"residual={b.residual:.2e} verified={'yes' if b.verified else 'no'}"
        )
    if config.fmt == "csv":
        write_csv(config.output, export.header(), export.expanded_rows())
    else:
        write_json(config.output, {
            "metadata": config.metadata(),
            "eigenvalues": export.expanded_rows(),
            "essential_segment": export.essential_segment(),
        })
    return {"eigenvalues": len(branches)}


def _cmd_spectrum_strip(config: RunConfig) -> dict:
    p = config.parameters
    branches = strip_spectrum(p["ell"], p["a0"], p["q0"], p["j_max"], p["k_max"])
    rows = []
    for b in branches:
        row = {"j": b.j}
        row.update(_branch_row(b))
        rows.append(row)
        print(
            f"j={b.j} k={b.k} lambda = {b.lam.real:+.10f} {b.lam.imag:+.10f}i "
            f"residual={b.residual:.2e}"
        )
    export = SpectrumExport(rows=rows, essential_re_cut=p["re_cut"], extra_columns=("j",))
    if config.fmt == "csv":
        write_csv(config.output, export.header(), export.expanded_rows())
    else:
        write_json(config.output, {
            "metadata": config.metadata(),
            "eigenvalues": export.expanded_rows(),
            "essential_segment": export.essential_segment(),
        })
    return {"eigenvalues": len(branches)}


def _cmd_oscillator(config: RunConfig) -> dict:
    p = config.parameters
    spectrum = oscillator.anharmonic_eigenvalues(p["n"], p["k_max"], tol=p["tol"])
    rows = [
        {"k": k, "mu": float(mu), "error_bound": float(err)}
        for k, (mu, err) in enumerate(zip(spectrum.values, spectrum.error_bounds))
    ]
    for row in rows:
        print(f"k={row['k']} mu = {row['mu']:.12f} +- {row['error_bound']:.2e}")
    if config.fmt == "csv":
        write_csv(config.output, ("k", "mu", "error_bound"), rows)
    else:
        write_json(config.output, {
            "metadata": config.metadata(),
            "converged": spectrum.converged,
            "modes": rows,
        })
    return {"modes": len(rows), "converged": spectrum.converged}


def _cmd_converge(config: RunConfig) -> dict:
    p = config.parameters
    table = convergence.lambda_branch(p["n_list"], p["k"], p["a0"], p["q0"], tol=p["tol"])
    rows = []
    for r in table.rows:
        rows.append({
            "n": r.n,
            "mu": r.mu,
            "re_lambda": r.lam.real if r.lam is not None else float("nan"),
            "im_lambda": r.lam.imag if r.lam is not None else float("nan"),
            "error": r.error if r.error is not None else float("nan"),
            "branch_lost": r.branch_lost,
        })
        print(f"n={r.n} mu={r.mu:.8f} error={rows[-1]['error']:.3e} lost={r.branch_lost}")
    limit_values = [complex(v) for v in table.limit.values]
    payload = {
        "metadata": config.metadata(),
        "limit": {
            "values": [{"re": v.real, "im": v.imag} for v in limit_values],
            "real_pair": table.limit.real_pair,
        },
        "rows": rows,
    }
    if config.fmt == "csv":
        write_csv(config.output, ("n", "mu", "re_lambda", "im_lambda", "error", "branch_lost"), rows)
    else:
        write_json(config.output, payload)
    return {"rows": len(rows)}


_DAMPING_CHOICES = {"x2": 1, "x4": 2, "x6": 3, "x8": 4}


def _cmd_essential(config: RunConfig) -> dict:
    p = config.parameters
    if p["cone"]:
        if p["q"] == "zero":
            q = quasimodes.constant_potential(0.0)
        elif p["q"] == "lorentz":
            q = quasimodes.SampledCoefficient(
                lambda x: 1.0 / (1.0 + x**2), lambda x: -2.0 * x / (1.0 + x**2) ** 2
            )
        else:
            raise ParameterError(f"unknown cone potential {p['q']!r}")
        rows = quasimodes.cone_decay_experiment(q, p["m_list"])
        mode = "cone"
    else:
        if p["lam"] >= 0:
            raise ParameterError("--lam must be negative for the WKB sequence (use --cone for 0)")
        n = _DAMPING_CHOICES.get(p["damping"])
        if n is None:
            raise ParameterError(f"unknown damping {p['damping']!r}; choose from {sorted(_DAMPING_CHOICES)}")
        a = quasimodes.damping_monomial(n, p["a0"])
        q = quasimodes.constant_potential(p["q0"])
        rows = quasimodes.decay_experiment(p["lam"], a, q, p["m_list"])
        mode = "wkb"
    for row in rows:
        print(f"m={row['m']} rho={row['rho']:.5f} ratio={row['ratio']:.6f}")
    payload = {
        "metadata": config.metadata(),
        "mode": mode,
        "rows": rows,
        "slope": quasimodes.loglog_slope([r["m"] for r in rows], [r["ratio"] for r in rows]),
    }
    if config.fmt == "csv":
        header = ("m", "rho", "width", "ratio")
        write_csv(config.output, header, rows)
    else:
        write_json(config.output, payload)
    return {"rows": len(rows)}


def _cmd_verify(config: RunConfig) -> dict:
    p = config.parameters
    params = dispersion.PencilParams(n=p["n"], a0=p["a0"], q0=p["q0"])
    branches = line_spectrum(p["n"], p["a0"], p["q0"], p["k_count"] - 1,
                             mu_source=p["mu"], tol=p["tol"])
    grid = _verification_pencil(params, branches, n_cap=p["grid_n"])
    lams = [b.lam for b in branches]
    margin = 0.3
    rect = pencil.ContourSpec(
        re_min=min(z.real for z in lams) - margin,
        re_max=min(max(z.real for z in lams) + margin, -1e-3),
        im_min=max(min(z.imag for z in lams) - margin, 1e-3),
        im_max=max(z.imag for z in lams) + margin,
        quad_points=p["quad_points"],
    )
    count = pencil.count_eigs_contour(grid, rect)
    inside = [
        b for b in branches
        if rect.re_min < b.lam.real < rect.re_max and rect.im_min < b.lam.imag < rect.im_max
    ]
    checks = []
    for b in branches:
        sigma = pencil.smallest_singular_value(grid, b.lam)
        scale = grid.norm_scale(b.lam)
        off = pencil.smallest_singular_value(grid, b.lam + 0.5)
        ok = sigma.value < SIGMA_REL_TOL * scale and off.value > 10.0 * sigma.value
        checks.append({
            "k": b.k,
            "re_lambda": b.lam.real,
            "im_lambda": b.lam.imag,
            "sigma_min": sigma.value,
            "sigma_threshold": SIGMA_REL_TOL * scale,
            "sigma_off": off.value,
            "passed": bool(ok),
        })
        print(f"k={b.k} sigma_min={sigma.value:.3e} thresh={SIGMA_REL_TOL * scale:.3e} "
              f"off={off.value:.3e} passed={ok}")
    print(f"contour count = {count}, dispersion count inside = {len(inside)}")
    payload = {
        "metadata": config.metadata(),
        "contour": {
            "rectangle": [rect.re_min, rect.re_max, rect.im_min, rect.im_max],
            "quad_points": rect.quad_points,
            "count": count,
        },
        "dispersion_count": len(inside),
        "match": bool(count == len(inside)),
        "sigma_checks": checks,
    }
    if config.fmt == "csv":
        write_csv(config.output,
                  ("k", "re_lambda", "im_lambda", "sigma_min", "sigma_threshold",
                   "sigma_off", "passed"),
                  checks)
    else:
        write_json(config.output, payload)
    return {"count": count, "match": payload["match"]}


def export_figure(which: str, out: Path, fmt: str = "json", re_cut: float = DEFAULT_RE_CUT,
                  metadata: dict | None = None) -> dict:
    """Emit the data behind the two spectrum figures.

    fig-x2: line spectra for n=1, q0=0, a0 in {0, 3}, k = 0..12 (exact mu).
    fig-strip: strip spectrum for ell=1, a0=1, q0=0, j = 1..20, k = 0..4.
    Both carry the essential-segment polyline.
    """
    if which == "fig-x2":
        series = []
        for a0 in (0.0, 3.0):
            branches = line_spectrum(1, a0, 0.0, 12, mu_source="exact")
            rows = []
            for b in branches:
                row = {"a0": a0}
                row.update(_branch_row(b))
                rows.append(row)
            series.append({"a0": a0, "rows": rows})
        export = SpectrumExport(
            rows=[r for s in series for r in s["rows"]],
            essential_re_cut=re_cut,
            extra_columns=("a0",),
        )
    elif which == "fig-strip":
        branches = strip_spectrum(1.0, 1.0, 0.0, 20, 4)
        rows = []
        for b in branches:
            row = {"j": b.j}
            row.update(_branch_row(b))
            rows.append(row)
        export = SpectrumExport(rows=rows, essential_re_cut=re_cut, extra_columns=("j",))
    else:
        raise ParameterError(f"unknown figure {which!r}; choose fig-x2 or fig-strip")

    payload = {
        "metadata": metadata or {"generated_by": GENERATED_BY, "figure": which},
        "eigenvalues": export.expanded_rows(),
        "essential_segment": export.essential_segment(),
    }
    if fmt == "csv":
        write_csv(out, export.header(), export.expanded_rows())
    else:
        write_json(out, payload)
    return {"eigenvalues": len(export.rows)}


def _cmd_figure(config: RunConfig) -> dict:
    result = export_figure(
        config.parameters["which"], config.output, fmt=config.fmt,
        re_cut=config.parameters["re_cut"], metadata=config.metadata(),
    )
    print(f"{config.parameters['which']}: {result['eigenvalues']} eigenvalue rows -> {config.output}")
    return result


_DISPATCH = {
    "spectrum-line": _cmd_spectrum_line,
    "spectrum-strip": _cmd_spectrum_strip,
    "oscillator": _cmd_oscillator,
    "converge": _cmd_converge,
    "essential": _cmd_essential,
    "verify": _cmd_verify,
    "figure": _cmd_figure,
}


def run(config: RunConfig) -> dict:
    """Dispatch a validated configuration to its pipeline."""
    return _DISPATCH[config.command](config)


# ---------------------------------------------------------------------------
# argument parsing


def _int_list(text: str) -> list:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dampedwave",
        description="Spectral solver for the damped wave equation with unbounded damping.",
    )
    parser.add_argument("--version", action="version", version=GENERATED_BY)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_output(sp, default_name):
        sp.add_argument("--out", type=Path, default=None,
                        help=f"output path (default {default_name} in $DAMPEDWAVE_OUTDIR or cwd)")
        sp.add_argument("--format", choices=("csv", "json"), default=None,
                        help="output format; default inferred from --out extension, else json")
        sp.add_argument("--re-cut", type=float, default=DEFAULT_RE_CUT,
                        help="finite plotting cut for the essential segment")

    sp = sub.add_parser("spectrum-line", help="non-real eigenvalues on the line")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--a0", type=float, default=0.0)
    sp.add_argument("--q0", type=float, default=0.0)
    sp.add_argument("--k-max", type=int, default=10, dest="k_max")
    sp.add_argument("--mu", choices=("numeric", "exact"), default="numeric")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--verify", action="store_true")
    add_output(sp, "spectrum_line")

    sp = sub.add_parser("spectrum-strip", help="eigenvalues on the strip")
    sp.add_argument("--ell", type=float, default=1.0)
    sp.add_argument("--a0", type=float, default=1.0)
    sp.add_argument("--q0", type=float, default=0.0)
    sp.add_argument("--j-max", type=int, default=20, dest="j_max")
    sp.add_argument("--k-max", type=int, default=4, dest="k_max")
    add_output(sp, "spectrum_strip")

    sp = sub.add_parser("oscillator", help="anharmonic oscillator eigenvalues")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k-max", type=int, default=4, dest="k_max")
    sp.add_argument("--tol", type=float, default=1e-8)
    add_output(sp, "oscillator")

    sp = sub.add_parser("converge", help="n -> infinity convergence experiment")
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--a0", type=float, default=0.0)
    sp.add_argument("--q0", type=float, default=0.0)
    sp.add_argument("--n-list", type=_int_list, default=[1, 2, 3, 4, 6, 8], dest="n_list")
    sp.add_argument("--tol", type=float, default=1e-8)
    add_output(sp, "converge")

    sp = sub.add_parser("essential", help="quasimode residual decay")
    sp.add_argument("--lam", "--lambda", type=float, default=-1.0, dest="lam")
    sp.add_argument("--damping", default="x2")
    sp.add_argument("--a0", type=float, default=0.0)
    sp.add_argument("--q0", type=float, default=0.0)
    sp.add_argument("--m", type=_int_list, default=[10, 20, 40, 80], dest="m_list")
    sp.add_argument("--cone", action="store_true", help="lambda = 0 cone sequence")
    sp.add_argument("--q", choices=("zero", "lorentz"), default="zero",
                    help="potential for the cone sequence")
    add_output(sp, "essential")

    sp = sub.add_parser("verify", help="grid-pencil verification")
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--a0", type=float, default=0.0)
    sp.add_argument("--q0", type=float, default=0.0)
    sp.add_argument("--k-count", type=int, default=2, dest="k_count")
    sp.add_argument("--mu", choices=("numeric", "exact"), default="numeric")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--grid-n", type=int, default=20_000, dest="grid_n",
                    help="cap on grid points; the grid is sized from the branches")
    sp.add_argument("--quad-points", type=int, default=64, dest="quad_points")
    add_output(sp, "verify")

    sp = sub.add_parser("figure", help="figure reproduction data")
    sp.add_argument("which", choices=("fig-x2", "fig-strip"))
    add_output(sp, "figure")

    return parser


def _resolve_output(args: argparse.Namespace) -> tuple[Path, str]:
    fmt = args.format
    out = args.out
    if out is not None and fmt is None:
        suffix = out.suffix.lower().lstrip(".")
        fmt = suffix if suffix in ("csv", "json") else "json"
    if fmt is None:
        fmt = "json"
    if out is None:
        base = Path(os.environ.get(OUTDIR_ENV, "."))
        name = args.command.replace("-", "_")
        if args.command == "figure":
            name = args.which.replace("-", "_")
        out = base / f"{name}.{fmt}"
    return out, fmt


def build_config(argv) -> RunConfig:
    args = _build_parser().parse_args(argv)
    out, fmt = _resolve_output(args)
    parameters = {
        key: value
        for key, value in vars(args).items()
        if key not in ("command", "out", "format")
    }
    return RunConfig(command=args.command, parameters=parameters, output=out, fmt=fmt)


def main(argv=None) -> int:
    try:
        config = build_config(argv if argv is not None else sys.argv[1:])
        run(config)
    except DampedWaveError as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc)}), file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
