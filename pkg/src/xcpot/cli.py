"""Command-line front end: ``xcpot --Z 2 --N 2 --method slater --out run/``.

Settings are layered: built-in defaults, then ``$XCPOT_GRID_N`` for the
grid size, then a ``--config`` file of ``key = value`` lines (``#``
starts a comment), then explicit flags.

Exit status is 0 when the SCF converged, 2 when it did not (outputs are
still written) and 1 on any error, including bad usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .energetics import bound_checks
from .errors import InvariantBreach, UsageError, XcpotError
from .grid import DEFAULT_RMAX, default_grid_size
from .oep import oep_residual, wronskian_residual
from .orbitals import LocalPotential
from .potentials import ceda_residual, kli_equation_residual, slater_potential
from .scf import DEFAULT_ETA_SCHEDULE, METHODS, ScfConfig, ScfReport, run_scf

log = logging.getLogger("xcpot")


@dataclass(frozen=True)
class RunSpec:
    """A fully resolved command-line request."""

    config: ScfConfig
    out: Path | None = None
    diagnostics: bool = False
    seed: int = 0
    verbose: bool = False


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage().strip()}")


def _eta_list(text):
    try:
        return tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad eta schedule {text!r}") from exc


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


# flag name -> (converter, ScfConfig/RunSpec field)
_OPTIONS = {
    "Z": (float, "Z"),
    "N": (int, "N"),
    "method": (str, "method"),
    "grid-n": (int, "grid_n"),
    "rmax": (float, "r_max"),
    "mix": (float, "theta"),
    "tol": (float, "tol_density"),
    "eta-schedule": (_eta_list, "eta_schedule"),
    "gauge": (str, "gauge"),
    "max-iter": (int, "max_iter"),
    "out": (Path, "out"),
    "diagnostics": (_bool, "diagnostics"),
    "seed": (int, "seed"),
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="xcpot",
        description="Hartree-Fock and local exchange potentials for radial atoms.",
    )
    p.add_argument("--config", type=Path, help="key=value settings file")
    p.add_argument("--Z", type=float, help="nuclear charge")
    p.add_argument("--N", type=int, help="number of electrons (N <= Z)")
    p.add_argument("--method", choices=METHODS, help="exchange model")
    p.add_argument("--grid-n", type=int, help="number of grid points (default $XCPOT_GRID_N or 2000)")
    p.add_argument("--rmax", type=float, help=f"outer radius in bohr (default {DEFAULT_RMAX:g})")
    p.add_argument("--mix", type=float, help="mixing parameter theta in (0, 1] (default 0.3)")
    p.add_argument("--tol", type=float, help="L1 density tolerance (default 1e-8)")
    p.add_argument("--eta-schedule", type=_eta_list, help="comma list ending in 0 (Slater only)")
    p.add_argument("--gauge", choices=("homo", "trace", "raw"), help="constant-fixing convention")
    p.add_argument("--max-iter", type=int, help="iteration cap per stage (default 300)")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--diagnostics", action="store_const", const=True, help="write diagnostics.json")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("-v", "--verbose", action="store_true", help="log SCF progress")
    return p


def read_config(path: Path) -> dict:
    """Parse a flat ``key = value`` file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("_", "-")
        if key.lower() in ("z", "n"):
            key = key.upper()
        if key not in _OPTIONS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        conv = _OPTIONS[key][0]
        try:
            values[key] = conv(val)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
    return values


def parse_args(argv=None) -> RunSpec:
    """Resolve command-line arguments into a :class:`RunSpec`.

    Raises
    ------
    UsageError
        Unknown flags, invalid values, or inconsistent settings such as
        ``N > Z``.
    """
    ns = build_parser().parse_args(argv)
    merged = {"grid-n": default_grid_size()}
    if ns.config is not None:
        merged.update(read_config(ns.config))
    for key in _OPTIONS:
        val = getattr(ns, key.replace("-", "_"))
        if val is not None:
            merged[key] = val
    for key in ("Z", "N"):
        if key not in merged:
            raise UsageError(f"--{key} is required")
    if merged.get("method", "slater") not in METHODS:
        raise UsageError(f"unknown method {merged['method']!r}; valid methods: {', '.join(METHODS)}")
    cfg_kwargs = {
        field: merged[key]
        for key, (_, field) in _OPTIONS.items()
        if key in merged and field not in ("out", "diagnostics", "seed")
    }
    cfg_kwargs.setdefault("eta_schedule", DEFAULT_ETA_SCHEDULE)
    try:
        cfg = ScfConfig(**cfg_kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return RunSpec(
        config=cfg,
        out=merged.get("out"),
        diagnostics=bool(merged.get("diagnostics", False)),
        seed=int(merged.get("seed", 0)),
        verbose=bool(ns.verbose),
    )


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


def _num(x):
    x = float(x)
    if not math.isfinite(x):
        raise InvariantBreach(f"non-finite value {x} in output")
    return x


def _floats(a):
    return [_num(x) for x in np.ravel(a)]


def _report_exchange(report: ScfReport) -> LocalPotential:
    if report.exchange_potential is not None:
        return report.exchange_potential
    # Hartree-Fock has no local exchange; report the Slater potential of its orbitals
    return slater_potential(report.orbitals, 0.0, report.exchange)


def build_summary(report: ScfReport) -> dict:
    """Summary dictionary; raises :class:`InvariantBreach` on inconsistent data."""
    cfg = report.config
    report.energy.check()
    eps = np.asarray(report.eigenvalues)
    if np.any(np.diff(eps) < 0):
        raise InvariantBreach("eigenvalues are not ascending")
    if report.gap < 0:
        raise InvariantBreach("negative aufbau gap")
    if report.converged and report.history and report.history[-1] > cfg.tol_density:
        raise InvariantBreach("converged flag set above tolerance")
    grid = report.grid
    vx = _report_exchange(report)
    return {
        "method": cfg.method,
        "Z": _num(cfg.Z),
        "N": int(cfg.N),
        "converged": bool(report.converged),
        "message": report.message,
        "iterations": int(report.iterations),
        "stages": [
            {"eta": _num(s.eta), "iterations": int(s.iterations), "converged": bool(s.converged)}
            for s in report.stages
        ],
        "energy": {k: _num(v) for k, v in report.energy.as_dict().items()},
        "eigenvalues": _floats(eps),
        "occupied": int(cfg.N),
        "gap": _num(report.gap),
        "history": _floats(report.history),
        "gauge": cfg.gauge if cfg.method in ("kli", "elp") else "none",
        "tail_coefficient": _num(vx.c_tail),
        "settings": {
            "theta": _num(cfg.theta),
            "tol_density": _num(cfg.tol_density),
            "max_iter": int(cfg.max_iter),
            "eta_schedule": _floats(cfg.eta_schedule),
        },
        "grid": {
            "kind": grid.kind,
            "n": int(grid.n),
            "r_min": _num(grid.r[0]),
            "r_max": _num(grid.r_max),
        },
    }


def build_diagnostics(report: ScfReport) -> dict:
    orb = report.orbitals
    out = {"bounds": {k: (v if isinstance(v, bool) else _num(v))
                      for k, v in bound_checks(orb, report.config.Z).as_dict().items()}}
    if orb.n_orbitals > 1:
        out["wronskian"] = _floats(wronskian_residual(orb))
    else:
        out["wronskian"] = []
    if report.config.method == "hf":
        out["oep_residual"] = None
        out["self_consistency"] = None
        return out
    vxw = LocalPotential(orb.grid, report.exchange_part)
    res = oep_residual(orb, report.potential, vxw, report.exchange)
    out["oep_residual"] = {
        k: v if isinstance(v, int) else _floats(v) if isinstance(v, list) else _num(v)
        for k, v in res.as_dict().items()
    }
    if report.config.method == "kli":
        eq = kli_equation_residual(orb, vxw, report.exchange)
    elif report.config.method == "elp":
        eq = ceda_residual(orb, vxw, report.exchange)
    else:
        eq = orb.density * (vxw.values - report.exchange_potential.values)
    out["self_consistency"] = _num(np.max(np.abs(eq)))
    return out


def _csv(path: Path, header, columns):
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(repr(_num(x)) for x in row))
    path.write_text("\n".join(lines) + "\n")


def write_outputs(report: ScfReport, out: Path, diagnostics: bool = False):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    summary = build_summary(report)
    diag = build_diagnostics(report) if diagnostics else None
    grid = report.grid
    vx = _report_exchange(report).values
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    _csv(
        out / "potential.csv",
        ["r", "v_nuc", "v_H", "v_x", "r*v_x"],
        [grid.r, report.nuclear, report.hartree, vx, grid.r * vx],
    )
    _csv(
        out / "orbitals.csv",
        ["r"] + [f"u_{i + 1}" for i in range(report.orbitals.n_orbitals)],
        [grid.r, *report.orbitals.u],
    )
    if diag is not None:
        (out / "diagnostics.json").write_text(json.dumps(diag, indent=2) + "\n")
    return summary


def run(spec: RunSpec) -> int:
    """Execute one calculation; returns the process exit status."""
    try:
        report = run_scf(spec.config, callback=_progress if spec.verbose else None)
        if spec.out is not None:
            write_outputs(report, spec.out, spec.diagnostics)
        else:
            summary = build_summary(report)
            print(json.dumps({k: summary[k] for k in ("method", "converged", "energy", "gap")}, indent=2))
    except (XcpotError, ValueError, ArithmeticError, OSError) as exc:
        print(f"xcpot: error: {exc}", file=sys.stderr)
        return 1
    if not report.converged:
        print(f"xcpot: {report.message}", file=sys.stderr)
        return 2
    return 0


def _progress(eta, iteration, residual):
    log.info("eta=%g iter=%d drho=%.3e", eta, iteration, residual)


def main(argv=None) -> int:
    try:
        spec = parse_args(argv)
    except (XcpotError, ValueError) as exc:
        print(f"xcpot: error: {exc}", file=sys.stderr)
        return 1
    if spec.verbose:
        logging.basicConfig(level=logging.INFO, format="%(message)s")
    return run(spec)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
