"""Deterministic command-line front end.

Subcommands compute geometry tables, potential grids, band structures,
gap scans, the straight-tube cross-check, and the self-verification
suite, writing CSV/JSON artifacts into an output directory.

Configuration is a flat ``key = value`` file with ``#`` comments; every
key has a default and command-line flags override file values.  All
numbers are written in lower-case scientific notation with 17
significant digits, files are written atomically (temp file + rename),
and repeated runs with the same configuration produce byte-identical
output.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 eigensolver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .geometry import (
    HelixSpec,
    grid_nodes,
    metric_h,
    principal_curvatures,
    surface_point,
    v_curv,
)
from .operators import effective_params, v_eff, v_kin
from .bloch import (
    K1,
    BlochVector,
    _u_squared,
    cylinder_limit_energies,
    two_band_gap,
)
from .oracle import (
    ConvergenceFailure,
    assemble_full,
    band_sweep,
    eigensolve,
    gap_perturbed,
)
from . import verify as _verify

HBAR = 1.054571817e-34  # J s

NATURAL = "NATURAL"
PHYSICAL = "PHYSICAL"

_DEFAULT_EPS_SWEEP = (0.01, 0.02, 0.03, 0.04, 0.05)


class ConfigError(ValueError):
    """Invalid configuration file, flag value, or parameter combination."""


@dataclass
class RunConfig:
    """Validated run parameters shared by every subcommand."""

    kappa: float = 1.0
    tau: float = 1.0
    rho0: float = 0.1
    s0: float = 0.0
    n_s: int = 64
    n_phi: int = 64
    n_harmonics: int = 7
    kpath_start: float = 0.0
    kpath_end: float | None = None  # None = zone boundary -|tau|/2
    kpath_count: int = 101
    transverse_n: int = 0
    eps_sweep: tuple = _DEFAULT_EPS_SWEEP
    out_dir: str = "out"
    units: str = "natural"
    vkin_offset: float = 0.0

    def validate(self) -> None:
        self.energy_scale()  # parses the units string
        if self.n_s < 4 or self.n_phi < 4:
            raise ConfigError("grid must be at least 4x4")
        if self.n_harmonics < 3:
            raise ConfigError("n_harmonics must be >= 3")
        if self.kpath_count < 1:
            raise ConfigError("k-path needs at least one point")
        if self.tau == 0.0:
            raise ConfigError(
                "tau = 0 has no longitudinal period; the command-line "
                "workflows require tau != 0"
            )
        try:
            self.spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        half = abs(self.tau) / 2 * (1 + 1e-12)
        for k in (self.kpath_start, self.resolved_kpath_end()):
            if abs(k) > half:
                raise ConfigError(
                    f"k-path endpoint {k} lies outside the zone "
                    f"[-{abs(self.tau) / 2}, {abs(self.tau) / 2})"
                )
        for eps in self.eps_sweep:
            if not 0.0 <= eps < 1.0:
                raise ConfigError(f"sweep epsilon {eps} outside [0, 1)")
        if not np.isfinite(self.vkin_offset):
            raise ConfigError("vkin_offset must be finite")

    def spec(self) -> HelixSpec:
        return HelixSpec(
            kappa=self.kappa, tau=self.tau, rho0=self.rho0, s0=self.s0
        )

    def resolved_kpath_end(self) -> float:
        if self.kpath_end is None:
            return -abs(self.tau) / 2
        return self.kpath_end

    def kpath_points(self) -> list[BlochVector]:
        ks = np.linspace(
            self.kpath_start, self.resolved_kpath_end(), self.kpath_count
        )
        return [BlochVector(float(k), self.transverse_n) for k in ks]

    def energy_scale(self) -> float:
        """1 in natural units; hbar^2/(2 mu) when units = physical:<mu>."""
        u = self.units.strip().lower()
        if u == "natural":
            return 1.0
        if u.startswith("physical:"):
            try:
                mu = float(u.split(":", 1)[1])
            except ValueError as exc:
                raise ConfigError(f"bad mass in units value {self.units!r}") from exc
            if not (mu > 0 and np.isfinite(mu)):
                raise ConfigError("physical units need a positive finite mass")
            return HBAR**2 / (2.0 * mu)
        raise ConfigError(
            f"units must be 'natural' or 'physical:<mu>', got {self.units!r}"
        )


# --------------------------------------------------------------------------
# configuration sources


def _parse_int(v: str) -> int:
    return int(v, 10)


def _parse_eps_list(v: str) -> tuple:
    items = [p.strip() for p in v.split(",") if p.strip()]
    if not items:
        raise ValueError("empty epsilon sweep")
    return tuple(float(p) for p in items)


_CONVERTERS = {
    "kappa": float,
    "tau": float,
    "rho0": float,
    "s0": float,
    "n_s": _parse_int,
    "n_phi": _parse_int,
    "n_harmonics": _parse_int,
    "kpath_start": float,
    "kpath_end": float,
    "kpath_count": _parse_int,
    "transverse_n": _parse_int,
    "eps_sweep": _parse_eps_list,
    "out_dir": str,
    "units": str,
    "vkin_offset": float,
}


def parse_config_file(path: str) -> dict:
    """Flat key = value lines, # comments, unknown keys rejected."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if not sep or not key or not val:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        if key not in _CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _CONVERTERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def _parse_grid_flag(v: str) -> tuple[int, int]:
    parts = v.lower().split("x")
    if len(parts) != 2:
        raise ConfigError(f"--grid expects NxM, got {v!r}")
    try:
        return _parse_int(parts[0]), _parse_int(parts[1])
    except ValueError as exc:
        raise ConfigError(f"--grid expects NxM, got {v!r}") from exc


def _parse_kpath_flag(v: str) -> tuple[float, float, int]:
    parts = v.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--kpath expects start:end:count, got {v!r}")
    try:
        return float(parts[0]), float(parts[1]), _parse_int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"--kpath expects start:end:count, got {v!r}") from exc


def build_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then config file values, then flag overrides."""
    cfg = RunConfig()
    if args.config is not None:
        cfg = replace(cfg, **parse_config_file(args.config))
    updates = {}
    for key in ("kappa", "tau", "rho0", "transverse_n"):
        val = getattr(args, key)
        if val is not None:
            updates[key] = val
    if args.harmonics is not None:
        updates["n_harmonics"] = args.harmonics
    if args.grid is not None:
        updates["n_s"], updates["n_phi"] = _parse_grid_flag(args.grid)
    if args.kpath is not None:
        start, end, count = _parse_kpath_flag(args.kpath)
        updates.update(kpath_start=start, kpath_end=end, kpath_count=count)
    if args.eps_sweep is not None:
        try:
            updates["eps_sweep"] = _parse_eps_list(args.eps_sweep)
        except ValueError as exc:
            raise ConfigError(f"bad --eps-sweep value: {exc}") from exc
    if args.out is not None:
        updates["out_dir"] = args.out
    if args.units is not None:
        updates["units"] = args.units
    cfg = replace(cfg, **updates)
    cfg.validate()
    return cfg


# --------------------------------------------------------------------------
# deterministic output


def fmt(x: float) -> str:
    return f"{float(x):.16e}"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: str, rows: list[list[str]]) -> None:
    lines = [header]
    lines.extend(",".join(r) for r in rows)
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path: Path, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# subcommands


def cmd_geometry(cfg: RunConfig) -> int:
    spec = cfg.spec()
    out = Path(cfg.out_dir)
    s_nodes, varphi_nodes = grid_nodes(spec, cfg.n_s, cfg.n_phi)
    rows = []
    for s in s_nodes:
        for varphi in varphi_nodes:
            phi = varphi / spec.rho0
            p = surface_point(spec, s, phi)
            k1, k2, m, gauss = principal_curvatures(spec, s, phi)
            rows.append(
                [
                    fmt(s), fmt(phi),
                    fmt(p[0]), fmt(p[1]), fmt(p[2]),
                    fmt(metric_h(spec, s, phi)),
                    fmt(k1), fmt(k2), fmt(m), fmt(gauss),
                ]
            )
    write_csv(out / "geometry.csv", "s,phi,x,y,z,h,kappa1,kappa2,M,K", rows)
    print(f"wrote {out / 'geometry.csv'} ({len(rows)} rows)")
    return 0


def cmd_potential(cfg: RunConfig) -> int:
    spec = cfg.spec()
    out = Path(cfg.out_dir)
    scale = cfg.energy_scale()
    s_nodes, varphi_nodes = grid_nodes(spec, cfg.n_s, cfg.n_phi)
    S = s_nodes[:, None]
    P = (varphi_nodes / spec.rho0)[None, :]
    vc = np.broadcast_to(v_curv(spec, S, P), (cfg.n_s, cfg.n_phi))
    vk = np.broadcast_to(v_kin(spec, S, P), (cfg.n_s, cfg.n_phi))
    ve = np.broadcast_to(v_eff(spec, S, P), (cfg.n_s, cfg.n_phi))
    rows = []
    for i, s in enumerate(s_nodes):
        for j, varphi in enumerate(varphi_nodes):
            rows.append(
                [
                    fmt(s), fmt(varphi / spec.rho0),
                    fmt(scale * vc[i, j]), fmt(scale * vk[i, j]),
                    fmt(scale * ve[i, j]),
                ]
            )
    write_csv(out / "potential.csv", "s,phi,v_curv,v_kin,v_eff", rows)
    print(f"wrote {out / 'potential.csv'} ({len(rows)} rows)")
    return 0


def cmd_bands(cfg: RunConfig) -> int:
    spec = cfg.spec()
    out = Path(cfg.out_dir)
    scale = cfg.energy_scale()
    path = cfg.kpath_points()
    tb = band_sweep(spec, path, "TWO_BAND")
    pert = band_sweep(
        spec, path, "ORACLE_PERTURBED", n_harmonics=cfg.n_harmonics
    )
    full = band_sweep(
        spec, path, "ORACLE_FULL", n_s=cfg.n_s, n_phi=cfg.n_phi
    )
    rows = []
    for i, k in enumerate(path):
        rows.append(
            [fmt(k.k_s), str(cfg.transverse_n)]
            + [fmt(scale * e) for e in tb.energies[i]]
            + [fmt(scale * e) for e in pert.energies[i]]
            + [fmt(scale * e) for e in full.energies[i]]
        )
    write_csv(
        out / "bands.csv",
        "k_s,n,E_twoband_1,E_twoband_2,E_oracle_pert_1,E_oracle_pert_2,"
        "E_oracle_full_1,E_oracle_full_2",
        rows,
    )
    u2_negative = any(
        _u_squared(spec, k.components(spec), K1) < 0.0 for k in path
    )
    summary = {
        "a": effective_params(spec).a,
        "epsilon": spec.epsilon,
        "units": cfg.units,
        "grid": [cfg.n_s, cfg.n_phi],
        "n_harmonics": cfg.n_harmonics,
        "kpath": {
            "start": cfg.kpath_start,
            "end": cfg.resolved_kpath_end(),
            "count": cfg.kpath_count,
            "transverse_n": cfg.transverse_n,
        },
        "gap_twoband": scale * two_band_gap(spec),
        "gap_oracle_pert": scale * gap_perturbed(spec, n_harmonics=cfg.n_harmonics),
        "agreement": {
            "max_abs_diff_twoband_vs_pert": scale
            * float(np.max(np.abs(tb.energies - pert.energies[:, :2]))),
            "max_abs_diff_pert_vs_full_lowest_band": scale
            * float(np.max(np.abs(pert.energies[:, 0] - full.energies[:, 0]))),
            "mean_offset_pert_minus_full_lowest_band": scale
            * float(np.mean(pert.energies[:, 0] - full.energies[:, 0])),
        },
        "u_squared_negative_on_path": bool(u2_negative),
    }
    write_json(out / "summary.json", summary)
    print(f"wrote {out / 'bands.csv'} ({len(rows)} rows) and {out / 'summary.json'}")
    return 0


def _origin_fit(xs: np.ndarray, gs: np.ndarray) -> tuple[float, float]:
    sxx = float(xs @ xs)
    slope = float(xs @ gs) / sxx if sxx > 0 else 0.0
    ss_res = float(np.sum((gs - slope * xs) ** 2))
    ss_tot = float(np.sum((gs - gs.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return slope, r2


def cmd_gap_scan(cfg: RunConfig) -> int:
    if not cfg.eps_sweep:
        raise ConfigError("gap-scan needs a non-empty epsilon sweep")
    if any(eps > 0 for eps in cfg.eps_sweep) and cfg.kappa <= 0.0:
        raise ConfigError("a positive sweep epsilon requires kappa > 0")
    out = Path(cfg.out_dir)
    scale = cfg.energy_scale()
    rows = []
    gaps_tb, gaps_or = [], []
    for eps in cfg.eps_sweep:
        if eps == 0.0:
            spec_e = HelixSpec(
                kappa=0.0, tau=cfg.tau, rho0=cfg.rho0, s0=cfg.s0
            )
        else:
            # epsilon = rho0*kappa: sweep the tube radius at fixed curve shape
            spec_e = HelixSpec(
                kappa=cfg.kappa, tau=cfg.tau, rho0=eps / cfg.kappa, s0=cfg.s0
            )
        gt = two_band_gap(spec_e)
        go = gap_perturbed(spec_e, n_harmonics=cfg.n_harmonics)
        denom = eps * cfg.kappa**2 / 4
        ratio = go / denom if denom > 0 else 0.0
        gaps_tb.append(gt)
        gaps_or.append(go)
        rows.append([fmt(eps), fmt(scale * gt), fmt(scale * go), fmt(ratio)])
    write_csv(
        out / "gapscan.csv",
        "epsilon,gap_twoband,gap_oracle,ratio_to_eps_kappa2_over_4",
        rows,
    )
    xs = np.asarray(cfg.eps_sweep, dtype=float)
    slope_tb, r2_tb = _origin_fit(xs, np.asarray(gaps_tb))
    slope_or, r2_or = _origin_fit(xs, np.asarray(gaps_or))
    write_json(
        out / "gapscan.json",
        {
            "slope_twoband": scale * slope_tb,
            "slope_oracle": scale * slope_or,
            "r_squared_twoband": r2_tb,
            "r_squared_oracle": r2_or,
            "eps": list(xs),
            "units": cfg.units,
        },
    )
    print(
        f"wrote {out / 'gapscan.csv'} ({len(rows)} rows) and {out / 'gapscan.json'}"
    )
    return 0


def cmd_cylinder_check(cfg: RunConfig) -> int:
    """Straight-tube oracle vs the separable closed form, one Richardson step."""
    spec0 = HelixSpec(kappa=0.0, tau=cfg.tau, rho0=cfg.rho0, s0=cfg.s0)
    if cfg.n_s < 8 or cfg.n_phi < 8:
        raise ConfigError("cylinder-check needs a grid of at least 8x8")
    n_lowest = 7
    coarse = eigensolve(
        assemble_full(spec0, BlochVector(0.0, 0), cfg.n_s // 2, cfg.n_phi // 2),
        n_lowest,
    ).eigenvalues
    fine = eigensolve(
        assemble_full(spec0, BlochVector(0.0, 0), cfg.n_s, cfg.n_phi), n_lowest
    ).eigenvalues
    rich = (4.0 * fine - coarse) / 3.0
    period = spec0.s_period
    exact = []
    for n in range(0, 5):
        for m in range(0, 5):
            if m == 0:
                e = cylinder_limit_energies(spec0, n, 1, math.inf)
            else:
                e = cylinder_limit_energies(spec0, n, 2 * m, period)
            mult = (2 if n > 0 else 1) * (2 if m > 0 else 1)
            exact.extend([e] * mult)
    exact = np.sort(exact)[:n_lowest]
    err = float(
        np.max(np.abs(rich - exact) / np.maximum(np.abs(exact), 1e-12))
    )
    print(
        f"cylinder check: max relative error {err:.3e} over {n_lowest} levels "
        f"(grids {cfg.n_s // 2}x{cfg.n_phi // 2} and {cfg.n_s}x{cfg.n_phi}, "
        f"one Richardson step)"
    )
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    report = _verify.run_verification(cfg)
    write_json(Path(cfg.out_dir) / "verify.json", report)
    for check in report["checks"]:
        status = "ok  " if check["passed"] else "FAIL"
        print(
            f"{status} {check['name']}: measured {check['measured']:.3e} "
            f"({check['kind']} {check['tolerance']:.3e})"
        )
    if report["passed"]:
        print("verification passed")
        return 0
    failing = [c["name"] for c in report["checks"] if not c["passed"]]
    print(f"verification FAILED: {', '.join(failing)}", file=sys.stderr)
    return 1


_COMMANDS = {
    "geometry": cmd_geometry,
    "potential": cmd_potential,
    "bands": cmd_bands,
    "gap-scan": cmd_gap_scan,
    "cylinder-check": cmd_cylinder_check,
    "verify": cmd_verify,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="helitube",
        description="Band structure of a particle on a helical tube surface.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--kappa", type=float, default=None)
        p.add_argument("--tau", type=float, default=None)
        p.add_argument("--rho0", type=float, default=None)
        p.add_argument("--grid", default=None, metavar="NxM")
        p.add_argument("--harmonics", type=int, default=None, metavar="N")
        p.add_argument("--kpath", default=None, metavar="a:b:n")
        p.add_argument("--transverse-n", type=int, default=None, dest="transverse_n")
        p.add_argument("--eps-sweep", default=None, dest="eps_sweep",
                       metavar="v1,v2,...")
        p.add_argument("--out", default=None, metavar="DIR")
        p.add_argument("--units", default=None, metavar="natural|physical:<mu>")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceFailure as exc:
        print(f"eigensolver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
