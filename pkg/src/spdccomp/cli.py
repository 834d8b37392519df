"""Command-line front end.

    spdccomp index BBO 810 --theta 29.3
    spdccomp --preset diode-bibo-degenerate phasemap --uncompensated
    spdccomp --preset ultrafast-bbo design
    spdccomp --preset diode-bibo-degenerate sweep --axis pc_delay --start 0 --stop 1200 --num 121
    spdccomp --config my.json --format json state

Exit codes: 0 success, 1 computation error (JSON on stderr), 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import qstate, spatialphase, temporal
from .config import SCHEMA_VERSION, ScenarioConfig, load_preset, preset_names
from .errors import ArgumentError, SpdcError
from .materials import (
    direction_from_angles,
    group_index,
    gvd,
    inverse_group_velocity,
    load_materials,
    walkoff_angle,
    wavenumber,
)

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# --- output helpers ------------------------------------------------------------------------


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return repr(round(x, 12)) if math.isfinite(x) else str(x)
    return str(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n"


def _emit(args, text):
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rows_to_json(kind, header, rows, extra=None):
    out = {"schema_version": SCHEMA_VERSION, "kind": kind, "rows": [dict(zip(header, r)) for r in rows]}
    out.update(extra or {})
    return out


def _flat(d, prefix=""):
    """Flatten a nested report into (key, value) rows for CSV output."""
    for k in sorted(d):
        v = d[k]
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flat(v, key + ".")
        elif isinstance(v, list):
            yield key, ";".join(_fmt(x) for x in v)
        else:
            yield key, v


# --- scenario plumbing ------------------------------------------------------------------


def _scenario(args):
    if args.config and args.preset:
        raise ArgumentError("give either --config or --preset, not both")
    if args.config:
        cfg = ScenarioConfig.load(args.config)
    elif args.preset:
        cfg = load_preset(args.preset)
    else:
        raise ArgumentError(f"this command needs --config or --preset ({', '.join(preset_names())})")
    if args.materials:
        cfg.materials_path = args.materials
    return cfg, load_materials(cfg.materials_path)


def _design(cfg: ScenarioConfig, materials, redesign_all=False):
    """Fill design placeholders in order: spatial compensators, then the precompensator."""
    setup = cfg.build(materials)
    designed = {}
    for role, arm, attr in (
        ("spatial_comp_signal", "signal", "sc_signal"),
        ("spatial_comp_idler", "idler", "sc_idler"),
    ):
        entry = cfg.compensator(role)
        if entry is None or not (entry.is_placeholder or redesign_all):
            continue
        rot = None if entry.rotation_deg is None else math.radians(entry.rotation_deg)
        t, plate = spatialphase.design_spatial_compensator(
            setup.with_(**{attr: None}),
            entry.plate(materials, 0.0).material,
            math.radians(entry.theta_deg),
            arm,
            orientation=rot,
            phi_cut=math.radians(entry.phi_deg),
        )
        setup = setup.with_(**{attr: plate})
        designed[role] = {
            "thickness_mm": t,
            "material": plate.material.name,
            "theta_deg": entry.theta_deg,
            "rotation_deg": math.degrees(plate.rotation),
        }
    entry = cfg.compensator("precompensator")
    if entry is not None and (entry.is_placeholder or redesign_all):
        d = temporal.design_precompensator(
            setup.with_(precompensator=None),
            entry.plate(materials, 0.0).material,
            math.radians(entry.theta_deg),
            math.radians(entry.phi_deg),
        )
        setup = setup.with_(precompensator=d.plate)
        designed["precompensator"] = d.to_json()
    return setup, designed


def _quality(setup, diameter):
    st = qstate.source_state(setup, diameter)
    return qstate.metrics(st)


# --- commands ----------------------------------------------------------------------------


def cmd_index(args):
    materials = load_materials(args.materials)
    name = args.material
    mat = next((m for k, m in materials.items() if k.lower() == name.lower()), None)
    if mat is None:
        raise ArgumentError(f"unknown material {name!r}; known: {', '.join(sorted(materials))}")
    lam = args.wavelength
    direction = direction_from_angles(math.radians(args.theta), math.radians(args.phi))
    header = ["material", "wavelength_nm", "branch", "n", "group_index", "inv_group_velocity_fs_per_mm",
              "gvd_fs2_per_mm", "walkoff_deg"]
    rows = []
    for br in ("fast", "slow"):
        k = wavenumber(mat, lam, br, direction=direction)
        n = k * lam * 1e-6 / (2 * math.pi)
        rho = float(walkoff_angle(mat, lam, direction=direction, branch=br)) if mat.is_birefringent else 0.0
        rows.append([
            mat.name, float(lam), br, float(n),
            float(group_index(mat, lam, br, direction=direction)),
            float(inverse_group_velocity(mat, lam, br, direction=direction)),
            float(gvd(mat, lam, br, direction=direction)),
            math.degrees(rho),
        ])
    delay = rows[1][5] - rows[0][5]
    extra = {"theta_deg": args.theta, "phi_deg": args.phi, "slow_minus_fast_delay_fs_per_mm": delay}
    if args.format == "json":
        return _json(_rows_to_json("index", header, rows, extra))
    return _csv(header, rows)


def cmd_phasemap(args):
    cfg, materials = _scenario(args)
    setup, _ = _design(cfg, materials)
    pm = spatialphase.phase_map(setup, args.halfwidth, args.samples, compensated=not args.uncompensated)
    if args.format == "json":
        out = pm.to_json()
        out["slope_deg_per_mm"] = pm.slope()
        return _json(out)
    return pm.to_csv()


def cmd_design(args):
    cfg, materials = _scenario(args)
    placeholders = [c.role for c in cfg.compensators if c.is_placeholder]
    if not placeholders and not args.all:
        report = {"schema_version": SCHEMA_VERSION, "kind": "design", "status": "nothing to design",
                  "scenario": cfg.name}
    else:
        before = cfg.build(materials).uncompensated()
        after, designed = _design(cfg, materials, redesign_all=args.all)
        dia = after.iris_diameter
        report = {
            "schema_version": SCHEMA_VERSION,
            "kind": "design",
            "status": "designed",
            "scenario": cfg.name,
            "iris_diameter_mm": dia,
            "designed": designed,
            "delay_budget": temporal.delay_budget(after).to_json(),
            "before": _quality(before, dia),
            "after": _quality(after, dia),
            "setup": after.describe(),
        }
    if args.format == "json":
        return _json(report)
    return _csv(["key", "value"], list(_flat(report)))


def _range(args):
    if args.values:
        vals = [float(v) for v in args.values.split(",") if v.strip()]
    else:
        if args.start is None or args.stop is None:
            raise UsageError("sweep needs --values or --start/--stop")
        if args.num < 1:
            raise UsageError("--num must be at least 1")
        vals = list(np.linspace(args.start, args.stop, args.num))
    if not vals:
        raise UsageError("empty sweep range")
    return vals


def cmd_sweep(args):
    cfg, materials = _scenario(args)
    vals = _range(args)
    setup, _ = _design(cfg, materials)
    if args.axis == "pc_delay":
        curve = temporal.tangle_vs_delay(setup, vals)
        if args.format == "json":
            return _json(curve.to_json())
        return curve.to_csv()
    if any(v < 0 for v in vals):
        raise ArgumentError("iris diameters must be >= 0")
    header = ["diameter_mm", "tangle_compensated", "tangle_uncompensated"]
    g_c = temporal.jtpa(setup)
    g_u = temporal.jtpa(setup.uncompensated())
    rows = []
    for d in vals:
        tc = qstate.concurrence_tangle(qstate.source_state(setup, d, grid=g_c))[1]
        tu = qstate.concurrence_tangle(qstate.source_state(setup, d, compensated=False, grid=g_u))[1]
        rows.append([float(d), tc, tu])
    if args.format == "json":
        return _json(_rows_to_json("iris_sweep", header, rows, {"scenario": cfg.name}))
    return _csv(header, rows)


def cmd_state(args):
    cfg, materials = _scenario(args)
    setup, _ = _design(cfg, materials)
    if args.uncompensated:
        setup = setup.uncompensated()
    dia = setup.iris_diameter if args.diameter is None else args.diameter
    st = qstate.source_state(setup, dia, compensated=not args.uncompensated)
    m = qstate.metrics(st)
    if args.format == "json":
        out = {"schema_version": SCHEMA_VERSION, "kind": "state", "scenario": cfg.name, "iris_diameter_mm": dia}
        out["rho"] = st.to_json()
        out.update(m)
        return _json(out)
    header = ["row", "col", "re", "im"]
    rows = [[qstate.BASIS_LABELS[i], qstate.BASIS_LABELS[j], float(st.rho[i, j].real), float(st.rho[i, j].imag)]
            for i in range(4) for j in range(4)]
    return _csv(header, rows)


# --- parser ----------------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--materials", default=argparse.SUPPRESS, help="materials JSON file")
    common.add_argument("--config", default=argparse.SUPPRESS, help="scenario JSON file")
    common.add_argument("--preset", default=argparse.SUPPRESS, help=f"shipped scenario: {', '.join(preset_names())}")
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS, help="write output here instead of stdout")

    p = _Parser(prog="spdccomp", description="Two-crystal SPDC source compensation toolkit.", parents=[common])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("index", parents=[common], help="refractive and group indices of a material")
    s.add_argument("material")
    s.add_argument("wavelength", type=float, help="vacuum wavelength in nm")
    s.add_argument("--theta", type=float, default=0.0, help="polar angle of k from the optical z axis (deg)")
    s.add_argument("--phi", type=float, default=0.0, help="azimuth of k from the optical x axis (deg)")
    s.set_defaults(func=cmd_index)

    s = sub.add_parser("phasemap", parents=[common], help="relative phase across the iris plane")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--compensated", dest="uncompensated", action="store_false", help="include compensators (default)")
    g.add_argument("--uncompensated", dest="uncompensated", action="store_true")
    s.add_argument("--halfwidth", type=float, default=3.0, help="scan half range in mm")
    s.add_argument("--samples", type=int, default=121)
    s.set_defaults(func=cmd_phasemap, uncompensated=False)

    s = sub.add_parser("design", parents=[common], help="design compensator placeholders")
    s.add_argument("--all", action="store_true", help="redesign every compensator, not just placeholders")
    s.set_defaults(func=cmd_design)

    s = sub.add_parser("sweep", parents=[common], help="tangle against iris size or precompensator delay")
    s.add_argument("--axis", choices=("iris", "pc_delay"), required=True)
    s.add_argument("--start", type=float)
    s.add_argument("--stop", type=float)
    s.add_argument("--num", type=int, default=51)
    s.add_argument("--values", help="comma-separated explicit values")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("state", parents=[common], help="density matrix of the configured source")
    s.add_argument("--diameter", type=float, help="iris diameter in mm (default from the config)")
    s.add_argument("--uncompensated", action="store_true")
    s.set_defaults(func=cmd_state)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"spdccomp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    for key, default in (("materials", None), ("config", None), ("preset", None), ("format", "csv"), ("out", None)):
        if not hasattr(args, key):
            setattr(args, key, default)
    try:
        text = args.func(args)
    except UsageError as exc:
        print(f"spdccomp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArgumentError as exc:
        print(f"spdccomp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"spdccomp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpdcError as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        for attr in ("residual", "best_angle", "suggested_halfwidth"):
            if getattr(exc, attr, None) is not None:
                err[attr] = float(getattr(exc, attr))
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return EXIT_COMPUTE
    _emit(args, text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
