"""Command-line front end: reproducible experiments over the library modules.

Subcommands:

* ``dimension`` -- Moran dimension of a coding system, optional box-count
  cross-check;
* ``construct`` -- build a partner sequence and its block schedule;
* ``verify``    -- certified Li-Yorke verdict for a constructed (or
  deliberately broken) pair on one of the example systems;
* ``boxdim``    -- box-counting estimate for the attractor, the
  restricted set, or the pair set;
* ``sample``    -- emit raw point clouds.

Every sampling command requires an explicit ``--seed``; outputs are
byte-identical for a fixed seed regardless of ``--threads``.  Options can
also come from a JSON ``--config`` file; precedence is flags > config
file > built-in defaults (all defaults are printed in ``--help``).  Exit
codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .analysis import (
    box_count,
    break_pair_after_block,
    build_verification_pair,
    dimension_fit,
    geometric_ladder,
    liyorke_profile,
    shadow_filler,
    verify_liyorke,
)
from .errors import (
    ConvergenceError,
    DegenerateFit,
    LypairsError,
    UndefinedRegion,
    ValidationError,
)
from .fractal import (
    load_ifs,
    moran_dimension,
    sample_attractor,
    sample_pair_set,
    sample_restricted,
)
from .symbolic import (
    GapSequence,
    SymbolSequence,
    check_gap_condition,
    construct_partner,
    extract_filler,
    random_sequence,
    schedule_covering,
)
from .systems import SystemSpec, apply_map, code_orbit_point, derive_ifs, sample_invariant_set

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


# --------------------------------------------------------------------------
# deterministic output formatting (sorted keys, 17 significant digits)


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _json_text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [
            f'{inner}"{k}": {_json_text(obj[k], indent + 1)}' for k in sorted(obj)
        ]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [f"{inner}{_json_text(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    return json.dumps(obj)


def _write_text(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    with open(out, "w") as fh:
        fh.write(text)


def _points_csv(points: np.ndarray) -> str:
    w = points.shape[1]
    lines = [",".join(f"x{i + 1}" for i in range(w))]
    for row in points:
        lines.append(",".join(format(v, ".17g") for v in row))
    return "\n".join(lines) + "\n"


def _estimate_csv(est) -> str:
    lines = ["neg_log_eps,log_count"]
    for x, y in est.csv_rows():
        lines.append(f"{x:.17g},{y:.17g}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# argument resolution


def _parse_gaps(text: str) -> GapSequence:
    if text == "zero":
        return GapSequence.zero()
    if text == "linear":
        return GapSequence.linear()
    if text == "quadratic":
        return GapSequence.quadratic()
    if text.startswith("constant:"):
        try:
            return GapSequence.constant(int(text.split(":", 1)[1]))
        except ValueError as exc:
            raise ValidationError(f"bad constant gap value in {text!r}") from exc
    if text.startswith("list:"):
        path = text.split(":", 1)[1]
        if not os.path.exists(path):
            raise ValidationError(f"gap list file not found: {path}")
        with open(path) as fh:
            data = json.load(fh)
        if isinstance(data, list):
            return GapSequence.from_list(data)
        return GapSequence.from_json(data)
    raise ValidationError(
        f"unknown gap rule {text!r}; use zero|constant:c|linear|quadratic|list:file"
    )


def _build_system(args) -> SystemSpec:
    text = args.system
    if text.lstrip().startswith("{"):
        return SystemSpec.from_json(json.loads(text))
    params = {}
    for name in ("a", "beta1", "beta2", "beta", "tau"):
        v = getattr(args, name, None)
        if v is not None:
            params[name] = v
    return SystemSpec(kind=text, **params)


def _resolve_seed(args) -> int:
    if args.seed is None:
        raise ValidationError("--seed is mandatory; wall-clock seeding is not supported")
    if args.seed < 0:
        raise ValidationError("--seed must be non-negative")
    return args.seed


def _ladder(args) -> tuple[float, ...]:
    return geometric_ladder(args.eps_max, args.eps_min, args.eps_ratio)


def _load_sequence_file(path: str) -> SymbolSequence:
    if not os.path.exists(path):
        raise ValidationError(f"sequence file not found: {path}")
    with open(path) as fh:
        return SymbolSequence.from_json(json.load(fh))


# --------------------------------------------------------------------------
# subcommands


def cmd_dimension(args) -> int:
    report: dict = {"directions": []}
    if args.ifs:
        ifs = load_ifs(args.ifs)
        directions = [("ifs", ifs)]
    elif args.system:
        spec = _build_system(args)
        derived = derive_ifs(spec)
        directions = []
        for i, con in enumerate(derived.contracting):
            directions.append((f"contracting[{i}]", con))
        directions.append(("expanding", derived.expanding_inverse))
        report["system"] = spec.to_json()
    else:
        raise ValidationError("dimension needs --system or --ifs")

    total = 0.0
    for name, ifs in directions:
        sol = moran_dimension(ifs.ratios)
        total += sol.dimension
        report["directions"].append(
            {"name": name, "dimension": sol.dimension, "residual": sol.residual,
             "ratios": list(ifs.ratios)}
        )
        print(f"D[{name}] = {sol.dimension:.10g}  (residual {sol.residual:.3g})")
    report["total_dimension"] = total
    if len(directions) > 1:
        print(f"D[total] = {total:.10g}")

    if args.check_box:
        seed = _resolve_seed(args)
        name, ifs = directions[0]
        sample = sample_attractor(ifs, args.count, args.depth, seed, args.threads)
        est = dimension_fit(box_count(sample.centers, _ladder(args), args.threads))
        d0 = report["directions"][0]["dimension"]
        print(
            f"box-count check[{name}]: slope = {est.slope:.4f} +/- {est.stderr:.4f} "
            f"(Moran D = {d0:.4f})"
        )
        report["box_check"] = est.to_json()

    if args.out:
        _write_text(_json_text(report), args.out)
    return EXIT_OK


def cmd_construct(args) -> int:
    if args.length is None:
        raise ValidationError("construct needs --length")
    if args.length < 1:
        raise ValidationError("--length must be >= 1")
    gaps = _parse_gaps(args.gaps)
    report_gap = check_gap_condition(gaps, max(10, min(args.length, 100)))
    print(f"gap condition: {report_gap.verdict} ({report_gap.detail})")

    rng = np.random.default_rng(_resolve_seed(args))
    if args.base == "random":
        base = random_sequence(args.m, args.length + 8, rng)
    elif args.base == "ones":
        base = SymbolSequence(args.m, (1,) * (args.length + 8))
    else:
        base = _load_sequence_file(args.base)
    if args.filler == "random":
        filler = random_sequence(args.m, args.length, rng)
    elif args.filler == "base":
        filler = shadow_filler(base, gaps, args.length)
    else:
        filler = _load_sequence_file(args.filler)

    partner = construct_partner(base, gaps, filler, args.length)
    sched = schedule_covering(gaps, args.length)
    out = {
        "base": base.to_json(),
        "partner": partner.to_json(),
        "schedule": sched.to_json(),
        "gap_condition": {
            "verdict": report_gap.verdict,
            "detail": report_gap.detail,
            "ratios": list(report_gap.ratios),
        },
    }
    if args.extract:
        recovered = extract_filler(partner, base, gaps)
        out["filler_recovered"] = list(recovered.digits)
        print(f"recovered filler digits: {list(recovered.digits)}")
    print(f"partner digits: {list(partner.digits)}")
    _write_text(_json_text(out), args.out)
    return EXIT_OK


def _unsafe_iteration_report(spec, base, partner, depth, steps) -> dict:
    """Demonstrate naive floating-point orbit iteration drifting off the
    conjugacy-evaluated orbit (demo only; never used for verdicts)."""
    x = code_orbit_point(spec, base, 0, depth).center.copy()
    y = code_orbit_point(spec, partner, 0, depth).center.copy()
    rows = []
    stopped = None
    for n in range(steps):
        coded = float(
            np.linalg.norm(
                code_orbit_point(spec, base, n, depth).center
                - code_orbit_point(spec, partner, n, depth).center
            )
        )
        naive = float(np.linalg.norm(x - y))
        rows.append({"time": n, "naive": naive, "coded": coded, "drift": abs(naive - coded)})
        try:
            x = apply_map(spec, x)
            y = apply_map(spec, y)
        except (UndefinedRegion, ValidationError) as exc:
            stopped = {"time": n + 1, "reason": str(exc)}
            break
    return {"rows": rows, "stopped": stopped}


def cmd_verify(args) -> int:
    spec = _build_system(args)
    gaps = _parse_gaps(args.gaps)
    seed = _resolve_seed(args)
    base, partner = build_verification_pair(
        spec, gaps, args.blocks, args.depth, seed, filler_mode=args.filler
    )
    strict = True
    if args.pair_mode == "identical":
        partner = base
        strict = False
    elif args.pair_mode == "eventually-equal":
        partner = break_pair_after_block(base, partner, gaps, last_kept_block=2)
        strict = False

    profile = liyorke_profile(spec, base, gaps, partner, args.blocks, args.depth, strict=strict)
    verdict = verify_liyorke(profile, args.decay, args.floor)
    gap_report = check_gap_condition(gaps, 100)

    label = "PASS" if verdict.passed else "FAIL"
    print(f"{label}: {verdict.reason}")
    if verdict.witness is not None:
        w = verdict.witness
        print(f"  witness: block {w.block}, orbit time {w.time}, bound {w.bound:.6g}")
    print(
        f"  system {spec.kind}, {args.blocks} blocks, depth {args.depth}, "
        f"gap rule {args.gaps} ({gap_report.verdict})"
    )

    report = {
        "system": spec.to_json(),
        "pair_mode": args.pair_mode,
        "verdict": verdict.to_json(),
        "profile": profile.to_json(),
        "gap_condition": {"verdict": gap_report.verdict, "detail": gap_report.detail},
        "params": {
            "blocks": args.blocks,
            "depth": args.depth,
            "seed": seed,
            "filler": args.filler,
        },
    }
    if args.unsafe_iterate:
        report["unsafe_iteration"] = _unsafe_iteration_report(
            spec, base, partner, args.depth, min(args.blocks * 2, 24)
        )
        worst = max(
            (r["drift"] for r in report["unsafe_iteration"]["rows"]), default=0.0
        )
        print(f"  unsafe-iterate demo: max naive-vs-coded drift {worst:.3g}")
    if args.out:
        _write_text(_json_text(report), args.out)
    return EXIT_OK


def _boxdim_points(args) -> np.ndarray:
    seed = _resolve_seed(args)
    if args.target == "system":
        if not args.system:
            raise ValidationError("--target system needs --system")
        cloud = sample_invariant_set(_build_system(args), args.count, args.depth, seed,
                                     args.threads)
        return cloud.centers
    if args.ifs:
        ifs = load_ifs(args.ifs)
    elif args.system:
        spec = _build_system(args)
        derived = derive_ifs(spec)
        ifs = derived.contracting[0] if derived.contracting else derived.expanding_inverse
    else:
        raise ValidationError("boxdim needs --ifs, --system, or --target system")
    if args.target == "attractor":
        return sample_attractor(ifs, args.count, args.depth, seed, args.threads).centers
    gaps = _parse_gaps(args.gaps)
    if args.target == "restricted":
        if args.base == "random":
            base_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(9,)))
            base = random_sequence(ifs.m, args.depth, base_rng)
        else:
            base = _load_sequence_file(args.base)
        return sample_restricted(
            ifs, base, gaps, args.count, args.depth, seed, args.threads
        ).centers
    if args.target == "pairs":
        return sample_pair_set(ifs, gaps, args.count, args.depth, seed, args.threads).points
    raise ValidationError(f"unknown target {args.target!r}")


def cmd_boxdim(args) -> int:
    points = _boxdim_points(args)
    est = dimension_fit(box_count(points, _ladder(args), args.threads))
    print(
        f"box dimension[{args.target}]: slope = {est.slope:.4f} +/- {est.stderr:.4f} "
        f"over {len(est.fit_range)} ladder points"
    )
    payload = est.to_json()
    payload["target"] = args.target
    text = _estimate_csv(est) if args.format == "csv" else _json_text(payload)
    _write_text(text, args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    points = _boxdim_points(args)
    if args.format == "csv":
        text = _points_csv(points)
    else:
        text = _json_text({"points": [list(row) for row in points]})
    _write_text(text, args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser and config-file overlay (precedence: flags > config file > defaults)

_CHOICES = {
    "format": ("json", "csv"),
    "target": ("attractor", "restricted", "pairs", "system"),
    "pair_mode": ("constructed", "identical", "eventually-equal"),
    "filler_mode": ("base", "random"),
}

# built-in defaults, applied after the config overlay; keep the help texts
# below in sync with these values
_DEFAULTS = {
    "dimension": {"count": 200_000, "depth": 30},
    "construct": {"m": 2, "gaps": "quadratic", "base": "random", "filler": "random"},
    "verify": {
        "gaps": "quadratic", "blocks": 12, "depth": 18,
        "filler": "base", "pair_mode": "constructed",
    },
    "boxdim": {"target": "attractor", "gaps": "quadratic", "base": "random",
               "count": 200_000, "depth": 30},
    "sample": {"target": "attractor", "gaps": "quadratic", "base": "random",
               "count": 10_000, "depth": 30},
}
_COMMON_DEFAULTS = {
    "threads": 1,
    "format": "json",
    "eps_min": 2.0**-14,
    "eps_max": 2.0**-4,
    "eps_ratio": 2.0,
}


def _add_system_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--system", help="tent|baker|horseshoe|solenoid or inline JSON spec")
    p.add_argument("--a", type=float, help="tent slope parameter (a > 1)")
    p.add_argument("--beta1", type=float, help="baker/solenoid first contraction")
    p.add_argument("--beta2", type=float, help="baker/solenoid second contraction")
    p.add_argument("--beta", type=float, help="horseshoe contraction (0 < beta < 1/2)")
    p.add_argument("--tau", type=float, help="horseshoe expansion (tau > 2)")


def _add_ladder_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps-min", type=float, help="smallest grid size (default 2^-14)")
    p.add_argument("--eps-max", type=float, help="largest grid size (default 2^-4)")
    p.add_argument(
        "--eps-ratio", type=float,
        help="ladder step ratio, 2 = dyadic, 3 = ternary (default 2)",
    )


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; explicit flags override its keys")
    p.add_argument("--seed", type=int, help="RNG seed (mandatory for sampling; no default)")
    p.add_argument("--threads", type=int, help="worker threads (default 1)")
    p.add_argument("--out", help="output file, '-' = stdout (default stdout)")
    p.add_argument("--format", choices=_CHOICES["format"],
                   help="output format (default json)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lypairs",
        description="Li-Yorke pairs on self-similar invariant sets: "
        "construction, coding, and desk-scale verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dimension", help="Moran dimension of a coding system")
    _add_system_flags(p)
    p.add_argument("--ifs", help="IFS definition JSON file")
    p.add_argument("--check-box", action="store_true", help="cross-check with a box count")
    p.add_argument("--count", type=int, help="sample size for the check (default 200000)")
    p.add_argument("--depth", type=int, help="coding depth for the check (default 30)")
    _add_ladder_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("construct", help="build a partner sequence and schedule")
    p.add_argument("--m", type=int, help="alphabet size (default 2)")
    p.add_argument("--length", type=int, help="partner prefix length (required)")
    p.add_argument("--gaps", help="gap rule (default quadratic)")
    p.add_argument("--base", help="random|ones|sequence JSON file (default random)")
    p.add_argument("--filler", help="random|base|sequence JSON file (default random)")
    p.add_argument("--extract", action="store_true", help="round-trip the filler back out")
    _add_common_flags(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="certified Li-Yorke verdict for a pair")
    _add_system_flags(p)
    p.add_argument("--gaps", help="gap rule (default quadratic)")
    p.add_argument("--blocks", type=int, help="schedule blocks to check (default 12)")
    p.add_argument("--depth", type=int, help="coding depth (default 18)")
    p.add_argument("--filler", choices=_CHOICES["filler_mode"],
                   help="free-digit source for the pair (default base)")
    p.add_argument(
        "--pair-mode", choices=_CHOICES["pair_mode"],
        help="negative controls replace the constructed partner (default constructed)",
    )
    p.add_argument("--decay", type=float, help="proximity decay override (default: max ratio)")
    p.add_argument("--floor", type=float, help="separation floor override (default: gap/2)")
    p.add_argument(
        "--unsafe-iterate", action="store_true",
        help="also demo naive float iteration (divergence showcase; no effect on verdict)",
    )
    _add_common_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("boxdim", help="box-counting dimension of a sampled target")
    _add_system_flags(p)
    p.add_argument("--ifs", help="IFS definition JSON file")
    p.add_argument("--target", choices=_CHOICES["target"],
                   help="what to sample (default attractor)")
    p.add_argument("--gaps", help="gap rule for restricted/pairs (default quadratic)")
    p.add_argument("--base", help="random|sequence JSON file for restricted (default random)")
    p.add_argument("--count", type=int, help="sample size (default 200000)")
    p.add_argument("--depth", type=int, help="coding depth (default 30)")
    _add_ladder_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=cmd_boxdim)

    p = sub.add_parser("sample", help="emit a raw point cloud")
    _add_system_flags(p)
    p.add_argument("--ifs", help="IFS definition JSON file")
    p.add_argument("--target", choices=_CHOICES["target"],
                   help="what to sample (default attractor)")
    p.add_argument("--gaps", help="gap rule for restricted/pairs (default quadratic)")
    p.add_argument("--base", help="random|sequence JSON file for restricted (default random)")
    p.add_argument("--count", type=int, help="sample size (default 10000)")
    p.add_argument("--depth", type=int, help="coding depth (default 30)")
    _add_common_flags(p)
    p.set_defaults(func=cmd_sample)

    return parser


def _apply_config_and_defaults(args) -> None:
    if getattr(args, "config", None):
        if not os.path.exists(args.config):
            raise ValidationError(f"config file not found: {args.config}")
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValidationError("config file must hold a JSON object")
        for key, value in data.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                raise ValidationError(f"config key {key!r} unknown for this command")
            current = getattr(args, attr)
            if current is None or current is False:
                setattr(args, attr, value)
    defaults = dict(_COMMON_DEFAULTS)
    defaults.update(_DEFAULTS.get(args.command, {}))
    for attr, value in defaults.items():
        if getattr(args, attr, None) is None:
            setattr(args, attr, value)
    for attr, allowed in (
        ("format", _CHOICES["format"]),
        ("target", _CHOICES["target"]),
        ("pair_mode", _CHOICES["pair_mode"]),
    ):
        current = getattr(args, attr, None)
        if current is not None and current not in allowed:
            raise ValidationError(f"{attr} must be one of {', '.join(allowed)}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    try:
        _apply_config_and_defaults(args)
        return args.func(args)
    except (DegenerateFit, ConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LypairsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
