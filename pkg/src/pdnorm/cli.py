"""Command-line front end.

Parses problem files (JSON, schema-validated), orchestrates the pipeline,
and persists reports.  Reports are JSON documents written under
``out/<input-hash>/<command>.json`` with sibling CSV tables; for a fixed
(spec, seed, version) triple the bytes are identical apart from the
provenance ``timestamp`` field.

Exit codes: 0 success, 2 validation or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .algebra import PolyMap, PolyVectorField, total_degree
from .errors import InputError, NotPoincareError, NumericalError, PdnormError
from .flow import integrate_to
from .maps import (
    MapSpec,
    check_poincare_map,
    default_delta,
    koenigs_coefficients,
    linearize_map_point,
    map_conjugacy_residual,
    r_delta,
    resonances_map,
)
from .normal_form import PreparedForm, PreparedMap, prepare_flow, prepare_map
from .normalizer import (
    conjugacy_residual,
    domain_report,
    extract_taylor,
    normalize_point,
    taylor_coefficients,
)
from .sampling import ball_points
from .spectrum import (
    RadiusReport,
    check_poincare,
    resonances,
    select_direction,
    transversality_radius,
)

_DEFAULTS = {
    "q": 1.1,
    "tol": 1e-9,
    "resonance_tol": 1e-9,
    "divisor_floor": 1e-6,
    "degree": 6,
    "degree_bound": None,
    "points": 100,
    "seed": 0,
    "m": None,
    "delta": None,
    "radius_cap": 10.0,
    "escape_radius": None,
    "samples_per_sphere": 4096,
    "bisection_tol": 1e-4,
    "domain_grid": 32,
    "taus": [0.1, 0.5, 1.0],
    "taylor_radius": None,
    "dump_trajectories": False,
}


@dataclass(frozen=True)
class ProblemSpec:
    """Parsed problem file; components and nilpotent positions 0-based in
    memory, 1-based on disk."""

    kind: str
    n: int
    eigenvalues: tuple[complex, ...]
    epsilon: float
    nilpotent_pattern: frozenset[int]
    terms: tuple[tuple[int, tuple[int, ...], complex], ...]
    options: dict = field(default_factory=dict)


def _schema() -> dict:
    with resources.files("pdnorm.schemas").joinpath("problem_spec.schema.json").open() as fh:
        return json.load(fh)


def parse_problem_spec(data: dict) -> ProblemSpec:
    """Validate a raw dict against the schema and convert to 0-based
    in-memory form."""
    try:
        jsonschema.validate(data, _schema())
    except jsonschema.ValidationError as exc:
        raise InputError(f"problem spec failed schema validation: {exc.message}") from exc
    n = data["n"]
    if len(data["eigenvalues"]) != n:
        raise InputError(f"{len(data['eigenvalues'])} eigenvalues for n={n}")
    eig = tuple(complex(re, im) for re, im in data["eigenvalues"])
    pattern = frozenset(i - 1 for i in data.get("nilpotent_pattern", []))
    for i in pattern:
        if not 0 <= i < n - 1:
            raise InputError(f"nilpotent position {i + 1} out of range for n={n}")
    terms = []
    for t in data.get("terms", []):
        exps = tuple(t["exponents"])
        if len(exps) != n:
            raise InputError(f"term exponents {list(exps)} do not have length n={n}")
        if total_degree(exps) < 2:
            raise InputError(f"term exponents {list(exps)} have total degree < 2")
        if not 1 <= t["component"] <= n:
            raise InputError(f"term component {t['component']} out of range")
        terms.append((t["component"] - 1, exps, complex(t["re"], t.get("im", 0.0))))
    return ProblemSpec(
        kind=data["kind"],
        n=n,
        eigenvalues=eig,
        epsilon=float(data.get("epsilon", 0.0)),
        nilpotent_pattern=pattern,
        terms=tuple(terms),
        options=dict(data.get("options", {})),
    )


def problem_spec_to_dict(spec: ProblemSpec) -> dict:
    """Serialize back to the on-disk (1-based) form; round-trips through
    :func:`parse_problem_spec`."""
    out = {
        "kind": spec.kind,
        "n": spec.n,
        "eigenvalues": [[v.real, v.imag] for v in spec.eigenvalues],
        "epsilon": spec.epsilon,
        "nilpotent_pattern": sorted(i + 1 for i in spec.nilpotent_pattern),
        "terms": [
            {"component": j + 1, "exponents": list(m), "re": c.real, "im": c.imag}
            for j, m, c in spec.terms
        ],
    }
    if spec.options:
        out["options"] = dict(spec.options)
    return out


def load_problem_spec(path) -> ProblemSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"problem spec is not valid JSON: {exc}") from exc
    return parse_problem_spec(data)


def build_field(spec: ProblemSpec) -> PolyVectorField:
    table = {(j, m): c for j, m, c in spec.terms}
    degree = max([total_degree(m) for _, m, _ in spec.terms], default=2)
    return PolyVectorField(
        spec.n, spec.eigenvalues, spec.epsilon, spec.nilpotent_pattern, table, degree
    )


def build_map(spec: ProblemSpec) -> PolyMap:
    linear = np.diag(np.asarray(spec.eigenvalues, dtype=complex))
    for i in spec.nilpotent_pattern:
        linear[i, i + 1] = spec.epsilon
    table = {(j, m): c for j, m, c in spec.terms}
    degree = max([total_degree(m) for _, m, _ in spec.terms], default=2)
    return PolyMap(spec.n, linear, table, degree)


# ---------------------------------------------------------------------------
# report plumbing


def _c2j(value: complex) -> list[float]:
    value = complex(value)
    return [value.real, value.imag]


def _vec2j(vec) -> list[list[float]]:
    return [_c2j(v) for v in np.asarray(vec, dtype=complex)]


def _table2j(table) -> list[dict]:
    rows = []
    for (j, m), c in sorted(table.items(), key=lambda kv: (total_degree(kv[0][1]), kv[0][1], kv[0][0])):
        rows.append({"component": j + 1, "exponents": list(m), "re": c.real, "im": c.imag})
    return rows


def _finite_or_sentinel(value: float):
    return value if math.isfinite(value) else "unbounded"


def _options_for(spec: ProblemSpec, args) -> dict:
    opts = dict(_DEFAULTS)
    opts.update(spec.options)
    for key in ("tol", "degree", "points", "seed", "m", "q"):
        v = getattr(args, key, None)
        if v is not None:
            opts[key] = v
    return opts


def _input_hash(spec: ProblemSpec) -> str:
    blob = json.dumps(problem_spec_to_dict(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _base_report(spec: ProblemSpec, command: str, opts: dict, started: float) -> dict:
    return {
        "input_hash": _input_hash(spec),
        "command": command,
        "kind": spec.kind,
        "options": {k: v for k, v in sorted(opts.items())},
        "provenance": {
            "version": __version__,
            "seed": opts["seed"],
            "timestamp": {
                "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
                "elapsed_s": round(time.monotonic() - started, 6),
            },
        },
    }


def _write_report(report: dict, out_dir: Path, command: str) -> Path:
    target = out_dir / report["input_hash"]
    target.mkdir(parents=True, exist_ok=True)
    path = target / f"{command.replace('-', '_')}.json"
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# pipeline sections


def _spectrum_section(spec: ProblemSpec, opts: dict) -> dict:
    if spec.kind == "flow":
        check = check_poincare(spec.eigenvalues)
        if not check:
            witness = list(check.witness) if check.witness else None
            raise NotPoincareError(
                f"origin lies in the convex hull of the eigenvalues (witness weights {witness})"
            )
        info = select_direction(spec.eigenvalues, spec.epsilon)
        bound = opts["degree_bound"] or max(2, math.ceil(info.beta / info.alpha) + 1)
        res = resonances(spec.eigenvalues, bound, opts["resonance_tol"])
        return {
            "poincare": True,
            "direction": _c2j(info.direction),
            "alpha": info.alpha,
            "beta": info.beta,
            "epsilon": spec.epsilon,
            "resonances": [
                {"component": j + 1, "exponents": list(m)} for j, m in res.entries
            ],
            "resonance_degree_bound": bound,
        }
    check = check_poincare_map(spec.eigenvalues)
    if not check:
        raise InputError(check.hint or "map spectrum is not contracting")
    bound = opts["degree_bound"] or 6
    res = resonances_map(spec.eigenvalues, bound, opts["resonance_tol"])
    mods = [abs(v) for v in spec.eigenvalues]
    return {
        "contracting": True,
        "rho_star": min(mods),
        "rho_sup": max(mods),
        "epsilon": spec.epsilon,
        "resonances": [{"component": j + 1, "exponents": list(m)} for j, m in res.entries],
        "resonance_degree_bound": bound,
    }


def _prepared_section_flow(prep: PreparedForm) -> dict:
    return {
        "m": prep.m,
        "q": prep.q,
        "flatness_constant": prep.C,
        "r_work": prep.r_work,
        "normal_part_is_linear": prep.normal_part_is_linear,
        "x0_terms": _table2j(prep.x0.coefficients),
        "x1_terms": _table2j(prep.x1.coefficients),
        "change_terms": _table2j(prep.change.coefficients),
        "change_inverse_terms": _table2j(prep.change_inverse.coefficients),
    }


def _prepared_section_map(prep: PreparedMap) -> dict:
    return {
        "m": prep.m,
        "q": prep.q,
        "flatness_constant": prep.C,
        "r_work": prep.r_work,
        "normal_part_is_linear": prep.normal_part_is_linear,
        "f0_terms": _table2j(prep.f0.coefficients),
        "f1_terms": _table2j(prep.f1.coefficients),
        "change_terms": _table2j(prep.change.coefficients),
        "change_inverse_terms": _table2j(prep.change_inverse.coefficients),
    }


def _prepare_for(spec: ProblemSpec, opts: dict):
    if spec.kind == "flow":
        return prepare_flow(
            build_field(spec),
            opts["m"],
            q=opts["q"],
            resonance_tol=opts["resonance_tol"],
            divisor_floor=opts["divisor_floor"],
        )
    return prepare_map(
        build_map(spec),
        opts["m"],
        q=opts["q"],
        resonance_tol=opts["resonance_tol"],
        divisor_floor=opts["divisor_floor"],
    )


def _radius_section_flow(spec: ProblemSpec, opts: dict) -> dict:
    field_ = build_field(spec)
    info = select_direction(spec.eigenvalues, spec.epsilon)
    rr = transversality_radius(
        field_,
        info,
        samples_per_sphere=opts["samples_per_sphere"],
        bisection_tol=opts["bisection_tol"],
        seed=opts["seed"],
    )
    return {
        "certified_lower": _finite_or_sentinel(rr.certified_lower),
        "sampled_estimate": _finite_or_sentinel(rr.sampled_estimate),
        "samples_per_sphere": rr.samples_per_sphere,
        "bisection_tol": rr.bisection_tol,
        "seed": rr.seed,
    }


def _radius_section_map(prep: PreparedMap, opts: dict) -> dict:
    spec_ = MapSpec.from_prepared(prep)
    delta = opts["delta"] if opts["delta"] is not None else default_delta(spec_)
    radius = r_delta(spec_, delta, radius_cap=opts["radius_cap"])
    theta = (spec_.rho_sup + spec_.epsilon + delta) ** prep.m / spec_.rho_star
    return {
        "R_delta": _finite_or_sentinel(radius),
        "delta": delta,
        "theta": theta,
        "m": prep.m,
    }


def _sampled_radius(radius_section: dict, opts: dict) -> float:
    value = radius_section.get("sampled_estimate", radius_section.get("R_delta"))
    if value == "unbounded":
        return opts["radius_cap"]
    return min(float(value), opts["radius_cap"])


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(spec: ProblemSpec, opts: dict, out_dir: Path, started: float) -> dict:
    report = _base_report(spec, "analyze", opts, started)
    report["spectrum"] = _spectrum_section(spec, opts)
    return report


def cmd_prepare(spec: ProblemSpec, opts: dict, out_dir: Path, started: float) -> dict:
    report = _base_report(spec, "prepare", opts, started)
    report["spectrum"] = _spectrum_section(spec, opts)
    prep = _prepare_for(spec, opts)
    report["prepared"] = (
        _prepared_section_flow(prep) if spec.kind == "flow" else _prepared_section_map(prep)
    )
    return report


def cmd_radius(spec: ProblemSpec, opts: dict, out_dir: Path, started: float) -> dict:
    report = _base_report(spec, "radius", opts, started)
    report["spectrum"] = _spectrum_section(spec, opts)
    if spec.kind == "flow":
        report["radius"] = _radius_section_flow(spec, opts)
    else:
        prep = _prepare_for(spec, opts)
        report["prepared"] = _prepared_section_map(prep)
        report["radius"] = _radius_section_map(prep, opts)
    return report


def cmd_linearize(spec: ProblemSpec, opts: dict, out_dir: Path, started: float) -> dict:
    if spec.kind != "flow":
        raise InputError("linearize expects a flow problem; use map-linearize")
    report = _base_report(spec, "linearize", opts, started)
    report["spectrum"] = _spectrum_section(spec, opts)
    prep = _prepare_for(spec, opts)
    info = prep.info
    report["prepared"] = _prepared_section_flow(prep)
    report["radius"] = _radius_section_flow(spec, opts)
    r0 = _sampled_radius(report["radius"], opts)
    escape = opts["escape_radius"] or 2.0 * r0
    tol = opts["tol"]

    points = ball_points(spec.n, 0.5 * r0, opts["points"], opts["seed"])
    samples = []
    trajectories = []
    for idx, z in enumerate(points):
        sample = normalize_point(prep, info, z, tol, escape_radius=escape)
        samples.append(
            {
                "z": _vec2j(sample.z),
                "value": _vec2j(sample.value),
                "tail_bound": sample.tail_bound,
                "t_reached": sample.t_reached,
                "steps": sample.steps,
            }
        )
        if opts["dump_trajectories"]:
            rows = []
            integrate_to(
                prep.full_field(), prep.x0, info.direction, z, sample.t_reached, tol,
                escape_radius=escape, x1=prep.x1,
                observer=lambda st, i=idx: rows.append(
                    [i, st.t] + [f(v) for v in st.w for f in (lambda v: v.real, lambda v: v.imag)]
                    + [st.err_estimate]
                ),
            )
            trajectories.extend(rows)

    radius = opts["taylor_radius"] or min(0.3, 0.5 * r0)
    table = taylor_coefficients(prep, info, radius, opts["degree"], max(tol * 100, 1e-7), escape_radius=escape)
    report["results"] = {
        # the normalizer in original coordinates factors as L(change(z));
        # both factors are reported separately for auditability
        "normalizer_factorization": "L(change(z))",
        "samples": samples,
        "taylor": {
            "radius": table.sample_radius,
            "degree": table.degree,
            "aliasing_estimate": table.aliasing_estimate,
            "rows": _table2j(table.coefficients),
        },
    }

    residual_rows = []
    res_points = points[: min(len(points), 25)]
    for tau in opts["taus"]:
        residual_rows.append([tau, conjugacy_residual(prep, info, res_points, tau, tol, escape_radius=escape)])
    report["results"]["residuals"] = [{"tau": t, "max": r} for t, r in residual_rows]

    rr_for_domain = report["radius"]["sampled_estimate"]
    rr = RadiusReport(
        0.0 if report["radius"]["certified_lower"] == "unbounded" else report["radius"]["certified_lower"],
        math.inf if rr_for_domain == "unbounded" else rr_for_domain,
        opts["samples_per_sphere"],
        opts["bisection_tol"],
        opts["seed"],
    )
    dom = domain_report(
        prep, info, rr, opts["domain_grid"], tol, radius_cap=opts["radius_cap"], seed=opts["seed"]
    )
    report["results"]["domain"] = {
        "radius": dom.radius,
        "n_points": dom.n_points,
        "n_converged": dom.n_converged,
        "success_rate": dom.success_rate,
        "max_tail_bound": dom.max_tail_bound,
        "min_abs_jacobian_det": dom.min_abs_jacobian_det,
        "fd_step": dom.fd_step,
    }

    target = out_dir / report["input_hash"]
    target.mkdir(parents=True, exist_ok=True)
    exp_cols = [f"e{k + 1}" for k in range(spec.n)]
    _write_csv(
        target / "taylor.csv",
        ["component"] + exp_cols + ["re", "im"],
        [
            [row["component"]] + row["exponents"] + [row["re"], row["im"]]
            for row in report["results"]["taylor"]["rows"]
        ],
    )
    _write_csv(target / "residuals.csv", ["tau", "residual"], residual_rows)
    if opts["dump_trajectories"]:
        w_cols = [f"{p}_w{k + 1}" for k in range(spec.n) for p in ("re", "im")]
        _write_csv(target / "trajectories.csv", ["point", "t"] + w_cols + ["err_estimate"], trajectories)
    return report


def cmd_map_linearize(spec: ProblemSpec, opts: dict, out_dir: Path, started: float) -> dict:
    if spec.kind != "map":
        raise InputError("map-linearize expects a map problem; use linearize")
    report = _base_report(spec, "map-linearize", opts, started)
    report["spectrum"] = _spectrum_section(spec, opts)
    prep = _prepare_for(spec, opts)
    report["prepared"] = _prepared_section_map(prep)
    report["radius"] = _radius_section_map(prep, opts)
    r0 = _sampled_radius(report["radius"], opts)
    tol = opts["tol"]
    delta = opts["delta"]

    points = ball_points(spec.n, 0.5 * r0, opts["points"], opts["seed"])
    samples = []
    for z in points:
        sample = linearize_map_point(prep, z, tol, delta=delta)
        samples.append(
            {
                "z": _vec2j(sample.z),
                "value": _vec2j(sample.value),
                "tail_bound": sample.tail_bound,
                "terms": sample.steps,
            }
        )
    report["results"] = {"samples": samples}
    residual = map_conjugacy_residual(prep, points[: min(len(points), 25)], tol, delta=delta)
    report["results"]["residuals"] = [{"max": residual}]

    taylor_rows = []
    if spec.n == 1:
        radius = opts["taylor_radius"] or 0.5 * r0
        degree = opts["degree"]
        point_tol = max(1e-13, 1e-7 * radius**degree / 10.0)
        table = extract_taylor(
            lambda z: linearize_map_point(prep, z, point_tol, delta=delta).value,
            1,
            radius,
            degree,
            min_points=32,
        )
        series_coeffs = [table.get((0, (d,)), 0.0) for d in range(degree + 1)]
        mu = prep.eigenvalues[0]
        f1_list = [
            prep.f1.coefficients.get((0, (d,)), 0.0) for d in range(2, prep.f1.truncation_degree + 1)
        ]
        recursion = koenigs_coefficients(mu, f1_list, degree)
        report["results"]["koenigs"] = {
            "radius": radius,
            "series": [_c2j(v) for v in series_coeffs],
            "recursion": [_c2j(v) for v in recursion],
            "max_diff": max(
                abs(complex(a) - complex(b)) for a, b in zip(series_coeffs, recursion)
            ),
        }
        taylor_rows = [
            {"component": 1, "exponents": [d], "re": complex(v).real, "im": complex(v).imag}
            for d, v in enumerate(series_coeffs)
            if d >= 1
        ]
        report["results"]["taylor"] = {"radius": radius, "degree": degree, "rows": taylor_rows}

    target = out_dir / report["input_hash"]
    target.mkdir(parents=True, exist_ok=True)
    if taylor_rows:
        _write_csv(
            target / "taylor.csv",
            ["component", "e1", "re", "im"],
            [[row["component"]] + row["exponents"] + [row["re"], row["im"]] for row in taylor_rows],
        )
    _write_csv(target / "residuals.csv", ["tau", "residual"], [["", residual]])
    return report


def cmd_verify(spec: ProblemSpec, opts: dict, out_dir: Path, started: float, report_path: str) -> dict:
    with open(report_path) as fh:
        stored = json.load(fh)
    if stored.get("input_hash") != _input_hash(spec):
        raise InputError("report was generated from a different problem spec")
    stored_opts = stored.get("options", {})
    opts = dict(opts)
    for key, value in stored_opts.items():
        opts[key] = value
    tol = opts["tol"]
    report = _base_report(spec, "verify", opts, started)
    report["verified_report"] = str(report_path)
    prep = _prepare_for(spec, opts)
    drift = 0.0
    checked = 0
    samples = stored.get("results", {}).get("samples", [])
    for row in samples:
        z = np.array([complex(re, im) for re, im in row["z"]])
        stored_value = np.array([complex(re, im) for re, im in row["value"]])
        if spec.kind == "flow":
            escape = opts["escape_radius"] or 1e6
            value = normalize_point(prep, prep.info, z, tol, escape_radius=escape).value
        else:
            value = linearize_map_point(prep, z, tol, delta=opts["delta"]).value
        drift = max(drift, float(np.linalg.norm(value - stored_value)))
        checked += 1
    ok = drift <= 10.0 * tol
    report["verification"] = {
        "samples_checked": checked,
        "max_value_drift": drift,
        "tolerance": 10.0 * tol,
        "ok": ok,
    }
    if not ok:
        raise NumericalError(f"stored samples drifted by {drift:.3e} > {10 * tol:.3e}")
    return report


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdnorm",
        description="Normalization and linearization engine for Poincare-type singularities",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "analyze": "spectrum analysis only",
        "prepare": "spectrum plus prepared-form reduction",
        "radius": "domain radius estimates",
        "linearize": "full flow pipeline",
        "map-linearize": "full map pipeline",
        "verify": "re-check a stored report",
    }
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--spec", required=True, help="problem spec JSON file")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--degree", type=int, default=None)
        p.add_argument("--points", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--m", type=int, default=None)
        p.add_argument("--q", type=float, default=None)
        p.add_argument("--json-errors", action="store_true")
        if name == "verify":
            p.add_argument("--report", required=True, help="previously written report JSON")
    return parser


_HANDLERS = {
    "analyze": cmd_analyze,
    "prepare": cmd_prepare,
    "radius": cmd_radius,
    "linearize": cmd_linearize,
    "map-linearize": cmd_map_linearize,
}


def _emit_error(exc: Exception, code: int, json_errors: bool) -> None:
    name = getattr(exc, "name", exc.__class__.__name__)
    if json_errors:
        payload = {"error": name, "message": str(exc), "exit_code": code}
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    else:
        print(f"pdnorm error [{name}]: {exc}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.monotonic()
    try:
        spec = load_problem_spec(args.spec)
        opts = _options_for(spec, args)
        out_dir = Path(args.out)
        if args.command == "verify":
            report = cmd_verify(spec, opts, out_dir, started, args.report)
        else:
            report = _HANDLERS[args.command](spec, opts, out_dir, started)
        report["provenance"]["timestamp"]["elapsed_s"] = round(time.monotonic() - started, 6)
        path = _write_report(report, out_dir, args.command)
        print(path)
        return 0
    except (InputError, ValueError) as exc:
        _emit_error(exc, 2, getattr(args, "json_errors", False))
        return 2
    except NumericalError as exc:
        _emit_error(exc, 3, getattr(args, "json_errors", False))
        return 3
    except PdnormError as exc:  # pragma: no cover - catch-all for new subtypes
        _emit_error(exc, 3, getattr(args, "json_errors", False))
        return 3


if __name__ == "__main__":
    sys.exit(main())
