"""Command-line front end: ``heatborel run <command> --config c.json --out o.csv``.

Commands
--------
kernel  u and v at the configured (t, x, y) points.
borel   v_hat on a tau grid, with the growth bound exp(C |tau|^(1/2)).
resum   Laplace-resummed v against the direct series.
torus   trace comparison table (eigenvalues vs lattice sum).
verify  remainder certification report (JSON) with a positivity sweep and the T_d estimate.
coeffs  Taylor coefficients a_r by two routes.

CSV outputs start with ``# config_sha256=<hash>, seed=<seed>``; floats are
written with 17 significant digits. Outputs carry no timestamps, so equal
config and seed give byte-identical files.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
import warnings
from pathlib import Path

import jsonschema
import numpy as np

from . import borel, defmatrix, series, torus
from .errors import ConfigError, HeatBorelError
from .measures import DiscreteMeasure, TorusPotential, measure_from_fourier_coeffs
from .mehler import mehler_kernel

COMMANDS = ("kernel", "borel", "resum", "torus", "verify", "coeffs")

_COMPLEX = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}
_VECTOR = {"type": "array", "items": _COMPLEX, "minItems": 1}
_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_MEASURE = {
    "type": "object",
    "required": ["nu", "d"],
    "properties": {
        "nu": {"type": "integer", "minimum": 1},
        "d": {"type": "integer", "minimum": 1},
        "atoms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["xi", "re"],
                "properties": {"xi": {"type": "array", "items": {"type": "number"}}, "re": _MATRIX, "im": _MATRIX},
            },
        },
    },
}
_POTENTIAL = {
    "type": "object",
    "required": ["nu", "d"],
    "properties": {
        "nu": {"type": "integer", "minimum": 1},
        "d": {"type": "integer", "minimum": 1},
        "coeffs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["q", "re"],
                "properties": {"q": {"type": "array", "items": {"type": "integer"}}, "re": _MATRIX, "im": _MATRIX},
            },
        },
    },
}
_POS_INT = {"type": "integer", "minimum": 1}
_OPT_NUM = {"type": ["number", "null"]}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "measure": _MEASURE,
        "omega": _COMPLEX,
        "n_max": {"type": "integer", "minimum": 0},
        "quad_order": {"oneOf": [_POS_INT, {"type": "array", "items": _POS_INT, "minItems": 1}]},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "t_domain_radius": _OPT_NUM,
        "delta_path": {"type": "number", "exclusiveMinimum": 0},
        "chunk_tuples": _POS_INT,
        "cost_cap": _OPT_NUM,
        "points": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["t", "x", "y"],
                "additionalProperties": False,
                "properties": {"t": _COMPLEX, "x": _VECTOR, "y": _VECTOR},
            },
        },
        "borel": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tau": {"type": "array", "items": _COMPLEX},
                "kappa": {"type": "number", "exclusiveMinimum": 0},
                "R": {"type": "number", "minimum": 0},
            },
        },
        "resum": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"tol": {"type": "number", "exclusiveMinimum": 0}, "order": _POS_INT},
        },
        "torus": {
            "type": "object",
            "additionalProperties": False,
            "required": ["potential", "t"],
            "properties": {
                "potential": _POTENTIAL,
                "cutoff": _POS_INT,
                "t": {"type": "array", "items": _COMPLEX, "minItems": 1},
                "Q_max": {"type": ["integer", "null"], "minimum": 0},
                "x_quad_order": {"type": ["integer", "null"], "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "T": {"type": "number", "exclusiveMinimum": 0},
                "samples": _POS_INT,
                "r_max": _POS_INT,
                "domain": {"enum": ["nevanlinna", "halfdisk"]},
                "x": _VECTOR,
                "y": _VECTOR,
                "kappa": _OPT_NUM,
                "r_fit": {"type": ["integer", "null"], "minimum": 2},
                "n_points": _POS_INT,
                "positivity_samples": _POS_INT,
            },
        },
        "coeffs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"r_max": _POS_INT, "x": _VECTOR, "y": _VECTOR},
        },
    },
}


# -- config handling ---------------------------------------------------------------


def _complex(v) -> complex:
    return complex(v) if isinstance(v, (int, float)) else complex(v[0], v[1])


def _cvec(v) -> np.ndarray:
    return np.array([_complex(e) for e in v], dtype=complex)


def load_config(path) -> dict:
    try:
        raw = Path(path).read_text()
        cfg = json.loads(raw)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config violates the schema: {exc.message}") from exc
    return cfg


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def build_config(raw: dict, threads: int, measure: DiscreteMeasure | None = None) -> series.DeformationConfig:
    if measure is None:
        if "measure" not in raw:
            raise ConfigError("config needs a 'measure'")
        measure = DiscreteMeasure.from_json(raw["measure"])
    q = raw.get("quad_order", 8)
    return series.DeformationConfig(
        measure,
        omega=_complex(raw.get("omega", 0.0)),
        n_max=raw.get("n_max", 4),
        quad_order=q if isinstance(q, int) else tuple(q),
        t_domain_radius=raw.get("t_domain_radius"),
        tol=raw.get("tol", 1e-10),
        delta_path=raw.get("delta_path", 0.5),
        threads=threads,
        chunk_tuples=raw.get("chunk_tuples", 32),
        cost_cap=raw.get("cost_cap"),
    )


def _points(raw: dict, nu: int):
    pts = raw.get("points")
    if not pts:
        raise ConfigError("this command needs a non-empty 'points' list")
    out = []
    for p in pts:
        x, y = _cvec(p["x"]), _cvec(p["y"])
        if x.shape != (nu,) or y.shape != (nu,):
            raise ConfigError(f"points need x and y of length nu = {nu}")
        out.append((_complex(p["t"]), x, y))
    return out


# -- output ------------------------------------------------------------------------


def _fmt(v) -> str:
    return "%.17g" % v


class Table:
    def __init__(self, header: list[str]):
        self.header = header
        self.rows: list[list[str]] = []

    def add(self, *vals):
        row = []
        for v in vals:
            if isinstance(v, str):
                row.append(v)
            elif isinstance(v, (bool, np.bool_)):
                row.append("1" if v else "0")
            elif isinstance(v, (int, np.integer)):
                row.append(str(int(v)))
            else:
                row.append(_fmt(float(v)))
        self.rows.append(row)

    def render(self, chash: str, seed: int) -> str:
        buf = io.StringIO()
        buf.write(f"# config_sha256={chash}, seed={seed}\n")
        buf.write(",".join(self.header) + "\n")
        for r in self.rows:
            buf.write(",".join(r) + "\n")
        return buf.getvalue()


def _cols(prefix: str, nu: int) -> list[str]:
    return [f"{prefix}{k}_{part}" for k in range(nu) for part in ("re", "im")]


def _parts(v: np.ndarray) -> list[float]:
    return [p for z in v for p in (z.real, z.imag)]


# -- commands ----------------------------------------------------------------------


def cmd_kernel(raw, cfg, seed) -> Table:
    nu, d = cfg.measure.nu, cfg.measure.d
    tab = Table(["t_re", "t_im"] + _cols("x", nu) + _cols("y", nu)
                + ["a", "b", "u_re", "u_im", "v_re", "v_im", "tail_bound"])
    for t, x, y in _points(raw, nu):
        res = series.v_sum(t, x, y, cfg)
        u0 = mehler_kernel(res.t, x, y, cfg.omega)
        for a in range(d):
            for b in range(d):
                v = res.value[a, b]
                u = u0 * v
                tab.add(t.real, t.imag, *_parts(x), *_parts(y), a, b, u.real, u.imag, v.real, v.imag, res.tail_bound)
    return tab


def cmd_borel(raw, cfg, seed) -> Table:
    nu, d = cfg.measure.nu, cfg.measure.d
    opts = raw.get("borel", {})
    taus = np.array([_complex(v) for v in opts.get("tau", [0.5, 1.0, 2.0, 4.0])])
    kappa, R = float(opts.get("kappa", 1.0)), float(opts.get("R", 1.0))
    ev = borel.BorelEvaluator.build(cfg, kappa, R)
    tab = Table(["tau_re", "tau_im"] + _cols("x", nu) + _cols("y", nu)
                + ["a", "b", "vhat_re", "vhat_im", "vhat_norm", "growth_bound", "in_region", "within_bound"])
    pts = _points(raw, nu)
    vals = borel.borel_values(taus, [(x, y) for _, x, y in pts], cfg)  # (npairs, K, d, d)
    bound = np.exp(ev.growth_C * np.sqrt(np.abs(taus)))
    region = taus.real > taus.imag**2 / (4 * kappa) - kappa
    for i, (_, x, y) in enumerate(pts):
        im_ok = max(np.abs(x.imag).max(), np.abs(y.imag).max()) < R
        for k, tau in enumerate(taus):
            norm = float(np.linalg.norm(vals[i, k], 2))
            inside = bool(region[k] and im_ok)
            for a in range(d):
                for b in range(d):
                    z = vals[i, k, a, b]
                    tab.add(tau.real, tau.imag, *_parts(x), *_parts(y), a, b, z.real, z.imag, norm,
                            bound[k], inside, (norm <= bound[k]) if inside else True)
    return tab


def cmd_resum(raw, cfg, seed) -> Table:
    nu, d = cfg.measure.nu, cfg.measure.d
    opts = raw.get("resum", {})
    tol, order = float(opts.get("tol", 1e-12)), int(opts.get("order", 24))
    ev = borel.BorelEvaluator.build(cfg)
    tab = Table(["t_re", "t_im"] + _cols("x", nu) + _cols("y", nu)
                + ["a", "b", "resummed_re", "resummed_im", "series_re", "series_im", "abs_err"])
    for t, x, y in _points(raw, nu):
        res = borel.laplace_resum(ev, t, tol, x=x, y=y, order=order)
        direct = series.v_sum(t, x, y, cfg).value
        for a in range(d):
            for b in range(d):
                r, s = res[a, b], direct[a, b]
                tab.add(t.real, t.imag, *_parts(x), *_parts(y), a, b, r.real, r.imag, s.real, s.imag, abs(r - s))
    return tab


def cmd_torus(raw, threads, seed) -> Table:
    opts = raw["torus"]
    pot = TorusPotential.from_json(opts["potential"])
    cfg = build_config(raw, threads, measure_from_fourier_coeffs(pot))
    cutoff = int(opts.get("cutoff", 32))
    tol = float(opts.get("tol", 1e-10))
    spec = torus.galerkin_spectrum(pot, cutoff)
    tab = Table(["t_re", "t_im", "trace_direct_re", "trace_direct_im", "poisson_re", "poisson_im", "abs_err"])
    for tv in opts["t"]:
        t = _complex(tv)
        direct = torus.trace_direct(spec, t, tol)
        poisson = torus.poisson_trace(t, cfg, opts.get("Q_max"), tol, opts.get("x_quad_order"))
        tab.add(t.real, t.imag, direct.real, direct.imag, poisson.real, poisson.imag, abs(poisson - direct))
    return tab


def cmd_verify(raw, cfg, seed) -> dict:
    opts = raw.get("verify", {})
    nu = cfg.measure.nu
    domain = opts.get("domain", "nevanlinna" if cfg.free else "halfdisk")
    T = float(opts.get("T", 0.5 if cfg.free else cfg.t_domain_radius))
    count = int(opts.get("samples", 80))
    r_max = int(opts.get("r_max", 10))
    x = _cvec(opts.get("x", [0.0] * nu))
    y = _cvec(opts.get("y", [0.0] * nu))
    draw = borel.nevanlinna_samples if domain == "nevanlinna" else borel.halfdisk_samples
    ts = draw(T, count, seed)
    for t in ts:
        cfg.check_t(t)
    table = series.remainder_table(r_max, ts, x, y, cfg, int(opts.get("n_points", 64)))
    meta = {"seed": seed, "count": count}
    fitted = borel.verify_watson(ts, T, None, remainders=table[1:], domain=domain, r_fit=opts.get("r_fit"),
                                 samples_meta=meta)
    report = {"fitted": fitted.to_json()}
    if opts.get("kappa") is not None:
        given = borel.verify_watson(ts, T, float(opts["kappa"]), remainders=table[1:], domain=domain,
                                    r_fit=opts.get("r_fit"), samples_meta=meta)
        report["given_kappa"] = given.to_json()
    batch = defmatrix.draw_td_samples(max(1, min(cfg.n_max, 8)), int(opts.get("positivity_samples", 10_000)), seed)
    radius = cfg.td_estimate if np.isfinite(cfg.td_estimate) else defmatrix.td_ceiling(cfg.omega)
    neg, big = defmatrix.half_disk_violations(cfg.omega, radius, batch)
    report["positivity"] = {"radius": borel._json_float(radius), "negative_real_part": neg, "growth_bound": big,
                            "samples": int(opts.get("positivity_samples", 10_000))}
    report["T_d_estimate"] = borel._json_float(radius)
    report["T_d_at_ceiling"] = bool(radius >= defmatrix.td_ceiling(cfg.omega))
    report["t_domain_radius"] = borel._json_float(cfg.t_domain_radius)
    return report


def cmd_coeffs(raw, cfg, seed) -> Table:
    opts = raw.get("coeffs", {})
    nu, d = cfg.measure.nu, cfg.measure.d
    r_max = int(opts.get("r_max", 8))
    x = _cvec(opts.get("x", [0.0] * nu))
    y = _cvec(opts.get("y", [0.0] * nu))
    if cfg.free:
        primary = series.free_coefficients(r_max, x, y, cfg)
        names = ("exact", "ladder")
    else:
        primary = series.cauchy_coefficients(x, y, cfg, max(64, 2 * (r_max + 1)))[0][: r_max + 1]
        names = ("cauchy", "ladder")
    lad_r = min(r_max + 1, 6)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ladder, _ = series.ladder_coefficients(lad_r, x, y, cfg)
    tab = Table(["r", "a", "b", f"{names[0]}_re", f"{names[0]}_im", f"{names[1]}_re", f"{names[1]}_im"])
    for r in range(r_max + 1):
        for a in range(d):
            for b in range(d):
                p = primary[r, a, b]
                lad = ladder[r, a, b] if r < lad_r else complex(np.nan, np.nan)
                tab.add(r, a, b, p.real, p.imag, lad.real, lad.imag)
    return tab


def run(command: str, config_path, output_path=None, threads: int = 1, seed: int = 0) -> str:
    """Execute one command and return (and optionally write) its output text."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    raw = load_config(config_path)
    chash = config_hash(raw)
    if command == "torus":
        if "torus" not in raw:
            raise ConfigError("the torus command needs a 'torus' section")
        text = cmd_torus(raw, threads, seed).render(chash, seed)
    else:
        cfg = build_config(raw, threads)
        if command == "verify":
            report = cmd_verify(raw, cfg, seed)
            report = {"config_sha256": chash, "seed": seed, **report}
            text = json.dumps(report, indent=2, sort_keys=True) + "\n"
        else:
            fn = {"kernel": cmd_kernel, "borel": cmd_borel, "resum": cmd_resum, "coeffs": cmd_coeffs}[command]
            text = fn(raw, cfg, seed).render(chash, seed)
    if output_path is not None:
        Path(output_path).write_text(text)
    return text


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="heatborel", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="action", required=True)
    p = sub.add_parser("run", help="run one command on a JSON config")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", default=None, help="output file (stdout when omitted)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="seed for sampled quantities (u64)")
    args = parser.parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return ConfigError.exit_code
    try:
        text = run(args.command, args.config, args.out, args.threads, args.seed)
    except HeatBorelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    if args.out is None:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
