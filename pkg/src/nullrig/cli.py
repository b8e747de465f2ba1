"""Command-line front end.

    nullrig verify --model minkowski --surface cone --t0 2 --samples 100 --seed 7
    nullrig tables --model desitter --t0 1 --n 4
    nullrig jacobi --model static-sphere --n 4 --smax 4
    nullrig cone --membership --model grw-counterexample
    nullrig umbilic-scan --model minkowski --surface cone --t0 2

Settings come from an optional INI file (section [run], keys as the long flag
names with dashes turned into underscores); flags given on the command line win.
Exit status: 0 pass, 1 a check failed, 2 bad configuration.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import jets as J
from .errors import ConfigError, NullrigError
from .grw import MODEL_DEFAULTS, GRWSpace, build_model
from .hypersurface import GraphHypersurface, RiggedGeometry, Rigging, umbilic_report

SECTION = "run"
MODELS = ("minkowski", "desitter", "ads-portion", "antidesitter-portion", "static-sphere",
          "friedmann-closed", "grw-counterexample", "custom-polynomial", "custom-trigonometric")
SURFACES = ("", "cone", "table1", "table1-graph", "hyperplane", "table1-hyperplane",
            "counterexample", "tube", "custom")
RIGGINGS = ("f_dt", "grad_t", "custom")
TABLE_TOL = 1e-8
WARP_TOL = 1e-7


# -- configuration ---------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    model: str = "minkowski"
    n: int = 4
    k: float | None = None
    coeffs: tuple = ()
    a0: float = 1.0
    cos: tuple = ()
    sin: tuple = ()
    interval: tuple | None = None
    surface: str = ""
    h_expr: str = ""
    chart: str = "polar"
    box: tuple = (0.2, 1.0)
    t_star: float | None = None
    orientation: str = "future"
    t0: float | None = None
    rigging: str = "f_dt"
    rigging_field: str = ""
    samples: int = 100
    seed: int = 0
    tol: float | None = None
    mode: str = "jet"
    smax: float = 4.0
    direction: tuple | None = None
    speed: float = 1.0
    out: str = ""
    format: str = ""

    def validate(self) -> "RunConfig":
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.n < 3:
            raise ConfigError("n must be at least 3")
        if self.surface not in SURFACES:
            raise ConfigError(f"unknown surface {self.surface!r}")
        if self.rigging not in RIGGINGS:
            raise ConfigError(f"unknown rigging {self.rigging!r}")
        if self.rigging == "custom" and not self.rigging_field:
            raise ConfigError("--rigging custom needs --rigging-field")
        if self.surface == "custom" and not self.h_expr:
            raise ConfigError("--surface custom needs --h-expr")
        if self.mode not in ("jet", "fd"):
            raise ConfigError("mode must be jet or fd")
        if self.format not in ("", "csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.orientation not in ("future", "past"):
            raise ConfigError("orientation must be future or past")
        if self.chart not in ("polar", "stereo"):
            raise ConfigError("chart must be polar or stereo")
        if self.samples < 1 or self.smax <= 0 or self.speed <= 0:
            raise ConfigError("samples, smax and speed must be positive")
        if len(self.box) != 2 or not self.box[0] < self.box[1]:
            raise ConfigError("box needs two increasing numbers")
        if self.interval is not None and (len(self.interval) != 2
                                          or not self.interval[0] < self.interval[1]):
            raise ConfigError("interval needs two increasing numbers")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("tol must be positive")
        return self

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp[SECTION] = {f.name: _dump(getattr(self, f.name)) for f in fields(self)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"unreadable config: {exc}") from None
        if not cp.has_section(SECTION):
            raise ConfigError(f"config needs a [{SECTION}] section")
        known = {f.name: f for f in fields(cls)}
        vals = {}
        for key, raw in cp[SECTION].items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            vals[key] = _load(known[key].type, raw, key)
        return cls(**vals)


def _dump(v) -> str:
    if v is None:
        return ""
    if isinstance(v, tuple):
        return ", ".join(repr(float(a)) for a in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _floats(raw: str, key: str = "value") -> tuple:
    try:
        return tuple(float(a) for a in raw.split(",") if a.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {raw!r}") from None


def _load(kind: str, raw: str, key: str):
    raw = raw.strip()
    optional = "None" in kind
    if optional and raw == "":
        return None
    try:
        if kind.startswith("int"):
            return int(raw)
        if kind.startswith("float"):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    if kind.startswith("tuple"):
        return _floats(raw, key)
    return raw


def load_config(path: str | None, overrides: dict) -> RunConfig:
    cfg = RunConfig()
    if path:
        try:
            with open(path) as fh:
                cfg = RunConfig.from_ini(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return replace(cfg, **overrides).validate()


# -- expressions -------------------------------------------------------------------------

_FUNCS = {"sin": J.sin, "cos": J.cos, "tan": J.tan, "exp": J.exp, "log": J.log,
          "sqrt": J.sqrt, "sinh": J.sinh, "cosh": J.cosh, "tanh": J.tanh, "atan": J.arctan,
          "atanh": J.arctanh, "asin": J.arcsin, "acos": J.arccos, "asinh": J.arcsinh,
          "acosh": J.arccosh, "Abs": J.absolute}


def compile_expr(text: str, names):
    """Jet-aware callable of the named variables from an expression string."""
    import sympy
    from sympy.parsing.sympy_parser import parse_expr

    syms = sympy.symbols(list(names))
    local = dict(zip(names, syms))
    try:
        expr = parse_expr(text, local_dict=local)
    except Exception as exc:  # sympy raises a zoo of types here
        raise ConfigError(f"cannot parse expression {text!r}: {exc}") from None
    extra = {str(s) for s in expr.free_symbols} - set(names)
    if extra:
        raise ConfigError(f"expression {text!r} uses unknown symbols {sorted(extra)}")
    return sympy.lambdify(syms, expr, modules=[_FUNCS, "math"])


def _custom_surface(space: GRWSpace, cfg: RunConfig) -> GraphHypersurface:
    m = space.n - 1
    fn = compile_expr(cfg.h_expr, [f"x{i + 1}" for i in range(m)])

    def h(x):
        return x[..., 0] * 0.0 + fn(*[x[..., i] for i in range(m)])

    lo, hi = cfg.box

    def sampler(rng, count):
        return rng.uniform(lo, hi, size=(count, m))

    return GraphHypersurface(space, h, "custom", None, sampler, meta=dict(kind="custom"))


def _custom_rigging(n: int, text: str) -> Rigging:
    parts = [p for p in text.split(";") if p.strip()]
    if len(parts) != n:
        raise ConfigError(f"rigging field needs {n} components separated by ';'")
    names = ["t"] + [f"x{i}" for i in range(1, n)]
    fns = [compile_expr(p, names) for p in parts]

    def field(space, p):
        args = [p[..., i] for i in range(n)]
        comps = [p[..., 0] * 0.0 + fn(*args) for fn in fns]
        return J.stack(comps, axis=-1) if J.is_jet(p) else np.stack(comps, axis=-1)

    return Rigging.custom(field)


# -- builders ---------------------------------------------------------------------------

def build_space(cfg: RunConfig, chart: str = "polar") -> GRWSpace:
    params = {}
    if cfg.model == "custom-polynomial":
        params["coeffs"] = cfg.coeffs
    elif cfg.model == "custom-trigonometric":
        params.update(a0=cfg.a0, cos=cfg.cos, sin=cfg.sin)
    if cfg.interval is not None:
        params["interval"] = cfg.interval
    return build_model(cfg.model, cfg.n, chart=chart, k=cfg.k, **params)


def surface_kind(cfg: RunConfig) -> str:
    if cfg.surface:
        return cfg.surface
    return "counterexample" if cfg.model == "grw-counterexample" else "cone"


def cone_spec(space: GRWSpace, cfg: RunConfig):
    from .lightcone import ConeSpec, default_cone_spec

    t_star = default_cone_spec(space).t_star if cfg.t_star is None else cfg.t_star
    return ConeSpec(float(t_star), None, cfg.orientation)


def build_surface(cfg: RunConfig) -> GraphHypersurface:
    from .lightcone import make_counterexample, make_surface

    kind = surface_kind(cfg)
    if kind == "counterexample":
        if cfg.model != "grw-counterexample":
            raise ConfigError("the counterexample surface lives in the grw-counterexample model")
        return make_counterexample(cfg.n)
    if kind == "custom":
        return _custom_surface(build_space(cfg, cfg.chart), cfg)
    space = build_space(cfg)
    spec = cone_spec(space, cfg) if kind == "cone" else None
    return make_surface(space, kind, cfg.t0, spec)


def build_rigging(cfg: RunConfig, space: GRWSpace) -> Rigging:
    if cfg.rigging == "custom":
        return _custom_rigging(space.n, cfg.rigging_field)
    return Rigging.from_name(cfg.rigging, space)


# -- output ---------------------------------------------------------------------------

def fmt(v) -> str:
    """17 significant digits: enough to read a double back exactly."""
    return format(float(v), ".17g")


_MARK = "\x00num:"


def _prep(o):
    if isinstance(o, dict):
        return {str(k): _prep(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_prep(v) for v in o]
    if isinstance(o, np.ndarray):
        return _prep(o.tolist())
    if isinstance(o, (bool, np.bool_)):
        return bool(o)
    if isinstance(o, (int, np.integer)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        return _MARK + fmt(o) if math.isfinite(o) else None
    return o


def dumps(obj) -> str:
    text = json.dumps(_prep(obj), indent=2)
    return re.sub(r'"\\u0000num:([^"]*)"', r"\1", text)


def to_csv(rows: list, columns: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v
                    for v in (row.get(c, "") for c in columns)])
    return buf.getvalue()


def emit(cfg: RunConfig, text: str, summary: list | None = None) -> None:
    """Data to --out (or stdout); summary lines to stdout when data went to a file, else stderr."""
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
        sink = sys.stdout
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        sys.stdout.flush()
        sink = sys.stderr
    for line in summary or ():
        print(line, file=sink)


# -- commands --------------------------------------------------------------------------

def cmd_verify(cfg: RunConfig, args) -> int:
    from .verifier import run_suite

    surface = build_surface(cfg)
    rig = build_rigging(cfg, surface.space)
    report = run_suite(surface, rig, cfg.samples, cfg.seed, cfg.mode, cfg.tol)
    if cfg.format == "csv":
        cols = ["id", "name", "status", "max_residual", "mean_residual", "samples", "tolerance",
                "note"]
        text = to_csv([vars(c) for c in report.checks], cols)
    else:
        text = dumps(report.as_dict())
    counts = {}
    for c in report.checks:
        counts[c.status] = counts.get(c.status, 0) + 1
    summary = [f"{surface.name} in {surface.space.name}, rigging {rig.kind}: "
               + ", ".join(f"{v} {k}" for k, v in sorted(counts.items()))]
    summary += [f"{c.id} {c.name}: {c.status} {c.note}".rstrip() for c in report.checks
                if c.status in ("fail", "error")]
    emit(cfg, text, summary)
    return 0 if report.passed else 1


def cmd_tables(cfg: RunConfig, args) -> int:
    from .lightcone import make_table1_graph, space_form_tables

    if cfg.model not in ("minkowski", "desitter", "ads-portion", "antidesitter-portion"):
        raise ConfigError(f"tables cover minkowski, desitter and ads-portion, not {cfg.model!r}")
    model = "ads-portion" if cfg.model == "antidesitter-portion" else cfg.model
    t0 = MODEL_DEFAULTS[model]["t0"] if cfg.t0 is None else cfg.t0
    tol = TABLE_TOL if cfg.tol is None else cfg.tol
    row = space_form_tables(model, t0, cfg.n).as_dict()
    row["H_residual"] = abs(row["H_engine"] - row["H_closed"])
    row["radius_residual"] = abs(row["radius_engine"] - row["radius_closed"])
    g = make_table1_graph(build_model(model, cfg.n))
    x = g.sample(np.random.default_rng(cfg.seed), max(cfg.samples, 50))
    row["table1_max_B"] = umbilic_report(RiggedGeometry(g, Rigging.f_dt(), x)).max_B
    cols = ["model", "t0", "n", "H_closed", "H_engine", "H_residual", "radius_closed",
            "radius_engine", "radius_residual", "warp_residual", "leaf_residual", "table1_max_B"]
    text = dumps(row) if cfg.format == "json" else to_csv([row], cols)
    ok = (row["H_residual"] <= tol and row["radius_residual"] <= tol
          and row["warp_residual"] <= max(tol, WARP_TOL) and row["leaf_residual"] <= tol
          and row["table1_max_B"] <= tol)
    emit(cfg, text, [f"{model} t0={fmt(t0)}: {'match' if ok else 'MISMATCH'}"])
    return 0 if ok else 1


def cmd_jacobi(cfg: RunConfig, args) -> int:
    from .jacobi import run_jacobi

    space = build_space(cfg, "stereo")
    res = run_jacobi(space, cfg.smax, cfg.direction, cfg.speed, cfg.t_star)
    if cfg.format == "csv":
        rows = [dict(s=s, t=t, r=r, J=j) for s, t, r, j in zip(res["s"], res["t"], res["r"],
                                                               res["J"])]
        text = to_csv(rows, ["s", "t", "r", "J"])
    else:
        text = dumps(res)
    pts = ", ".join(fmt(s) for s in res["conjugate_points"]) or "none"
    summary = [f"conjugate points: {pts}; multiplicity {res['multiplicity']}"]
    if "agree" in res:
        summary.append(f"scalar/full agreement: {res['agree']}")
    else:
        summary.append(f"scalar equation not used: {res['scalar_refused']}")
    emit(cfg, text, summary)
    return 0 if res.get("agree", True) else 1


def _reference_point(surface: GraphHypersurface):
    """Cone point at the requested t0, used for rho-hat."""
    if surface.meta.get("kind") != "cone":
        return None
    m = surface.n - 1
    x = [surface.meta["d0"]] + [math.pi / 2] * (m - 2) + ([0.4] if m > 1 else [])
    return np.array(x)


def _rho_closed(surface: GraphHypersurface, t, rig: Rigging):
    from .lightcone import cone_rho

    spec = surface.meta.get("spec")
    if spec is None or rig.kind != "f_dt" or spec.orientation != "future":
        return None
    return cone_rho(surface.space, spec, t)


def cmd_umbilic_scan(cfg: RunConfig, args) -> int:
    from .hypersurface import umbilicity_scan

    surface = build_surface(cfg)
    rig = build_rigging(cfg, surface.space)
    x = surface.sample(np.random.default_rng(cfg.seed), max(cfg.samples, 20))
    ref = _reference_point(surface)
    if ref is not None:
        x = np.vstack([ref, x])
    tol = TABLE_TOL if cfg.tol is None else cfg.tol
    rep = umbilicity_scan(surface, rig, x, tol, cfg.mode)
    t = np.asarray(surface.height(x), dtype=float)
    closed = _rho_closed(surface, t, rig)
    m = x.shape[1]
    rows = []
    for i in range(x.shape[0]):
        row = {f"x{j + 1}": x[i, j] for j in range(m)}
        row.update(t=t[i], H=rep.H[i], rho=rep.rho[i])
        if closed is not None:
            row["rho_closed"] = closed[i]
        rows.append(row)
    rho_err = float(np.abs(rep.rho - closed).max()) if closed is not None else None
    out = dict(surface=surface.name, model=surface.space.name, rigging=rig.kind,
               verdict=rep.verdict, max_B=rep.max_B, umbilic_residual=rep.residual,
               rho_hat=rep.rho[0], rho_closed_error=rho_err, points=rows)
    if cfg.format == "json":
        text = dumps(out)
    else:
        cols = [f"x{j + 1}" for j in range(m)] + ["t", "H", "rho"]
        text = to_csv(rows, cols + (["rho_closed"] if closed is not None else []))
    summary = [f"verdict: {rep.verdict}", f"rho_hat: {fmt(rep.rho[0])}",
               f"max_B: {fmt(rep.max_B)}", f"umbilic_residual: {fmt(rep.residual)}"]
    if rho_err is not None:
        summary.append(f"rho_closed_error: {fmt(rho_err)}")
    emit(cfg, text, summary)
    return 0 if rho_err is None or rho_err <= tol else 1


def cmd_cone(cfg: RunConfig, args) -> int:
    from .hypersurface import umbilicity_scan
    from .lightcone import cone_membership_test

    if not args.membership:
        if surface_kind(cfg) != "cone":
            raise ConfigError("without --membership the cone command tabulates cones only")
        return cmd_umbilic_scan(cfg, args)
    surface = build_surface(cfg)
    rep = cone_membership_test(surface, None, max(cfg.samples, 20), cfg.seed)
    x = surface.sample(np.random.default_rng(cfg.seed), max(cfg.samples, 20))
    umb = umbilicity_scan(surface, Rigging.f_dt(), x)
    verdict = "cone" if rep.is_cone else "not a cone"
    out = dict(surface=surface.name, model=surface.space.name, verdict=verdict,
               umbilic_verdict=umb.verdict, vertex=rep.vertex,
               proportionality=rep.proportionality, vertex_limit=rep.limit,
               mu_endpoint=rep.mu_endpoint, reachable=rep.reachable, detail=rep.detail)
    if cfg.format == "csv":
        flat = dict(out)
        flat["vertex"] = "" if rep.vertex is None else " ".join(
            fmt(v) for v in [rep.vertex[0], *rep.vertex[1]])
        text = to_csv([flat], list(flat))
    else:
        text = dumps(out)
    emit(cfg, text, [f"verdict: {verdict}", f"umbilic verdict: {umb.verdict}"])
    return 0


COMMANDS = {"verify": cmd_verify, "tables": cmd_tables, "jacobi": cmd_jacobi,
            "cone": cmd_cone, "umbilic-scan": cmd_umbilic_scan}


# -- argument parsing -----------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", help="INI file with a [run] section")
    g = p.add_argument_group("spacetime")
    g.add_argument("--model", help=", ".join(MODELS))
    g.add_argument("--n", type=int, help="spacetime dimension (>= 3)")
    g.add_argument("--k", type=float, help="fibre curvature (custom warps)")
    g.add_argument("--coeffs", type=_floats, help="polynomial warp coefficients c0,c1,...")
    g.add_argument("--a0", type=float, help="constant term of a trigonometric warp")
    g.add_argument("--cos", type=_floats, help="cosine coefficients of a trigonometric warp")
    g.add_argument("--sin", type=_floats, help="sine coefficients of a trigonometric warp")
    g.add_argument("--interval", type=_floats, help="warp interval lo,hi")
    g = p.add_argument_group("hypersurface")
    g.add_argument("--surface", help="cone, table1, table1-hyperplane, counterexample, tube, custom")
    g.add_argument("--h-expr", dest="h_expr", help="t = h(x1, ..., x_{n-1}) for custom graphs")
    g.add_argument("--chart", help="fibre chart of a custom graph: polar or stereo")
    g.add_argument("--box", type=_floats, help="sampling range lo,hi of custom graphs")
    g.add_argument("--t-star", dest="t_star", type=float, help="vertex time")
    g.add_argument("--orientation", help="future or past cone")
    g.add_argument("--t0", type=float, help="time around which cone samples are drawn")
    g.add_argument("--rigging", help="f_dt, grad_t or custom")
    g.add_argument("--rigging-field", dest="rigging_field",
                   help="custom rigging components in t, x1, ..., separated by ';'")
    g = p.add_argument_group("run")
    g.add_argument("--samples", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--tol", type=float)
    g.add_argument("--mode", help="jet or fd derivatives")
    g.add_argument("--smax", type=float, help="affine length of the null geodesic")
    g.add_argument("--direction", type=_floats, help="initial fibre direction of the geodesic")
    g.add_argument("--speed", type=float, help="affine speed of the geodesic")
    g.add_argument("--out", help="write data here instead of stdout")
    g.add_argument("--format", help="csv or json")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nullrig",
                                     description="Rigged lightlike hypersurfaces of GRW spacetimes.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()
    helps = {"verify": "run the identity suite and write a JSON report",
             "tables": "space-form cone table: closed forms next to engine values",
             "jacobi": "null geodesic, Jacobi fields and conjugate points",
             "cone": "cone sample table, or the cone membership test with --membership",
             "umbilic-scan": "umbilicity verdict and rho over sampled points"}
    for name, text in helps.items():
        sp = sub.add_parser(name, parents=[common], help=text, description=text,
                            argument_default=argparse.SUPPRESS)
        if name == "cone":
            sp.add_argument("--membership", action="store_true", default=False)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    opts = {k: v for k, v in vars(args).items()
            if k not in ("command", "config", "membership")}
    try:
        cfg = load_config(getattr(args, "config", None), opts)
        return COMMANDS[args.command](cfg, args)
    except NullrigError as exc:
        print(f"nullrig {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"nullrig {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
