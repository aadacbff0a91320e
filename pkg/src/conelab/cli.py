"""Command-line harness: presets, configuration files, run records and plot data."""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import acceptance
from .cascade import CascadeConfig, run_cascade
from .elliptic import DirichletProblem, SolverError, solve_dirichlet
from .geometry import BallDomain, ConeParams, ConePoint, ParameterError
from .heat import HeatProblem, li_yau_monitor, schauder_verify_parabolic, solve_cylinder
from .operators import GridError, GridSpec, write_field
from .poisson1d import QuadratureError, beta_sweep
from .regularity import alpha_sweep, schauder_verify_elliptic

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 2, 3, 4
COMMANDS = ("solve", "cascade", "verify-elliptic", "verify-parabolic", "alpha-sweep", "riesz-1d",
            "convergence", "acceptance")
FAMILIES = ("euclidean", "re_zn", "im_zn2", "re_z1zn", "a6", "heat-bump")


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    """Fixed 17-significant-digit formatting for every emitted number."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# configuration

_SECTIONS = {
    "experiment": ("name", "command", "checks"),
    "cone": ("beta", "n"),
    "grid": ("n_s", "n_r", "n_theta"),
    "sweep": ("betas", "alphas"),
    "data": ("family", "alpha", "depth", "tau"),
    "solver": ("tol", "seed", "count"),
}


@dataclass
class ExperimentConfig:
    name: str = "custom"
    command: str = "solve"
    checks: list = field(default_factory=list)
    beta: float = 0.75
    n: int = 2
    n_s: int = 33
    n_r: int = 32
    n_theta: int = 32
    betas: list = field(default_factory=list)
    alphas: list = field(default_factory=list)
    family: str = "re_z1zn"
    alpha: float = 0.3
    depth: int = 6
    tau: float = 0.5
    tol: float = 1e-10
    seed: int = 0
    count: int = 200

    def validate(self) -> "ExperimentConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not 0 < self.beta <= 1:
            raise ConfigError("beta must lie in (0, 1]")
        if self.n not in (1, 2):
            raise ConfigError("n must be 1 or 2")
        if min(self.n_s, self.n_r, self.n_theta) < 5:
            raise ConfigError("grid sizes must be >= 5")
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.command == "alpha-sweep":
            if not self.alphas:
                raise ConfigError("alpha-sweep needs a non-empty alphas list")
            amax = min(1 / self.beta - 1, 1.0)
            bad = [a for a in self.alphas if not 0 < a < amax]
            if bad:
                raise ConfigError(f"alphas {bad} outside (0, {amax:.6g})")
        if self.command == "riesz-1d":
            if len(self.betas) < 2:
                raise ConfigError("riesz-1d needs at least two betas")
            if any(not 0.5 < b < 1 for b in self.betas):
                raise ConfigError("riesz-1d betas must lie in (1/2, 1)")
        if self.command == "convergence" and not self.betas:
            raise ConfigError("convergence needs a betas list")
        if self.command == "acceptance":
            bad = [c for c in self.checks if c not in acceptance.CHECKS]
            if bad or not self.checks:
                raise ConfigError(f"unknown or empty checks {bad}")
        if self.command == "cascade" and (self.depth < 2 or not 0 < self.tau < 1):
            raise ConfigError("cascade needs depth >= 2 and tau in (0, 1)")
        if not self.tol > 0 or self.count < 1:
            raise ConfigError("tol must be positive and count >= 1")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form; independent of key order."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        d = self.to_dict()
        for sec, keys in _SECTIONS.items():
            cp[sec] = {k: _ini_value(d[k]) for k in keys}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"unparseable config: {exc}") from exc
        out = asdict(base) if base is not None else asdict(cls())
        for sec in cp.sections():
            if sec not in _SECTIONS:
                raise ConfigError(f"unknown section [{sec}]")
            for key, raw in cp[sec].items():
                if key not in _SECTIONS[sec]:
                    raise ConfigError(f"unknown key {key!r} in [{sec}]")
                out[key] = _parse_value(raw, type(out[key]) if out[key] is not None else str, key)
        return cls(**out).validate()


def _ini_value(v) -> str:
    if isinstance(v, list):
        return ", ".join(str(x) if isinstance(x, str) else fmt(x) for x in v)
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def _parse_value(raw: str, kind, key: str):
    raw = raw.strip()
    try:
        if kind is list:
            items = [x.strip() for x in raw.split(",") if x.strip()]
            if key == "checks":
                return items
            return [float(x) for x in items]
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return raw


# ---------------------------------------------------------------------------
# presets

_ACC_DESC = {
    "A1": "beta = 1 polar reductions and beta = 1/2 double cover",
    "A2": "harmonic family convergence for beta in {0.6, 0.75, 0.9}",
    "A3": "discrete maximum principles across elliptic and heat solves",
    "A4": "cascade decay exponent 2 + alpha and bounded second differences",
    "A5": "sharp Hölder exponent of the mixed derivative of Re(z_1 z_n)",
    "A6": "elliptic Schauder band constants for f = d(., S)^0.3",
    "A7": "alpha dependence of the interior norm at beta = 0.75",
    "A8": "Riesz representation versus finite differences and C2(beta) blow-up",
    "A9": "Li-Yau monitor, parabolic Schauder ratios and parabolic cascade",
}


def _presets() -> dict:
    p = {}
    for k, desc in _ACC_DESC.items():
        p[f"acceptance-{k}"] = (desc, ExperimentConfig(name=f"acceptance-{k}", command="acceptance",
                                                       checks=[k]))
    p["acceptance-all"] = ("every acceptance check in sequence",
                           ExperimentConfig(name="acceptance-all", command="acceptance",
                                            checks=list(acceptance.CHECKS)))
    p["demo-euclidean"] = ("beta = 1, n = 2 quadratic reproduced exactly by the scheme",
                           ExperimentConfig(name="demo-euclidean", command="solve", beta=1.0,
                                            family="euclidean", n_s=17, n_r=16, n_theta=16, tol=1e-13))
    p["demo-harmonic"] = ("single solve of Re(z_1 z_n) at beta = 0.75",
                          ExperimentConfig(name="demo-harmonic", command="solve", family="re_z1zn"))
    p["demo-heat"] = ("heat solve from a positive bump with the Li-Yau monitor",
                      ExperimentConfig(name="demo-heat", command="solve", n=1, family="heat-bump"))
    p["demo-cascade"] = ("cascade at beta = 0.75, alpha = 0.3",
                         ExperimentConfig(name="demo-cascade", command="cascade", n_s=33, n_r=32, n_theta=16))
    p["demo-verify-elliptic"] = ("elliptic Schauder verification at beta = 0.75",
                                 ExperimentConfig(name="demo-verify-elliptic", command="verify-elliptic",
                                                  family="a6", n_s=65, n_r=64, n_theta=32))
    p["demo-verify-parabolic"] = ("parabolic Schauder ratios and Li-Yau at beta = 0.75",
                                  ExperimentConfig(name="demo-verify-parabolic", command="verify-parabolic",
                                                   family="a6"))
    p["demo-alpha-sweep"] = ("alpha sweep over the sharp family at beta = 0.75",
                             ExperimentConfig(name="demo-alpha-sweep", command="alpha-sweep",
                                              alphas=acceptance.a7_alphas(0.75)))
    p["demo-riesz-1d"] = ("C2(beta) sweep of the one-dimensional Riesz solver",
                          ExperimentConfig(name="demo-riesz-1d", command="riesz-1d", n=1,
                                           betas=[0.55, 0.6, 0.7, 0.8, 0.9]))
    p["demo-convergence"] = ("harmonic-family convergence at beta = 0.75",
                             ExperimentConfig(name="demo-convergence", command="convergence", betas=[0.75]))
    return p


PRESETS = _presets()


def list_presets() -> list:
    return [(k, v[0]) for k, v in PRESETS.items()]


# ---------------------------------------------------------------------------
# artifacts


@dataclass
class RunRecord:
    config_hash: str
    config: dict
    started: str
    finished: str = ""
    reports: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    error: dict | None = None

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([x if isinstance(x, str) else fmt(x) for x in r])
    return buf.getvalue()


def _dat(xs, ys) -> str:
    return "".join(f"{fmt(x)} {fmt(y)}\n" for x, y in zip(xs, ys))


class Artifacts:
    def __init__(self, out: Path):
        self.out = out
        out.mkdir(parents=True, exist_ok=True)
        self.files = []

    def write(self, name: str, text: str):
        (self.out / name).write_text(text)
        self.files.append(name)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return None if not math.isfinite(float(x)) else float(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


# ---------------------------------------------------------------------------
# commands


def _family(cfg: ExperimentConfig):
    """``(m, f, u)`` with ``L u = 4 f`` for each named family."""
    b = cfg.beta
    if cfg.family == "euclidean":
        m = cfg.n - 1
        u = (lambda S, R, T: 1 + S[0] + S[0] ** 2 + 0.5 * R ** 2) if m else (lambda S, R, T: 1 + R ** 2)
        return m, (lambda S, R, T: 1.0 + 0 * R), u
    if cfg.family == "a6":
        f, u = acceptance.a6_data(cfg.alpha, b)
        return 1, f, u
    fam = acceptance.harmonic_family(b)
    key = cfg.family
    if key == "re_z1zn" and cfg.n == 1:
        raise ConfigError("re_z1zn needs n = 2")
    m, u = fam[key]
    return m, (lambda S, R, T: 0 * R), u


def cmd_solve(cfg, art: Artifacts, rec: RunRecord):
    P = ConeParams(cfg.beta, cfg.n)
    if cfg.family == "heat-bump":
        dom = BallDomain.at_origin(cfg.n - 1, 1.0)
        g = GridSpec.for_ball(P, dom, cfg.n_s, cfg.n_r, cfg.n_theta)
        u0 = lambda S, R, T: np.clip(1 - R ** 2, 0, None) * (1 + 0.5 * R ** (1 / cfg.beta) * np.cos(T))
        st, hr = solve_cylinder(HeatProblem(g, dom, u0, 0.0, 0.0, T=1.0, tol=cfg.tol,
                                            store=list(np.linspace(0.05, 1.0, 20)), compat_tol=1e-6))
        ly = li_yau_monitor(st, 1.0)
        rec.reports["heat"] = asdict(hr)
        rec.reports["li_yau"] = asdict(ly)
        art.write("li_yau.csv", _csv(zip(ly.times, ly.sup, ly.bound(ly.times), ly.bound(ly.times, ly.C_double, 2)),
                                     ["t", "sup", "bound_N", "bound_2N"]))
        art.write("li_yau.dat", _dat(ly.times, ly.sup))
        write_field(str(art.out / "final.field"), st.slices[-1])
        art.files.append("final.field")
        rec.checks["max_principle"] = hr.max_principle_violation <= 1e-10 * hr.osc
        rec.checks["li_yau"] = ly.violations == 0
        return
    m, f, ue = _family(cfg)
    if m != cfg.n - 1:
        raise ConfigError(f"family {cfg.family} needs n = {m + 1}")
    dom = BallDomain.at_origin(m, 1.0)
    g = GridSpec.for_ball(P, dom, cfg.n_s, cfg.n_r, cfg.n_theta)
    method = "direct" if g.size <= 20000 else "cg"
    u, st = solve_dirichlet(DirichletProblem(g, dom, lambda S, R, T: 4 * f(S, R, T), ue), tol=cfg.tol,
                            method=method)
    err = acceptance._interior_err(u, ue)
    rec.reports["solve"] = {**asdict(st), "sup_error": err}
    write_field(str(art.out / "solution.field"), u)
    art.files.append("solution.field")
    S, R, TH = g.coords()
    sel = u.mask & (np.abs(TH) < 1e-12) & (np.all(np.abs(S) < 0.5 * g.h_s(0), axis=0) if m else True)
    order = np.argsort(R[sel])
    art.write("profile.dat", _dat(R[sel][order], u.values[sel][order]))
    limit = 1e-10 if cfg.family == "euclidean" else 1e-2
    rec.checks["closed_form"] = err <= limit


def cmd_cascade(cfg, art, rec):
    P = ConeParams(cfg.beta, 2)
    a = cfg.alpha
    c = CascadeConfig(ConePoint((0.0,), 2.0 ** -20, 0.0, P), P, lambda S, R, T: R ** a,
                      lambda S, R, T: 4 * R ** (2 + a) / (2 + a) ** 2, depth=cfg.depth, tau=cfg.tau,
                      nodes=(cfg.n_s, cfg.n_r, cfg.n_theta), seed=cfg.seed)
    rep = run_cascade(c)
    if rep.error:
        raise SolverError(rep.error)
    rec.reports["cascade"] = json.loads(rep.to_json())
    rows = [(r.k, r.radius, r.sup_err, r.diff.get("second_ratio", math.nan), r.diff.get("first_ratio", math.nan),
             r.diff.get("weighted_radial_ratio", math.nan)) for r in rep.records]
    art.write("cascade.csv", _csv(rows, ["k", "radius", "sup_err", "second_ratio", "first_ratio",
                                         "weighted_radial_ratio"]))
    art.write("decay.dat", _dat([r.k for r in rep.records], [r.sup_err for r in rep.records]))
    rec.checks["exponent"] = abs(rep.exponent - (2 + a)) <= 0.2
    rec.checks["second_ratio_bounded"] = rep.bounded("second_ratio")


def _band_rows(rep):
    return [(lo, hi, c1, c2, n) for (lo, hi), c1, c2, n in zip(rep.bands, rep.const1, rep.const2, rep.pairs_per_band)]


def cmd_verify_elliptic(cfg, art, rec):
    P = ConeParams(cfg.beta, 2)
    dom = BallDomain.at_origin(1, 1.0)
    g = GridSpec.for_ball(P, dom, cfg.n_s, cfg.n_r, cfg.n_theta)
    f, ue = acceptance.a6_data(cfg.alpha, cfg.beta)
    u, st = solve_dirichlet(DirichletProblem(g, dom, lambda S, R, T: 4 * f(S, R, T), ue), tol=cfg.tol)
    rep = schauder_verify_elliptic(u, f, count=cfg.count, seed=cfg.seed)
    rec.reports["schauder"] = json.loads(rep.to_json())
    art.write("bands.csv", _csv(_band_rows(rep), ["d_lo", "d_hi", "const1", "const2", "pairs"]))
    art.write("bands.dat", _dat([math.sqrt(lo * hi) for lo, hi in rep.bands], rep.const1))
    rec.checks["bounded1"] = rep.bounded1
    rec.checks["bounded2"] = rep.bounded2


def cmd_verify_parabolic(cfg, art, rec):
    P = ConeParams(cfg.beta, 2)
    dom = BallDomain.at_origin(1, 1.0)
    g = GridSpec.for_ball(P, dom, cfg.n_s, cfg.n_r, cfg.n_theta)
    f, ue = acceptance.a6_data(cfg.alpha, cfg.beta)
    us = lambda S, R, T: ue(S, R, T) - 8 * R ** (2 + cfg.alpha) / (2 + cfg.alpha) ** 2
    st, hr = solve_cylinder(HeatProblem(g, dom, us, us, f, T=0.25, dt=0.25 / 32, tol=min(cfg.tol, 1e-10),
                                        store=list(np.linspace(0, 0.25, 17))))
    rep = schauder_verify_parabolic(st, f, count=cfg.count, seed=cfg.seed)
    ly = acceptance.li_yau_experiment(cfg.beta)
    rec.reports["schauder"] = json.loads(rep.to_json())
    rec.reports["li_yau"] = ly
    art.write("bands.csv", _csv(_band_rows(rep), ["d_lo", "d_hi", "const1", "const2", "pairs"]))
    art.write("li_yau.csv", _csv(zip(ly["times"], ly["sup"]), ["t", "sup"]))
    art.write("li_yau.dat", _dat(ly["times"], ly["sup"]))
    rec.checks["bounded1"] = rep.bounded1
    rec.checks["bounded2"] = rep.bounded2
    rec.checks["li_yau"] = ly["violations"] == 0


def cmd_alpha_sweep(cfg, art, rec):
    sw = alpha_sweep(cfg.beta, cfg.alphas, acceptance.sharp_solver(cfg.beta, (cfg.n_s, cfg.n_r, cfg.n_theta)),
                     count=cfg.count, seed=cfg.seed)
    rec.reports["alpha_sweep"] = asdict(sw)
    art.write("alpha_sweep.csv", sw.to_csv())
    art.write("alpha_sweep.dat", _dat(sw.alphas, sw.norms))
    rec.checks["covered"] = sw.covered
    rec.checks["bounded"] = sw.bounded
    rec.checks["blowup"] = sw.blowup


def cmd_riesz(cfg, art, rec):
    c2, slope = beta_sweep(cfg.betas, acceptance.blowup_field(0.75)[0])
    gap = acceptance.riesz_fd_gap(cfg.betas[len(cfg.betas) // 2], cfg.n_r)
    rec.reports["riesz"] = {"betas": cfg.betas, "c2": c2.tolist(), "slope": slope, **gap}
    art.write("c2.csv", _csv(zip(cfg.betas, c2), ["beta", "C2"]))
    art.write("c2.dat", _dat(np.log(2 * np.asarray(cfg.betas) - 1), np.log(c2)))
    rec.checks["slope"] = -1.3 <= slope <= -0.7
    rec.checks["riesz_vs_fd"] = gap["gap"] <= 1e-3 or gap["gap"] <= 10 * gap["fd_error"]


def cmd_convergence(cfg, art, rec):
    rows = []
    ok = True
    for b in cfg.betas:
        for name, (dim, ex) in acceptance.harmonic_family(b).items():
            sizes = (9, 17, 33, 65) if dim else (16, 32, 64, 128)
            e = acceptance.convergence_study(b, name, ex, dim, sizes)
            rows += [(b, name, n, x) for n, x in zip(sizes, e)]
            ok &= all(x > y for x, y in zip(e, e[1:])) and e[-1] <= 1e-2
    art.write("convergence.csv", _csv(rows, ["beta", "family", "n", "sup_error"]))
    art.write("convergence.dat", _dat([r[2] for r in rows], [r[3] for r in rows]))
    rec.reports["convergence"] = [list(r) for r in rows]
    rec.checks["monotone_and_small"] = ok


def _run_check(name):
    return acceptance.CHECKS[name]()


def cmd_acceptance(cfg, art, rec, jobs: int = 1):
    if jobs > 1 and len(cfg.checks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_check, cfg.checks))
    else:
        results = acceptance.run_all(cfg.checks)
    rows = []
    for r in results:
        print(r.line())
        rec.reports[r.name] = asdict(r)
        rec.checks[r.name] = r.passed
        rows.append((r.name, "pass" if r.passed else "fail", r.runtime))
    art.write("acceptance.csv", _csv(rows, ["check", "verdict", "runtime"]))


HANDLERS = {
    "solve": cmd_solve, "cascade": cmd_cascade, "verify-elliptic": cmd_verify_elliptic,
    "verify-parabolic": cmd_verify_parabolic, "alpha-sweep": cmd_alpha_sweep, "riesz-1d": cmd_riesz,
    "convergence": cmd_convergence,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conelab", description="Conical Laplacian and heat experiments")
    ap.add_argument("command", nargs="?", choices=COMMANDS + ("list-presets",),
                    help="subcommand (defaults to the preset's own)")
    ap.add_argument("--config", type=Path, help="INI-style config file")
    ap.add_argument("--preset", help="named preset used as the base configuration")
    ap.add_argument("--seed", type=int, help="override the configured seed")
    ap.add_argument("--out", type=Path, help="output directory (default runs/<name>-<hash>)")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for acceptance runs")
    return ap


def resolve_config(args) -> ExperimentConfig:
    base = ExperimentConfig()
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}")
        base = PRESETS[args.preset][1]
    if args.config:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        base = ExperimentConfig.from_ini(text, base)
    if args.command:
        base = replace(base, command=args.command)
    if args.seed is not None:
        base = replace(base, seed=args.seed)
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    return base.validate()


def _error_record(kind: str, exc: Exception) -> dict:
    return {"kind": kind, "type": type(exc).__name__, "message": str(exc)}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-presets":
        for name, desc in list_presets():
            print(f"{name}\t{desc}")
        return EXIT_OK
    try:
        cfg = resolve_config(args)
    except (ConfigError, ParameterError, GridError) as exc:
        print(json.dumps(_error_record("config", exc)), file=sys.stderr)
        return EXIT_CONFIG
    h = cfg.config_hash()
    out = args.out or Path("runs") / f"{cfg.name}-{h[:12]}"
    art = Artifacts(out)
    rec = RunRecord(h, cfg.to_dict(), datetime.now(timezone.utc).isoformat())
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        if cfg.command == "acceptance":
            cmd_acceptance(cfg, art, rec, args.jobs)
        else:
            HANDLERS[cfg.command](cfg, art, rec)
        if not rec.passed:
            code = EXIT_CHECK
    except (ConfigError, ParameterError, GridError) as exc:
        rec.error = _error_record("config", exc)
        code = EXIT_CONFIG
    except (SolverError, QuadratureError, np.linalg.LinAlgError) as exc:
        rec.error = _error_record("solver", exc)
        code = EXIT_SOLVER
    rec.finished = datetime.now(timezone.utc).isoformat()
    rec.reports["wall_time"] = time.perf_counter() - t0
    art.write("report.json", json.dumps(_jsonable(asdict(rec)), sort_keys=True, indent=2))
    if rec.error:
        print(json.dumps(rec.error), file=sys.stderr)
    status = "PASS" if code == EXIT_OK else "FAIL"
    print(f"{cfg.name}: {status} -> {out / 'report.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
