"""Command-line entry point: ``ringcap {solve,green,planecap,verify,oracle}``.

Reports are JSON (stdout unless ``--out`` is given) and tables are CSV
(``--csv``). Diagnostics go to stderr. Exit codes: 0 success, 2 bad domain or
configuration, 3 convergence or topology failure, 4 a ``verify`` run with a
failing check whose hypotheses hold.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import numpy as np

from . import __version__
from .convexgeom import ConvexBody
from .errors import (ConvergenceError, MonotonicityError, RingcapError, TopologyError)
from .greenfn import GreenParams, green_report
from .levelflow import profile_derivatives, sweep_levels
from .oracle import (RadialConfig, annulus_capacity, annulus_potential, check_p, disk_green)
from .planecap import PlaneCapRequest, pcap_plane
from .plaplace import SolveParams, capacity, solve_potential
from .ringmesh import RingDomain, build_ring_mesh, mesh_quality
from .verify import (FAIL, RingPipeline, analyze_green, analyze_ring, check_isoperimetry,
                     check_longinetti, check_theorem22, random_rings, solve_ring, calibrate_ring,
                     write_checks_csv)

log = logging.getLogger("ringcap")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4
SUITES = ("longinetti", "theorem22", "isoperimetry", "green", "ring", "all")


class ConfigError(RingcapError, ValueError):
    """Invalid command-line or config-file setting."""


@dataclass
class RunConfig:
    command: str
    domain: Optional[str] = None
    p: List[float] = field(default_factory=lambda: [2.0])
    mesh: tuple = (256, 64)
    n_t: int = 21
    grading: object = "geometric"
    out: Optional[str] = None
    csv: Optional[str] = None
    seed: int = 0
    suite: str = "all"
    random_rings: int = 0
    pole: Optional[tuple] = None
    radii: Optional[tuple] = None
    threads: int = 1

    def __post_init__(self):
        for p in self.p:
            check_p(p)
        n_phi, n_s = self.mesh
        if n_phi < 16 or n_s < 4:
            raise ConfigError(f"mesh {n_phi}x{n_s} is below the minimum 16x4")
        if self.n_t < 9:
            raise ConfigError("--levels must be at least 9")
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}")
        if self.random_rings < 0 or self.threads < 1:
            raise ConfigError("--random-rings must be >= 0 and RINGCAP_THREADS >= 1")

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        obj = dict(obj)
        for k in ("mesh", "pole", "radii"):
            if obj.get(k) is not None:
                obj[k] = tuple(obj[k])
        return cls(**obj)

    def to_json(self) -> dict:
        d = asdict(self)
        d["mesh"] = list(self.mesh)
        d["version"] = __version__
        return d


# -- parsing --------------------------------------------------------------

def _mesh(s: str) -> tuple:
    try:
        a, b = s.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"mesh must look like 256x64, got {s!r}")


def _grading(s: str):
    if s == "geometric":
        return s
    try:
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError("grading is 'geometric' or a positive number")


def _common(sp, levels=True):
    sp.add_argument("--domain", required=True, help="domain-spec JSON file")
    sp.add_argument("--p", type=float, nargs="+", default=[2.0], help="exponent(s) in (1, 2]")
    sp.add_argument("--mesh", type=_mesh, default=(256, 64), help="n_phi x n_s, e.g. 256x64")
    if levels:
        sp.add_argument("--levels", type=int, default=21, dest="n_t", help="interior level count")
    sp.add_argument("--grading", type=_grading, default="geometric")
    sp.add_argument("--out", help="JSON report path (default: stdout)")
    sp.add_argument("--csv", help="CSV table path")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ringcap", description="p-capacity of convex rings")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="capacity and level profile of a ring")
    _common(sp)

    sp = sub.add_parser("green", help="Green function, Robin constant and level profile")
    _common(sp)
    sp.add_argument("--pole", type=float, nargs=2, help="pole (default: body centre or ring ref)")

    sp = sub.add_parser("planecap", help="whole-plane capacity of a convex body")
    _common(sp, levels=False)
    sp.add_argument("--radii", type=float, nargs="+", help="outer disk radii (increasing)")

    sp = sub.add_parser("verify", help="run inequality check suites")
    sp.add_argument("--suite", choices=SUITES, default="all")
    sp.add_argument("--domain", help="ring JSON (omit with --random-rings)")
    sp.add_argument("--p", type=float, nargs="+", default=[2.0])
    sp.add_argument("--mesh", type=_mesh, default=(256, 64))
    sp.add_argument("--levels", type=int, default=21, dest="n_t")
    sp.add_argument("--grading", type=_grading, default="geometric")
    sp.add_argument("--random-rings", type=int, default=0, metavar="N")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="JSON summary path (default: stdout)")
    sp.add_argument("--csv", help="per-level CSV path")

    sp = sub.add_parser("oracle", help="closed-form values")
    osub = sp.add_subparsers(dest="oracle", required=True)
    o = osub.add_parser("annulus", help="annulus capacity (and potential at --s)")
    o.add_argument("--r", type=float, required=True)
    o.add_argument("--R", type=float, required=True)
    o.add_argument("--p", type=float, required=True)
    o.add_argument("--s", type=float, help="radius at which to print the potential")
    o = osub.add_parser("disk-green", help="Green function of the disk D(0,R) with centred pole")
    o.add_argument("--R", type=float, required=True)
    o.add_argument("--p", type=float, required=True)
    o.add_argument("--s", type=float, required=True)
    return ap


def _threads() -> int:
    raw = os.environ.get("RINGCAP_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"RINGCAP_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ConfigError("RINGCAP_THREADS must be >= 1")
    return n


def config_from_args(args) -> RunConfig:
    d = {"command": args.command}
    for k in ("domain", "p", "mesh", "n_t", "grading", "out", "csv", "seed", "suite",
              "random_rings", "pole", "radii"):
        v = getattr(args, k, None)
        if v is not None:
            d[k] = tuple(v) if k in ("pole", "radii") else v
    d["threads"] = _threads()
    return RunConfig.from_dict(d)


# -- helpers --------------------------------------------------------------

def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}")


def load_ring(path: str) -> RingDomain:
    obj = _load_json(path)
    if not isinstance(obj, dict) or "inner" not in obj or "outer" not in obj:
        raise ConfigError(f"{path} is not a ring spec {{'inner': ..., 'outer': ...}}")
    return RingDomain.from_json(obj)


def load_body(path: str, role: str):
    """A single body, or the ``role`` body ('inner' or 'outer') of a ring spec, plus the ring ref."""
    obj = _load_json(path)
    if isinstance(obj, dict) and "kind" in obj:
        body = ConvexBody.from_json(obj)
        return body, tuple(body.center)
    ring = RingDomain.from_json(obj)
    return getattr(ring, role), tuple(ring.ref)


def _emit(report: dict, out: Optional[str]) -> None:
    text = json.dumps(report, indent=2, sort_keys=True, default=_jsonable)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text + "\n")


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"not JSON serialisable: {type(x).__name__}")


def _single_p(cfg: RunConfig) -> float:
    if len(cfg.p) != 1:
        raise ConfigError(f"'{cfg.command}' takes a single --p")
    return cfg.p[0]


# -- commands -------------------------------------------------------------

def cmd_solve(cfg: RunConfig) -> int:
    p = _single_p(cfg)
    ring = load_ring(cfg.domain)
    mesh = build_ring_mesh(ring, *cfg.mesh, cfg.grading)
    u = solve_potential(mesh, SolveParams(p))
    rep = capacity(mesh, u, p)
    prof = profile_derivatives(sweep_levels(mesh, u, cfg.n_t), cap=rep.cap_energy)
    q = mesh_quality(mesh)
    out = {"config": cfg.to_json(), "domain": ring.to_json(), **rep.to_json(),
           "mesh_quality": q._asdict(), "profile": {"t": prof.t, "A": prof.A, "L": prof.L,
                                                    "flux": prof.meta.get("flux")}}
    _emit(out, cfg.out)
    if cfg.csv:
        prof.write_csv(cfg.csv)
    log.info("cap_energy %.10g  cap_flux %.10g", rep.cap_energy, rep.cap_flux)
    return EXIT_OK


def cmd_green(cfg: RunConfig) -> int:
    p = _single_p(cfg)
    body, ref = load_body(cfg.domain, "outer")
    params = GreenParams(cfg.pole or ref, p, n_phi=cfg.mesh[0], n_s=cfg.mesh[1], n_t=cfg.n_t,
                         grading=cfg.grading)
    rep = green_report(body, params)
    out = {"config": cfg.to_json(), **rep.to_json(),
           "profile": {"t": rep.profile.t, "Ag": rep.Ag, "Lg": rep.Lg}}
    _emit(out, cfg.out)
    if cfg.csv:
        rep.profile.write_csv(cfg.csv)
    return EXIT_OK


def cmd_planecap(cfg: RunConfig) -> int:
    body, _ = load_body(cfg.domain, "inner")
    reports = []
    for p in cfg.p:
        req = PlaneCapRequest(body, p, R_seq=cfg.radii, n_phi=cfg.mesh[0], n_s=cfg.mesh[1],
                              grading=cfg.grading)
        reports.append(pcap_plane(req).to_json())
    _emit({"config": cfg.to_json(), "results": reports}, cfg.out)
    if cfg.csv:
        with open(cfg.csv, "w") as fh:
            fh.write("p,R,cap,F\n")
            for r in reports:
                for R, c, F in zip(r["R_seq"], r["caps"], r["F_sequence"]):
                    fh.write(f"{r['config']['p']:.12g},{R:.12g},{c:.12g},{F:.12g}\n")
    return EXIT_OK


def _ring_suite(ring: RingDomain, p: float, pipe: RingPipeline, suite: str):
    if suite in ("ring", "all"):
        return analyze_ring(ring, p, pipe).checks
    _, _, rep, d, comp = solve_ring(ring, p, pipe)
    cal = calibrate_ring(ring, p, pipe)
    if suite == "longinetti":
        return check_longinetti(d, p, cal, comp)
    if suite == "theorem22":
        inner_circle = ring.inner.kind == "disk"
        concentric = ring.is_concentric_annulus
        if not (inner_circle or concentric):
            log.warning("theorem22 suite: no hypothesis holds for this ring; nothing checked")
            return []
        return check_theorem22(d, p, inner_circle, concentric, cal, comp)
    return check_isoperimetry(d, rep.cap_energy, p, None, cal)


def _verify_one(job):
    label, ring_json, p, pipe, suite, n_t = job
    ring = RingDomain.from_json(ring_json)
    checks = []
    if suite != "green":
        checks += _ring_suite(ring, p, pipe, suite)
    if suite in ("green", "all"):
        params = GreenParams(ring.ref, p, n_phi=pipe.n_phi, n_s=pipe.n_s, n_t=n_t,
                             grading=pipe.grading)
        checks += analyze_green(ring.outer, params).checks
    return label, p, checks


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.random_rings:
        if cfg.domain:
            raise ConfigError("give either --domain or --random-rings, not both")
        rings = [(f"random{i:02d}", r) for i, r in enumerate(random_rings(cfg.random_rings, cfg.seed))]
    elif cfg.domain:
        rings = [(os.path.basename(cfg.domain), load_ring(cfg.domain))]
    else:
        raise ConfigError("verify needs --domain or --random-rings")
    pipe = RingPipeline(cfg.mesh[0], cfg.mesh[1], cfg.grading, cfg.n_t)
    jobs = [(label, r.to_json(), p, pipe, cfg.suite, cfg.n_t) for label, r in rings for p in cfg.p]
    if cfg.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as ex:
            results = list(ex.map(_verify_one, jobs))
    else:
        results = [_verify_one(j) for j in jobs]

    configs, n_fail, all_checks = [], 0, []
    for (label, p, checks), job in zip(results, jobs):
        fails = [c for c in checks if c.verdict == FAIL and c.counts]
        n_fail += len(fails)
        for c in checks:
            log.info("%-12s p=%-4g %-30s %-14s min %+.3e%s", label, p, c.name, c.verdict,
                     c.min_margin, "" if c.hypothesis_met else "  (hypothesis not met)")
        configs.append({"label": label, "p": p, "domain": job[1],
                        "checks": [c.to_json() for c in checks]})
        all_checks.append((f"{label}/p={p:g}", checks))
    report = {"config": cfg.to_json(), "pipeline": pipe.to_json(), "n_configs": len(configs),
              "n_fail": n_fail, "configs": configs}
    _emit(report, cfg.out)
    if cfg.csv:
        write_checks_csv(cfg.csv, [c for _, cs in all_checks for c in cs],
                         label=[lab for lab, cs in all_checks for _ in cs])
    if n_fail:
        log.error("%d failing check(s) with hypotheses met", n_fail)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_oracle(args) -> int:
    p = check_p(args.p)
    if args.oracle == "annulus":
        cfg = RadialConfig(args.r, args.R, p)
        print(f"{annulus_capacity(cfg):.12g}")
        if args.s is not None:
            print(f"{float(annulus_potential(args.s, cfg)):.12g}")
    else:
        print(f"{float(disk_green(args.s, args.R, p)):.12g}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "green": cmd_green, "planecap": cmd_planecap, "verify": cmd_verify}


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with exit 2
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.command == "oracle":
            return cmd_oracle(args)
        cfg = config_from_args(args)
        try:
            from threadpoolctl import threadpool_limits
        except ImportError:  # pragma: no cover
            return COMMANDS[cfg.command](cfg)
        with threadpool_limits(cfg.threads):
            return COMMANDS[cfg.command](cfg)
    except (ConvergenceError, TopologyError, MonotonicityError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_NUMERIC
    except (RingcapError, KeyError, ValueError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
