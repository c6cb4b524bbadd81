"""Command-line driver: ``catgrav <subcommand> --config run.json --out DIR``.

Exit codes: 0 all tolerances met, 1 numerical tolerance violated, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .modes import BoxGeometry, ModeBasis, SpacetimePoint, build_box_modes
from .moments import DEFAULT_ORDER_CAP, central_moment, kuo_ford_delta
from .oracle import (
    TruncatedFock,
    displacement_commutator_deviation,
    coherent_state_vector,
)
from .states import (
    CatState,
    CoherentAmplitude,
    cat_normalize,
    coherent_overlap,
    epsilon,
    phase_cat,
    state_from_json,
)
from .verify import compare_with_oracle, mode_checks, random_amplitude, random_polynomial

log = logging.getLogger("catgrav")

DEFAULTS = {
    "basis": {"d": 1, "L": 2 * math.pi, "mass": 1.0, "zeta": 0.0, "max_index": 1},
    "state": None,
    "sweep": None,
    "points": [{"t": 0.0, "x": [0.0]}, {"t": 0.4, "x": [1.3]}],
    "components": [[0, 0], [0, 1]],
    "orders": [2, 3, 4],
    "order_cap": DEFAULT_ORDER_CAP,
    "lower": True,
    "quadrature_points": None,
    "corrupt_omega": 0.0,
    "oracle": {"enabled": True, "cases": 20, "cutoff_1mode": 40, "cutoff_2mode": 12, "max_alpha": 1.5, "max_degree": 4},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    raw: dict
    basis: ModeBasis
    points: list[SpacetimePoint]
    components: list[tuple[int, int]]

    @property
    def hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    raw: dict = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    cfg = _merge(DEFAULTS, raw)
    cfg = _merge(cfg, overrides or {})
    try:
        b = cfg["basis"]
        if "indices" in b:
            basis = ModeBasis.from_json(b)
        else:
            basis = build_box_modes(BoxGeometry(int(b["d"]), float(b["L"])), float(b["mass"]), float(b["zeta"]), int(b["max_index"]))
        points = [SpacetimePoint.from_json(p) for p in cfg["points"]]
        comps = [(int(c[0]), int(c[1])) for c in cfg["components"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    if not points or not comps:
        raise ConfigError("points and components must be nonempty")
    for p in points:
        if len(p.x) != basis.d:
            raise ConfigError(f"point {p} does not match d={basis.d}")
    for mu, nu in comps:
        if not (0 <= mu <= basis.d and 0 <= nu <= basis.d):
            raise ConfigError(f"component {(mu, nu)} out of range")
    return RunConfig(cfg, basis, points, comps)


def _direction(cfg: dict, basis: ModeBasis) -> np.ndarray:
    spec = cfg.get("direction")
    if spec is None:
        v = np.ones(len(basis), dtype=complex)
    else:
        v = np.array([complex(z["re"], z.get("im", 0.0)) if isinstance(z, dict) else complex(z) for z in spec])
        if v.shape != (len(basis),):
            raise ConfigError("sweep direction length must equal the basis size")
    n = np.linalg.norm(v)
    if n == 0:
        raise ConfigError("sweep direction is zero")
    return v / n


def states_from_config(rc: RunConfig) -> list[tuple[dict, CoherentAmplitude | CatState]]:
    """(parameters, state) pairs, either one explicit state or a sweep."""
    cfg = rc.raw
    if cfg.get("sweep"):
        sw = cfg["sweep"]
        norms = sw.get("norm2") or []
        if not norms:
            raise ConfigError("sweep.norm2 must be a nonempty list")
        kind = sw.get("kind", "equal")
        thetas = sw.get("theta") or [None]
        u = _direction(sw, rc.basis)
        out = []
        for s in norms:
            alpha = CoherentAmplitude(rc.basis, math.sqrt(float(s)) * u)
            for th in thetas:
                if kind == "coherent":
                    out.append(({"norm2": s, "theta": None}, alpha))
                elif kind == "phase":
                    if th is None:
                        raise ConfigError("phase sweep needs sweep.theta")
                    out.append(({"norm2": s, "theta": th}, phase_cat(float(th), alpha)))
                elif kind == "equal":
                    out.append(({"norm2": s, "theta": None}, cat_normalize(1, 1, alpha)))
                else:
                    raise ConfigError(f"unknown sweep kind {kind!r}")
                if kind != "phase":
                    break
        return out
    if cfg.get("state") is None:
        raise ConfigError("config needs either 'state' or 'sweep'")
    try:
        st = state_from_json(cfg["state"], rc.basis)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid state: {exc}") from exc
    alpha = st.alpha if isinstance(st, CatState) else st
    return [({"norm2": alpha.norm2, "theta": getattr(st, "theta", None)}, st)]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _pt(p: SpacetimePoint) -> str:
    return ";".join(_fmt(v) for v in (p.t,) + p.x)


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def _eps_of(state) -> float | None:
    return epsilon(state.alpha) if isinstance(state, CatState) else None


def _eps(state) -> float:
    return epsilon(state.alpha if isinstance(state, CatState) else state)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_report(path: Path, rc: RunConfig, results: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"version": __version__, "config_hash": rc.hash, "results": results}
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def cmd_validate_modes(rc: RunConfig, out: Path, args) -> int:
    checks = mode_checks(
        rc.basis,
        seed=args.seed,
        corrupt_omega=float(rc.raw.get("corrupt_omega") or 0.0),
        quadrature_points=rc.raw.get("quadrature_points"),
    )
    results = [{"check": c.name, "value": c.value, "tolerance": c.tolerance, "passed": c.passed} for c in checks]
    _write_report(out / "validate_modes.json", rc, results)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.3e} (tol {c.tolerance:g})")
    return 0 if all(c.passed for c in checks) else 1


def _slot_grid(rc: RunConfig):
    return [(c, p) for p in rc.points for c in rc.components]


def _delta_rows(rc: RunConfig, args) -> list[list[str]]:
    slots = _slot_grid(rc)
    lower = bool(rc.raw.get("lower", True))
    jobs = [
        (params, st, i, j)
        for params, st in states_from_config(rc)
        for i in range(len(slots))
        for j in range(i, len(slots))
    ]

    def run(job):
        params, st, i, j = job
        res = kuo_ford_delta(st, slots[i], slots[j], lower=lower)
        return [
            _fmt(params["norm2"]), _fmt(_eps(st)),
            _fmt(params["theta"]),
            f"{slots[i][0][0]}{slots[i][0][1]}", _pt(slots[i][1]),
            f"{slots[j][0][0]}{slots[j][0][1]}", _pt(slots[j][1]),
            str(res), "1" if res.coincident else "0",
        ]

    rows = _map(run, jobs, args.threads)
    return sorted(rows, key=lambda r: tuple(r[:7]))


DELTA_HEADER = ["|alpha|2", "epsilon", "theta", "comp_a", "point_a", "comp_b", "point_b", "delta", "coincident"]
MOMENT_HEADER = ["|alpha|2", "epsilon", "theta", "n", "components", "points", "re_mu_n", "im_mu_n", "mu_n_over_eps"]


def cmd_delta(rc: RunConfig, out: Path, args) -> int:
    rows = _delta_rows(rc, args)
    _write_csv(out / "delta.csv", DELTA_HEADER, rows)
    print(f"wrote {len(rows)} rows to {out / 'delta.csv'}")
    return 0


def _moment_rows(rc: RunConfig, args) -> list[list[str]]:
    cap = int(rc.raw.get("order_cap", DEFAULT_ORDER_CAP))
    orders = [int(n) for n in rc.raw.get("orders", [2])]
    if not orders:
        raise ConfigError("orders must be nonempty")
    if max(orders) > cap:
        raise ConfigError(f"requested order {max(orders)} exceeds order_cap {cap}")
    lower = bool(rc.raw.get("lower", True))
    jobs = [(params, st, n, c) for params, st in states_from_config(rc) for n in orders for c in rc.components]

    def run(job):
        params, st, n, comp = job
        pts = [rc.points[j % len(rc.points)] for j in range(n)]
        val = central_moment(st, [(comp, p) for p in pts], cap=cap, lower=lower)
        eps = _eps_of(st)
        return [
            _fmt(params["norm2"]), _fmt(_eps(st)), _fmt(params["theta"]),
            str(n), f"{comp[0]}{comp[1]}", "|".join(_pt(p) for p in pts),
            _fmt(val.real), _fmt(val.imag), _fmt(abs(val) / eps) if eps else "",
        ]

    rows = _map(run, jobs, args.threads)
    return sorted(rows, key=lambda r: (float(r[0]), r[2], int(r[3]), r[4]))


def cmd_moments(rc: RunConfig, out: Path, args) -> int:
    rows = _moment_rows(rc, args)
    _write_csv(out / "moments.csv", MOMENT_HEADER, rows)
    print(f"wrote {len(rows)} rows to {out / 'moments.csv'}")
    return 0


def cmd_sweep(rc: RunConfig, out: Path, args) -> int:
    cmd_delta(rc, out, args)
    return cmd_moments(rc, out, args)


def cmd_oracle_compare(rc: RunConfig, out: Path, args) -> int:
    oc = rc.raw.get("oracle") or {}
    if not oc.get("enabled", True):
        raise ConfigError("oracle disabled in config")
    rng = np.random.default_rng(args.seed)
    basis = rc.basis
    max_alpha = float(oc.get("max_alpha", 1.5))
    results = []
    ok = True

    sub1 = ModeBasis(basis.geometry, basis.mass, basis.zeta, basis.indices[:1])
    sub2 = ModeBasis(basis.geometry, basis.mass, basis.zeta, basis.indices[:2]) if len(basis) >= 2 else None
    suites = [(sub1, int(oc.get("cutoff_1mode", 40)))]
    if sub2 is not None:
        suites.append((sub2, int(oc.get("cutoff_2mode", 12))))

    for b, N in suites:
        space = TruncatedFock(len(b), N)
        if not space.dense:
            raise ConfigError(f"cutoff {N} with {len(b)} modes exceeds the dense budget")
        for case in range(int(oc.get("cases", 20))):
            p = random_polynomial(rng, b.d, max_degree=int(oc.get("max_degree", 4)))
            a = random_amplitude(rng, b, max_alpha)
            c = random_amplitude(rng, b, max_alpha)
            asg = {lab: SpacetimePoint(rng.uniform(-2, 2), tuple(rng.uniform(0, b.geometry.L, b.d))) for lab in ("x", "y")}
            try:
                r = compare_with_oracle(p, a, c, asg, N)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            ok &= r.passed
            results.append({
                "check": f"substitution_{len(b)}mode_{case}",
                "closed": [r.closed.real, r.closed.imag],
                "oracle": [r.oracle.real, r.oracle.imag],
                "deviation": r.deviation,
                "truncation_bound": r.truncation_bound,
                "tolerance": r.tolerance,
                "passed": r.passed,
            })

        # overlap <0|D(alpha)^dag D(-alpha)|0> vs exp(-2|alpha|^2)
        a = random_amplitude(rng, b, max_alpha)
        v1 = coherent_state_vector(a, space, 1e-4)
        v2 = coherent_state_vector(-a, space, 1e-4)
        dev = float(abs(np.vdot(v1, v2) - coherent_overlap(a, -a)))
        passed = bool(dev <= 1e-8)
        ok &= passed
        results.append({"check": f"overlap_{len(b)}mode", "deviation": dev, "tolerance": 1e-8, "passed": passed})

    N1 = int(oc.get("cutoff_1mode", 40))
    a = random_amplitude(rng, sub1, max_alpha)
    dev = displacement_commutator_deviation(a, TruncatedFock(1, N1))
    passed = bool(dev <= 1e-8)
    ok &= passed
    results.append({"check": "displacement_commutator", "deviation": dev, "tolerance": 1e-8, "passed": passed})

    _write_report(out / "oracle_compare.json", rc, results)
    worst = max(r["deviation"] for r in results)
    print(f"{'PASS' if ok else 'FAIL'} oracle-compare: {len(results)} checks, max deviation {worst:.3e}")
    return 0 if ok else 1


COMMANDS = {
    "validate-modes": cmd_validate_modes,
    "delta": cmd_delta,
    "moments": cmd_moments,
    "oracle-compare": cmd_oracle_compare,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="catgrav", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
    ap.add_argument("--mass", type=float, help="override basis.mass")
    ap.add_argument("--zeta", type=float, help="override basis.zeta")
    ap.add_argument("--max-index", type=int, help="override basis.max_index")
    ap.add_argument("--corrupt-omega", type=float, help="shift frequencies off shell (negative control)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    overrides: dict = {"basis": {}}
    if args.mass is not None:
        overrides["basis"]["mass"] = args.mass
    if args.zeta is not None:
        overrides["basis"]["zeta"] = args.zeta
    if args.max_index is not None:
        overrides["basis"]["max_index"] = args.max_index
    if args.corrupt_omega is not None:
        overrides["corrupt_omega"] = args.corrupt_omega
    try:
        rc = load_config(args.config, overrides)
        return COMMANDS[args.command](rc, Path(args.out), args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
