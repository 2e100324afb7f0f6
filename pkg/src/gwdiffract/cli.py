"""Command-line front end.

Usage::

    gwd <command> [--config scenario.json] [--out DIR] [--threads N] [--seed S]
    gwd run --config scenario.json

The scenario is strict JSON: unknown keys, and sections that do not belong to
the command, are rejected.  Every run writes ``manifest.json`` and
``report.json`` into the output directory; solver commands also write field
snapshots as CSV under ``fields/``.

Exit codes: 0 success, 1 configuration error, 2 solver failure (blow-up,
instability, non-convergence), 3 verification failure.  Diagnostics go to
standard error as one JSON object.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import logging
import math
import os
import sys
import time
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import SolverError

__all__ = ["main", "Scenario", "ScenarioError", "load_scenario", "run_scenario", "COMMANDS"]

log = logging.getLogger("gwdiffract")

COMMANDS = (
    "solve-hs",
    "solve-parabolic",
    "solve-einstein",
    "solve-colliding",
    "verify-ricci",
    "verify-action",
    "classify",
    "converge",
)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3


class ScenarioError(ValueError):
    """Invalid scenario; maps to exit code 1."""


class VerificationFailure(RuntimeError):
    """A defect exceeded its threshold; maps to exit code 3."""

    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


# -- scenario schema ----------------------------------------------------------------


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _interval(v):
    if len(v) != 2 or not (math.isfinite(v[0]) and math.isfinite(v[1])) or v[1] <= v[0]:
        raise ValueError("interval must be [lo, hi] with lo < hi")
    return v


class GridSpec(_Strict):
    theta: list[float] = [0.0, 1.0]
    v: list[float] = [0.0, 1.0]
    eta: list[float] = [-1.0, 1.0]
    n_theta: int = Field(65, ge=3)
    n_v: int = Field(65, ge=2)
    n_eta: int = Field(1, ge=1)

    _check = field_validator("theta", "v", "eta")(_interval)

    def build(self):
        from .grid import Grid3, build_grid

        if self.n_eta == 1:
            return Grid3.plane(self.theta, self.v, self.n_theta, self.n_v, self.eta[0])
        return build_grid([self.theta, self.eta, self.v], [self.n_theta, self.n_eta, self.n_v])


class ProfileSpec(_Strict):
    name: str
    params: dict[str, float] = {}


class OptionsSpec(_Strict):
    tol: float = Field(1e-12, gt=0)
    max_iter: int = Field(50, ge=1)
    damping: float = Field(1.0, gt=0, le=1)
    fallback_damping: float = Field(0.5, gt=0, le=1)
    blowup_cap: float = Field(30.0, gt=0)
    gradient_cap: float = Field(1e6, gt=0)
    constraint_tol: float = Field(5e-2, gt=0)
    require_constraint: bool = True
    constraint_drift: Optional[float] = Field(None, gt=0)
    eta_bc: Optional[Literal["one-sided", "periodic"]] = None

    def march(self):
        from .goursat import MarchOptions

        return MarchOptions(self.tol, self.max_iter, self.damping, self.fallback_damping)


class StudySpec(_Strict):
    target: Literal["einstein-mms", "constraint-pulse", "colliding-exact", "hs-exact",
                    "parabolic-plane-wave", "linearization", "stationarity"]
    ladder: Optional[list[int]] = None
    eps: Optional[list[float]] = None
    n_probes: int = Field(10, ge=1)
    min_order: float = 1.7
    max_order: float = 2.3


class RicciSpec(_Strict):
    n_points: int = Field(100, ge=1)
    step: float = Field(1e-4, gt=0)
    amplitude: float = Field(0.5, gt=0)
    tolerance: float = Field(1e-6, gt=0)
    zero_tolerance: float = Field(1e-10, gt=0)
    match_points: int = Field(20, ge=1)
    match_tolerance: float = Field(1e-9, gt=0)
    factor_spread: float = Field(0.01, gt=0)


class ActionSpec(_Strict):
    n_probes: int = Field(10, ge=1)
    step: float = Field(1e-5, gt=0)
    tolerance: Optional[float] = Field(None, gt=0)


class SystemSpec(_Strict):
    name: str
    params: dict = {}


class SampleSpec(_Strict):
    g0: Optional[list[list[float]]] = None
    n_random_g0: int = Field(0, ge=0)
    g0_range: list[float] = [-0.5, 0.5]
    directions: Optional[list[list[float]]] = None
    n_random_directions: int = Field(0, ge=0)
    kernel_tol: float = Field(1e-8, gt=0)
    lambda_tol: float = Field(1e-10, gt=0)
    expect: Optional[str] = None

    _check = field_validator("g0_range")(_interval)


class Scenario(_Strict):
    command: Literal[COMMANDS]  # type: ignore[valid-type]
    grid: Optional[GridSpec] = None
    profile: Optional[ProfileSpec] = None
    options: OptionsSpec = OptionsSpec()
    study: Optional[StudySpec] = None
    ricci: Optional[RicciSpec] = None
    action: Optional[ActionSpec] = None
    system: Optional[SystemSpec] = None
    samples: Optional[SampleSpec] = None
    output: Optional[str] = None
    seed: int = Field(0, ge=0, lt=2**64)
    threads: Optional[int] = Field(None, ge=1)


_SECTIONS = {
    "solve-hs": {"grid", "profile", "options"},
    "solve-parabolic": {"grid", "profile", "options"},
    "solve-einstein": {"grid", "profile", "options"},
    "solve-colliding": {"grid", "profile", "options"},
    "verify-ricci": {"ricci"},
    "verify-action": {"grid", "profile", "options", "action"},
    "classify": {"system", "samples"},
    "converge": {"study", "options"},
}
_COMMON = {"command", "output", "seed", "threads"}

_DEFAULT_PROFILE = {
    "solve-hs": "hs-exact",
    "solve-parabolic": "parabolic-plane-wave",
    "solve-einstein": "zero",
    "solve-colliding": "colliding-exact",
    "verify-action": "pulse",
}
_PROFILE_KIND = {
    "solve-hs": "wave",
    "solve-parabolic": "wave",
    "solve-einstein": "einstein",
    "solve-colliding": "colliding",
    "verify-action": "einstein",
}
_DEFAULT_GRID = {
    "solve-hs": GridSpec(),
    "solve-parabolic": GridSpec(eta=[0.0, 2.0 * math.pi], n_theta=33, n_eta=33, n_v=257),
    "solve-einstein": GridSpec(eta=[-4.0, 4.0], n_theta=33, n_eta=33, n_v=161),
    "solve-colliding": GridSpec(),
    "verify-action": GridSpec(eta=[-4.0, 4.0], n_theta=33, n_eta=33, n_v=161),
}


def load_scenario(raw: dict, command: str | None = None) -> Scenario:
    """Validate a scenario dict; ``command`` from the command line fills or must match it."""
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")
    raw = dict(raw)
    if command is not None:
        if "command" in raw and raw["command"] != command:
            raise ScenarioError(f"scenario command {raw['command']!r} does not match {command!r}")
        raw["command"] = command
    if "command" not in raw:
        raise ScenarioError("missing command")
    cmd = raw["command"]
    if cmd not in COMMANDS:
        raise ScenarioError(f"unknown command {cmd!r}; expected one of {list(COMMANDS)}")
    stray = set(raw) - _COMMON - _SECTIONS[cmd]
    if stray:
        raise ScenarioError(f"keys not accepted by {cmd!r}: {sorted(stray)}")
    try:
        sc = Scenario.model_validate(raw)
    except ValidationError as exc:
        raise ScenarioError(_format_validation(exc)) from None
    _check_references(sc)
    return sc


def _format_validation(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        where = ".".join(str(x) for x in err["loc"]) or "<root>"
        parts.append(f"{where}: {err['msg']}")
    return "; ".join(parts)


def _check_references(sc: Scenario):
    from .classify import SYSTEM_REGISTRY
    from .profiles import ProfileError, get_profile

    if sc.command in _PROFILE_KIND and sc.profile is not None:
        try:
            prof = get_profile(sc.profile.name, _PROFILE_KIND[sc.command])
        except ProfileError as exc:
            raise ScenarioError(str(exc)) from None
        unknown = set(sc.profile.params) - set(prof.defaults)
        if unknown:
            raise ScenarioError(f"unknown parameters for profile {prof.name!r}: {sorted(unknown)}")
    if sc.command == "classify":
        if sc.system is None:
            raise ScenarioError("classify needs a 'system' section")
        if sc.system.name not in SYSTEM_REGISTRY:
            raise ScenarioError(f"unknown system {sc.system.name!r}; known: {sorted(SYSTEM_REGISTRY)}")
    if sc.command == "converge" and sc.study is None:
        raise ScenarioError("converge needs a 'study' section")


def scenario_hash(sc: Scenario) -> str:
    canon = json.dumps(sc.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# -- output ---------------------------------------------------------------------------


class _Outputs:
    def __init__(self, root: Path):
        self.root = root
        self.files: list[str] = []
        root.mkdir(parents=True, exist_ok=True)

    def snapshot(self, gf, name: str):
        from .grid import write_snapshot

        csv_path, side = write_snapshot(gf, self.root / "fields" / f"{name}.csv")
        self.files += [str(csv_path.relative_to(self.root)), str(side.relative_to(self.root))]

    def json(self, name: str, payload: dict):
        path = self.root / name
        path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
        self.files.append(name)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


@contextlib.contextmanager
def _thread_limit(n: int | None):
    if n is None:
        yield
        return
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        yield
        return
    with threadpool_limits(limits=n):
        yield


# -- commands ---------------------------------------------------------------------------


def _profile(sc: Scenario, grid):
    from .profiles import get_profile

    spec = sc.profile or ProfileSpec(name=_DEFAULT_PROFILE[sc.command])
    prof = get_profile(spec.name, _PROFILE_KIND[sc.command])
    return spec, prof.build(spec.params, grid)


def _grid(sc: Scenario):
    return (sc.grid or _DEFAULT_GRID[sc.command]).build()


def _exact_error(gf, exact):
    th, e, v = gf.grid.mesh()
    return float(np.max(np.abs(gf.values - exact(th, e, v))))


def _cmd_solve_wave(sc: Scenario, out: _Outputs) -> dict:
    from .go_solvers import solve_diffractive, solve_hs

    grid = _grid(sc)
    spec, setup = _profile(sc, grid)
    opts = sc.options
    eta_bc = opts.eta_bc or setup.eta_bc
    if sc.command == "solve-hs":
        state = solve_hs(setup.initial, setup.coefficients, setup.mode, grid, setup.boundary,
                         cap=opts.gradient_cap, options=opts.march())
    else:
        state = solve_diffractive(setup.initial, setup.coefficients, grid, setup.boundary,
                                  mode=setup.mode, eta_bc=eta_bc, cap=opts.gradient_cap,
                                  options=opts.march())
    out.snapshot(state.a, "a")
    report = {"profile": spec.name, "mode": state.waveform_mode, "period": state.period,
              "max_iterations": max(state.iterations, default=0),
              "max_abs_a": float(np.max(np.abs(state.a.values)))}
    if setup.exact is not None:
        report["max_error"] = _exact_error(state.a, setup.exact)
    return report


def _cmd_solve_einstein(sc: Scenario, out: _Outputs) -> dict:
    from .einstein import evolve, monitor_constraint

    grid = _grid(sc)
    spec, setup = _profile(sc, grid)
    opts = sc.options
    fs = evolve(setup.data, grid, eta_bc=opts.eta_bc or "one-sided", sources=setup.sources,
                options=opts.march(), blowup_cap=opts.blowup_cap,
                require_constraint=opts.require_constraint and setup.require_constraint,
                constraint_tol=opts.constraint_tol, constraint_drift=opts.constraint_drift)
    for name in "UVMY":
        out.snapshot(getattr(fs, name), name)
    cons = monitor_constraint(fs)
    report = {"profile": spec.name, "constraint": cons.as_dict(),
              "max_iterations": max(fs.report["iterations"], default=0),
              "warnings": fs.report["warnings"]}
    if setup.exact is not None:
        report["max_error"] = {k: _exact_error(getattr(fs, k), setup.exact[k]) for k in "UVMY"}
    return report


def _cmd_solve_colliding(sc: Scenario, out: _Outputs) -> dict:
    from .einstein import solve_colliding

    grid = _grid(sc)
    spec, setup = _profile(sc, grid)
    opts = sc.options
    res = solve_colliding(setup.data, grid, options=opts.march(), blowup_cap=opts.blowup_cap,
                          constraint_tol=opts.constraint_tol)
    for name in "UVM":
        out.snapshot(getattr(res, name), name)
    report = {"profile": spec.name, **res.report}
    report["max_iterations"] = max(report.pop("iterations"), default=0)
    if setup.exact is not None:
        th, _, v = res.U.grid.mesh()
        ex = setup.exact(th, v)
        report["max_error"] = max(float(np.max(np.abs(getattr(res, k).values - e)))
                                  for k, e in zip("UVM", ex))
    return report


def _cmd_verify_ricci(sc: Scenario, out: _Outputs) -> dict:
    from .studies import reduced_match_study, ricci_sweep

    spec = sc.ricci or RicciSpec()
    sweep = ricci_sweep(spec.n_points, sc.seed, spec.step, spec.amplitude)
    match = reduced_match_study(spec.match_points, sc.seed)
    failures = []
    if sweep["max_defect"] > spec.tolerance:
        failures.append(f"formula defect {sweep['max_defect']:.3g} in {sweep['worst_component']}")
    if sweep["max_abs_zero"] > spec.zero_tolerance:
        failures.append(f"vanishing component {sweep['worst_zero_component']} is {sweep['max_abs_zero']:.3g}")
    if match["plane_wave_max"] > spec.match_tolerance:
        failures.append(f"plane-wave Ricci component {match['plane_wave_max']:.3g}")
    for name, f in match["factors"].items():
        if not f["all_nonzero"] or f["relative_spread"] > spec.factor_spread:
            failures.append(f"{name} factor spread {f['relative_spread']:.3g}")
    report = {"sweep": sweep, "reduced_match": match, "failures": failures}
    if failures:
        raise VerificationFailure("; ".join(failures), report)
    return report


def _cmd_verify_action(sc: Scenario, out: _Outputs) -> dict:
    from .einstein import evolve
    from .variational import action_report

    grid = _grid(sc)
    spec, setup = _profile(sc, grid)
    opts = sc.options
    act = sc.action or ActionSpec()
    fs = evolve(setup.data, grid, eta_bc=opts.eta_bc or "one-sided", sources=setup.sources,
                options=opts.march(), blowup_cap=opts.blowup_cap,
                require_constraint=opts.require_constraint and setup.require_constraint,
                constraint_tol=opts.constraint_tol)
    rep = action_report(fs, act.n_probes, sc.seed, act.step,
                        eta_periodic=(opts.eta_bc == "periodic"))
    report = {"profile": spec.name, **rep.as_dict()}
    if act.tolerance is not None and rep.meta["max_abs_residual"] > act.tolerance:
        raise VerificationFailure(
            f"variational residual {rep.meta['max_abs_residual']:.3g} exceeds {act.tolerance:.3g}", report)
    return report


def _cmd_classify(sc: Scenario, out: _Outputs) -> dict:
    from .classify import ClassificationError, build_system, characteristic_samples, classify_characteristic

    try:
        system = build_system(sc.system.name, sc.system.params)
    except (ClassificationError, KeyError, TypeError) as exc:
        raise ScenarioError(f"bad system: {exc}") from None
    smp = sc.samples or SampleSpec()
    rng = np.random.default_rng(sc.seed)
    g0 = [np.asarray(g, float) for g in (smp.g0 or [])]
    g0 += [rng.uniform(*smp.g0_range, system.m) for _ in range(smp.n_random_g0)]
    dirs = [np.asarray(k, float) for k in (smp.directions or [])]
    dirs += [rng.normal(size=system.d) for _ in range(smp.n_random_directions)]
    if not g0:
        g0 = [np.zeros(system.m)]
    if not dirs:
        dirs = [np.eye(system.d)[0]]
    try:
        pairs = characteristic_samples(system, g0, dirs)
        rep = classify_characteristic(system, pairs, smp.kernel_tol, smp.lambda_tol)
    except ClassificationError as exc:
        raise VerificationFailure(str(exc), {"system": system.name}) from None
    report = rep.as_dict()
    if smp.expect is not None and rep.verdict != smp.expect:
        raise VerificationFailure(f"verdict {rep.verdict!r}, expected {smp.expect!r}", report)
    return report


def _cmd_converge(sc: Scenario, out: _Outputs) -> dict:
    from . import studies

    st = sc.study
    kw = {} if st.ladder is None else {"ladder": tuple(st.ladder)}
    if st.target == "einstein-mms":
        reps = studies.einstein_mms_study(**kw)
        per = {k: r.as_dict() for k, r in reps.items()}
        order = min(r.observed_order for r in reps.values())
        report = {"target": st.target, "observed_order": order, "per_field": per}
    elif st.target == "stationarity":
        reps = studies.stationarity_study(**kw, n_probes=st.n_probes, seed=sc.seed)
        order = min(r.observed_order for r in reps.values())
        report = {"target": st.target, "observed_order": order,
                  "per_direction": {k: r.as_dict() for k, r in reps.items()}}
    elif st.target == "linearization":
        lin = studies.linearization_study(**({} if st.eps is None else {"eps": tuple(st.eps)}))
        order = lin.order_abs
        report = {"target": st.target, "observed_order": order, **lin.as_dict()}
    else:
        fn = {"constraint-pulse": studies.constraint_study,
              "colliding-exact": studies.colliding_exact_study,
              "hs-exact": studies.hs_exact_study,
              "parabolic-plane-wave": studies.parabolic_study}[st.target]
        rep = fn(**kw)
        order = rep.observed_order
        report = {"target": st.target, **rep.as_dict()}
    report["accepted_range"] = [st.min_order, st.max_order]
    out.json("convergence.json", report)
    if order is None or not (st.min_order <= order <= st.max_order):
        raise VerificationFailure(f"observed order {order} outside [{st.min_order}, {st.max_order}]",
                                  report)
    return report


_HANDLERS = {
    "solve-hs": _cmd_solve_wave,
    "solve-parabolic": _cmd_solve_wave,
    "solve-einstein": _cmd_solve_einstein,
    "solve-colliding": _cmd_solve_colliding,
    "verify-ricci": _cmd_verify_ricci,
    "verify-action": _cmd_verify_action,
    "classify": _cmd_classify,
    "converge": _cmd_converge,
}


def run_scenario(sc: Scenario, out_dir: Path) -> dict:
    """Execute a validated scenario and write its artifacts.

    Returns the run report.  Raises :class:`VerificationFailure`,
    :class:`~gwdiffract.errors.SolverError` or :class:`ScenarioError`.
    """
    out = _Outputs(out_dir)
    start = time.perf_counter()
    status, report, error = "ok", {}, None
    try:
        with _thread_limit(sc.threads):
            report = _HANDLERS[sc.command](sc, out)
    except VerificationFailure as exc:
        status, report, error = "verification-failure", exc.report, str(exc)
        raise
    except SolverError as exc:
        status, report, error = "solver-failure", exc.report, str(exc)
        raise
    finally:
        elapsed = time.perf_counter() - start
        out.json("report.json", {"command": sc.command, "status": status, "error": error,
                                 "elapsed_seconds": elapsed, "result": report})
        grid = sc.grid or _DEFAULT_GRID.get(sc.command)
        out.json("manifest.json", {
            "command": sc.command,
            "scenario_sha256": scenario_hash(sc),
            "scenario": sc.model_dump(mode="json"),
            "grid": None if grid is None else grid.model_dump(mode="json"),
            "tolerances": sc.options.model_dump(mode="json"),
            "seed": sc.seed,
            "threads": sc.threads,
            "status": status,
            "files": sorted(set(out.files) | {"manifest.json"}),
        })
    return report


# -- entry point ----------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gwd", description="Diffractive gravitational-wave solver and verifier.")
    p.add_argument("command", choices=COMMANDS + ("run",),
                   help="what to do; 'run' takes the command from the scenario")
    p.add_argument("--config", type=Path, help="scenario JSON file")
    p.add_argument("--out", type=Path, help="output directory (default: scenario 'output' or ./gwd-out)")
    p.add_argument("--threads", type=int, help="cap on worker threads")
    p.add_argument("--seed", type=int, help="random seed (unsigned 64-bit)")
    return p


def _diagnose(kind: str, message: str, report: dict | None = None):
    sys.stderr.write(json.dumps(_jsonable({"error": kind, "message": message, "report": report or {}}),
                                sort_keys=True) + "\n")


def _read_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from None
    if not text.strip():
        return {}
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from None


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("GWD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        raw = _read_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ScenarioError("seed must be an unsigned 64-bit integer")
            raw = {**raw, "seed": args.seed} if isinstance(raw, dict) else raw
        if args.threads is not None:
            if args.threads < 1:
                raise ScenarioError("threads must be positive")
            raw = {**raw, "threads": args.threads} if isinstance(raw, dict) else raw
        sc = load_scenario(raw, None if args.command == "run" else args.command)
    except ScenarioError as exc:
        _diagnose("config", str(exc))
        return EXIT_CONFIG
    out_dir = args.out or Path(sc.output or "gwd-out")
    log.info("running %s into %s", sc.command, out_dir)
    try:
        report = run_scenario(sc, out_dir)
    except ScenarioError as exc:
        _diagnose("config", str(exc))
        return EXIT_CONFIG
    except VerificationFailure as exc:
        _diagnose("verification", str(exc), exc.report)
        return EXIT_VERIFY
    except SolverError as exc:
        _diagnose(type(exc).__name__, str(exc), exc.report)
        return EXIT_SOLVER
    except ValueError as exc:
        _diagnose("config", str(exc))
        return EXIT_CONFIG
    log.info("done: %s", json.dumps(_jsonable(report), sort_keys=True)[:200])
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
