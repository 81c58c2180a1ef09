"""``qsynth`` command-line interface.

Commands
--------
check       commutation preservation and physical realizability of a plant or QSDE file
synthesize  H-infinity synthesis at a given attenuation, optionally realized
analyze     norm / sbr / robust / simulate on the closed loop

Exit codes: 0 success, 1 domain failure, 2 usage or parse error. The
environment variable ``QSYNTH_TOL`` overrides the residual tolerance.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import matops
from .dissipativity import bounded_real_supply, compute_lambda0, strict_bounded_real_check
from .errors import ConventionError, QsynthError, SynthesisFailure, UnstableA
from .momentsim import (
    GaussianState,
    InputSignal,
    propagate_moments,
    verify_dissipation_empirically,
)
from .qsde import LinearQsde, pad_to_convention, preserves_commutation
from .realizability import check_physical_realizability, extract_hamiltonian_coupling
from .realization import realize, verify_realization
from .riccati import hinf_norm
from .robustness import overbound_uncertainty, robust_stability_check
from .serialize import (
    REPORT_VERSION,
    FormatError,
    complex_to_dict,
    controller_from_dict,
    controller_to_dict,
    dumps,
    eigen_to_dict,
    load_file,
    matrix_to_list,
    plant_from_dict,
    qsde_from_dict,
    triple_to_dict,
)
from .synthesis import ControllerTriple, close_loop, synthesize

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _tolerance(args):
    if getattr(args, "tol", None) is not None:
        return args.tol
    env = os.environ.get("QSYNTH_TOL")
    if env is None:
        return None
    try:
        return float(env)
    except ValueError as exc:
        raise UsageError(f"QSYNTH_TOL must be a number, got {env!r}") from exc


def _report(command: str, source: str) -> dict:
    return {"version": REPORT_VERSION, "command": command, "input": os.path.basename(source)}


def _emit(report: dict, out: str | None):
    text = dumps(report)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_plant(path):
    doc = load_file(path)
    if not isinstance(doc, dict) or doc.get("kind") != "plant":
        raise FormatError(f"{path}: expected a plant document")
    return plant_from_dict(doc)


def _load_system(path) -> tuple[LinearQsde, str]:
    doc = load_file(path)
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "plant":
        plant, _ = plant_from_dict(doc)
        raw = plant.as_qsde()
        if raw.n_y % 2 or raw.n_w % 2 or raw.n_w < raw.n_y:
            raw = pad_to_convention(raw)
        else:
            raw = raw.with_(check_conventions=True)
        return raw, "plant"
    if kind == "qsde":
        return qsde_from_dict(doc), "qsde"
    raise FormatError(f"{path}: 'kind' must be 'plant' or 'qsde'")


# ---------------------------------------------------------------- check

def cmd_check(args) -> int:
    sys_, kind = _load_system(args.file)
    tol = _tolerance(args)
    comm = preserves_commutation(sys_, tol)
    rep = check_physical_realizability(sys_, tol)
    report = _report("check", args.file)
    report["input_kind"] = kind
    report["commutation"] = {"holds": comm.holds, "residual": comm.residual}
    report["realizability"] = {
        "realizable": rep.realizable,
        "residual_A": rep.residual_A,
        "residual_B": rep.residual_B,
        "d_conforms": rep.d_conforms,
        "tol": rep.tol,
    }
    if args.extract:
        if sys_.theta.kind == "canonical" and rep.realizable:
            params = extract_hamiltonian_coupling(sys_)
            report["oscillator"] = {"R": matrix_to_list(params.R), "Lambda": complex_to_dict(params.Lam)}
        else:
            report["oscillator"] = None
    if args.augment:
        if rep.augmentation is not None:
            a = rep.augmentation.sys
            report["augmentation"] = {
                "A": matrix_to_list(a.A), "B": matrix_to_list(a.B), "C": matrix_to_list(a.C),
                "theta": matrix_to_list(a.theta.matrix), "perm": [int(i) for i in rep.augmentation.perm],
            }
        else:
            report["augmentation"] = None
    ok = comm.holds and rep.realizable
    report["status"] = "pass" if ok else "fail"
    _emit(report, args.out)
    if not ok:
        print(f"check failed: residual_A = {rep.residual_A:.6g}, residual_B = {rep.residual_B:.6g}, "
              f"d_conforms = {rep.d_conforms}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- synthesize

def _prepare_plant(plant, unc, g):
    if unc is not None:
        return overbound_uncertainty(plant, unc["mu"], unc["S"], g)
    return plant


def _pad_triple(t: ControllerTriple) -> ControllerTriple:
    """Append a zero measurement column so ``n_y`` is even."""
    if t.n_y % 2 == 0:
        return t
    return ControllerTriple(t.A_K, np.hstack([t.B_K, np.zeros((t.n_K, 1))]), t.C_K)


def _failure(report, exc: SynthesisFailure):
    report["status"] = "failure"
    report["failure"] = {"code": exc.code, "stage": exc.stage, "detail": exc.detail}


def cmd_synthesize(args) -> int:
    if not args.g > 0:
        raise UsageError("--g must be positive")
    plant, unc = _load_plant(args.file)
    plant = _prepare_plant(plant, unc, args.g)
    report = _report("synthesize", args.file)
    report["g"] = args.g
    try:
        res = synthesize(plant, args.g)
    except SynthesisFailure as exc:
        _failure(report, exc)
        _emit(report, args.out)
        print(f"synthesis failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    report["status"] = "ok"
    report["assumptions"] = res.assumption_report
    report["X"] = matrix_to_list(res.X)
    report["Y"] = matrix_to_list(res.Y)
    report["triple"] = triple_to_dict(res.triple)
    report["certificate"] = {
        "strict": res.certificate.strict,
        "epsilon": res.certificate.epsilon,
        "lambda0": res.certificate.lambda0,
        "X": matrix_to_list(res.certificate.X),
    }
    cl = res.closed_loop
    report["closed_loop"] = {
        "hinf_norm": hinf_norm(cl.Atil, cl.Btil, cl.Ctil),
        "eigenvalues": eigen_to_dict(matops.eigenvalues(cl.Atil)),
    }
    ok = True
    if args.realize:
        try:
            ctrl = realize(_pad_triple(res.triple), args.realize)
        except (ConventionError, ValueError) as exc:
            raise UsageError(f"--realize {args.realize}: {exc}") from exc
        chk = verify_realization(ctrl, _tolerance(args))
        ok = bool(chk)
        report["realization"] = {
            "kind": ctrl.kind,
            "realizable": chk.realizable,
            "residual_A": chk.residual_A,
            "residual_B": chk.residual_B,
            "augmentation_residual": chk.augmentation_residual,
            "no_feedthrough": chk.no_feedthrough,
            "compatible": chk.compatible,
        }
        report["controller"] = controller_to_dict(ctrl)
        if ctrl.B_K.shape[1] == plant.C2.shape[0]:
            full = close_loop(plant, ctrl)
            report["realization"]["closed_loop_lambda0"] = compute_lambda0(
                res.certificate.X, full.Btil, full.Gtil, full.F_combined)
    if not ok:
        report["status"] = "realization_failed"
    _emit(report, args.out)
    print(f"synthesis ok at g = {args.g:g}; closed-loop norm {report['closed_loop']['hinf_norm']:.6g}",
          file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- analyze

def _closed_loop_for(args):
    plant, unc = _load_plant(args.file)
    plant = _prepare_plant(plant, unc, args.g)
    res = None
    if args.controller:
        ctrl = controller_from_dict(load_file(args.controller))
        if ctrl.B_K.shape[1] != plant.C2.shape[0]:
            ctrl = ControllerTriple(ctrl.A_K, ctrl.B_K[:, :plant.C2.shape[0]], ctrl.C_K)
        cl = close_loop(plant, ctrl)
    else:
        res = synthesize(plant, args.g)
        cl = res.closed_loop
    return plant, cl, res


def _load_signal(args, m: int) -> InputSignal:
    if args.signal:
        doc = load_file(args.signal)
        try:
            return InputSignal(doc["times"], doc["values"], doc["horizon"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{args.signal}: signal needs 'times', 'values' and 'horizon' ({exc})") from exc
    return InputSignal.step(np.full(m, args.amplitude), args.t_on, args.horizon)


def cmd_analyze(args) -> int:
    if not args.g > 0:
        raise UsageError("--g must be positive")
    report = _report(f"analyze {args.what}", args.file)
    report["g"] = args.g
    try:
        plant, cl, res = _closed_loop_for(args)
    except SynthesisFailure as exc:
        _failure(report, exc)
        _emit(report, args.out)
        print(f"synthesis failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    ok = True
    if args.what == "norm":
        try:
            val = hinf_norm(cl.Atil, cl.Btil, cl.Ctil)
        except UnstableA:
            report["hinf_norm"] = None
            report["status"] = "unstable"
            _emit(report, args.out)
            return EXIT_FAIL
        report["hinf_norm"] = val
        print(f"hinf_norm = {val:.6f}", file=sys.stderr)
    elif args.what == "sbr":
        att = args.attenuation or args.g
        chk = strict_bounded_real_check(cl.Atil, cl.Btil, cl.Ctil, np.zeros((cl.Ctil.shape[0], cl.Btil.shape[1])), att)
        report["attenuation"] = att
        report["sbr"] = {"holds": chk.holds, "margin": chk.margin, "reason": chk.reason,
                         "X": matrix_to_list(chk.X) if chk.X is not None else None}
        ok = chk.holds
    elif args.what == "robust":
        rob = robust_stability_check(cl, args.g, grid=args.grid)
        report["robust"] = {
            "certified": rob.certified,
            "channel_norm_bound": rob.channel_norm_bound,
            "worst_margin": rob.worst_margin,
            "all_samples_stable": rob.all_samples_stable,
            "grid": [{"s": s, "max_real_eig": m} for s, m in rob.grid],
        }
        ok = rob.certified
    else:
        u = _load_signal(args, cl.Btil.shape[1])
        traj = propagate_moments(cl.Atil, cl.Btil, cl.Gtil, cl.F_combined, GaussianState.zero(cl.n), u,
                                 dt=args.dt, C=cl.Ctil)
        if args.csv:
            traj.to_csv(args.csv)
        else:
            sys.stdout.write(traj.to_csv())
        report["simulate"] = {"steps": int(traj.times.size - 1), "horizon": float(traj.times[-1]),
                              "csv": os.path.basename(args.csv) if args.csv else None}
        if res is not None:
            X = res.certificate.X
            lam = compute_lambda0(X, cl.Btil, cl.Gtil, cl.F_combined)
            supply = bounded_real_supply(cl.Ctil, np.zeros((cl.Ctil.shape[0], cl.Btil.shape[1])), args.g)
            slack = verify_dissipation_empirically(traj, X, supply, lam)
            report["simulate"]["min_dissipation_slack"] = slack
            ok = slack >= -1e-6
        if not args.csv:
            return EXIT_OK if ok else EXIT_FAIL
    report["status"] = "pass" if ok else "fail"
    _emit(report, args.out)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsynth", description="H-infinity synthesis for linear quantum systems")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="commutation preservation and physical realizability")
    c.add_argument("file")
    c.add_argument("--extract", action="store_true", help="report the Hamiltonian and coupling matrices")
    c.add_argument("--augment", action="store_true", help="report the augmentation of a degenerate system")
    c.add_argument("--tol", type=float, default=None)
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("synthesize", help="H-infinity synthesis and optional realization")
    s.add_argument("file")
    s.add_argument("--g", type=float, required=True)
    s.add_argument("--realize", help="quantum | classical | mixed:<nprime>")
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_synthesize)

    a = sub.add_parser("analyze", help="analyze the closed loop")
    a.add_argument("what", choices=["norm", "sbr", "robust", "simulate"])
    a.add_argument("file")
    a.add_argument("--g", type=float, required=True)
    a.add_argument("--controller", help="controller file or synthesize report")
    a.add_argument("--attenuation", type=float, help="attenuation for sbr (default: --g)")
    a.add_argument("--grid", type=int, default=11)
    a.add_argument("--signal", help="JSON file with times, values, horizon")
    a.add_argument("--amplitude", type=float, default=1.0)
    a.add_argument("--t-on", dest="t_on", type=float, default=1.0)
    a.add_argument("--horizon", type=float, default=50.0)
    a.add_argument("--dt", type=float, default=None)
    a.add_argument("--csv")
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (FormatError, UsageError) as exc:
        print(f"qsynth: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QsynthError as exc:
        print(f"qsynth: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
