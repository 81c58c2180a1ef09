"""JSON formats for plants, systems, controllers and reports.

All files are UTF-8 JSON with real numbers only. Numbers are written with
12 significant digits and matrices one row per line, so a parsed file
re-serializes to the same bytes.
"""
from __future__ import annotations

import json
import math

import numpy as np

from . import matops
from .errors import DimensionError, QsynthError
from .qsde import CommutationMatrix, ItoMatrix, LinearQsde, canonical_ito
from .realizability import AugmentedSystem, OscillatorParams
from .realization import FullController
from .synthesis import ControllerTriple, Plant

REPORT_VERSION = "qsynth-report/1"
PLANT_KEYS = ("A", "B0", "B1", "B2", "C1", "D12", "C2", "D20", "D21")
QSDE_KEYS = ("A", "B", "C", "D")


class FormatError(QsynthError, ValueError):
    """Malformed input file (bad JSON, missing keys, wrong shapes)."""


def format_number(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("non-finite numbers cannot be serialized")
    if x == 0:
        return "0"
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return format(x, ".12g")


def _is_num(v) -> bool:
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)


def _dump(obj, level: int) -> str:
    pad = "  " * (level + 1)
    end = "  " * level
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(v, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(_is_num(v) for v in obj):
            return "[" + ", ".join(format_number(v) for v in obj) + "]"
        items = [pad + _dump(v, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return _dump(obj.tolist(), level)
    if _is_num(obj):
        return format_number(obj)
    return json.dumps(obj)


def dumps(obj) -> str:
    """Deterministic JSON text (trailing newline included)."""
    return _dump(obj, 0) + "\n"


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def load_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc
    return loads(text)


def matrix_to_list(M):
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return []
    return [[float(v) for v in row] for row in np.atleast_2d(M)]


def _matrix(value, name):
    try:
        M = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{name}: not a numeric matrix") from exc
    if M.size and M.ndim != 2:
        raise FormatError(f"{name}: expected a list of rows, got {M.ndim}-dimensional data")
    if not np.all(np.isfinite(M)):
        raise FormatError(f"{name}: non-finite entries")
    return M


def complex_to_dict(Z):
    Z = np.asarray(Z, dtype=complex)
    return {"re": matrix_to_list(Z.real), "im": matrix_to_list(Z.imag)}


def _require(doc, key, where):
    if not isinstance(doc, dict) or key not in doc:
        raise FormatError(f"{where}: missing key {key!r}")
    return doc[key]


# ---------------------------------------------------------------- Ito / Theta

def ito_to_spec(ito: ItoMatrix):
    if ito.n_w == 0 or ito.is_canonical(0.0):
        return "canonical"
    return {"S": matrix_to_list(ito.S), "Tim": matrix_to_list(ito.Tim)}


def ito_from_spec(spec, m: int, where: str) -> ItoMatrix:
    if spec == "canonical":
        if m == 0:
            return ItoMatrix(np.zeros((0, 0)))
        try:
            return canonical_ito(m)
        except QsynthError as exc:
            raise FormatError(f"{where}: {exc}") from exc
    if isinstance(spec, dict):
        S = _matrix(_require(spec, "S", where), f"{where}.S")
        Tim = _matrix(_require(spec, "Tim", where), f"{where}.Tim")
        if S.shape != (m, m) or Tim.shape != (m, m):
            raise FormatError(f"{where}: Ito matrix must be {m}x{m}")
        try:
            return ItoMatrix.from_parts(S, Tim)
        except QsynthError as exc:
            raise FormatError(f"{where}: {exc}") from exc
    raise FormatError(f"{where}: Ito spec must be \"canonical\" or {{\"S\", \"Tim\"}}")


def theta_to_spec(theta: CommutationMatrix):
    kind = theta.kind
    if kind == "canonical":
        return {"kind": "canonical"}
    if kind == "degenerate":
        return {"kind": "degenerate", "nprime": theta.nprime}
    return {"kind": "general", "matrix": matrix_to_list(theta.matrix)}


def theta_from_spec(spec, n: int, where: str = "theta") -> CommutationMatrix:
    kind = _require(spec, "kind", where)
    try:
        if kind == "canonical":
            return CommutationMatrix.canonical(n)
        if kind == "degenerate":
            return CommutationMatrix.degenerate(n, int(_require(spec, "nprime", where)))
        if kind == "general":
            M = _matrix(_require(spec, "matrix", where), f"{where}.matrix")
            if M.shape != (n, n):
                raise FormatError(f"{where}: matrix must be {n}x{n}")
            return CommutationMatrix(M)
    except (QsynthError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{where}: {exc}") from exc
    raise FormatError(f"{where}: unknown kind {kind!r}")


# ---------------------------------------------------------------- plants

def plant_to_dict(plant: Plant, uncertainty: dict | None = None) -> dict:
    doc = {"kind": "plant", "n": plant.n, "matrices": {}}
    for k in PLANT_KEYS:
        doc["matrices"][k] = matrix_to_list(getattr(plant, k))
    doc["theta"] = theta_to_spec(plant.theta_P)
    doc["ito"] = {"v": ito_to_spec(plant.F_v), "w": ito_to_spec(plant.F_w)}
    if uncertainty:
        doc["uncertainty"] = {"mu": float(uncertainty["mu"]), "S": matrix_to_list(uncertainty["S"])}
    return doc


def plant_from_dict(doc) -> tuple[Plant, dict | None]:
    """Parse a plant document; returns the plant and its optional uncertainty spec."""
    if _require(doc, "kind", "plant") != "plant":
        raise FormatError(f"expected kind 'plant', got {doc['kind']!r}")
    n = _require(doc, "n", "plant")
    if not isinstance(n, int) or n < 1:
        raise FormatError("plant.n must be a positive integer")
    mats = _require(doc, "matrices", "plant")
    values = {k: _matrix(_require(mats, k, "plant.matrices"), f"matrices.{k}") for k in PLANT_KEYS}
    if values["A"].shape != (n, n):
        raise FormatError(f"matrices.A must be {n}x{n}, got {values['A'].shape}")
    ito = doc.get("ito", {"v": "canonical", "w": "canonical"})
    n_v = values["B0"].shape[1] if values["B0"].size else 0
    n_w = values["B1"].shape[1] if values["B1"].size else 0
    F_v = ito_from_spec(ito.get("v", "canonical"), n_v, "ito.v")
    F_w = ito_from_spec(ito.get("w", "canonical"), n_w, "ito.w")
    theta = theta_from_spec(doc.get("theta", {"kind": "canonical"}), n)
    try:
        plant = Plant(**values, F_v=F_v, F_w=F_w, theta_P=theta)
    except DimensionError as exc:
        raise FormatError(f"plant: {exc}") from exc
    unc = doc.get("uncertainty")
    if unc is not None:
        mu = _require(unc, "mu", "uncertainty")
        S = _matrix(_require(unc, "S", "uncertainty"), "uncertainty.S")
        if S.shape != (n, n):
            raise FormatError(f"uncertainty.S must be {n}x{n}")
        unc = {"mu": float(mu), "S": S}
    return plant, unc


# ---------------------------------------------------------------- QSDE systems

def qsde_to_dict(sys: LinearQsde) -> dict:
    return {
        "kind": "qsde",
        "n": sys.n,
        "matrices": {k: matrix_to_list(getattr(sys, k)) for k in QSDE_KEYS},
        "theta": theta_to_spec(sys.theta),
        "ito": ito_to_spec(sys.ito),
        "output_channel_offset": sys.output_channel_offset,
    }


def qsde_from_dict(doc) -> LinearQsde:
    if _require(doc, "kind", "system") != "qsde":
        raise FormatError(f"expected kind 'qsde', got {doc['kind']!r}")
    n = _require(doc, "n", "system")
    mats = _require(doc, "matrices", "system")
    vals = {k: _matrix(_require(mats, k, "system.matrices"), f"matrices.{k}") for k in QSDE_KEYS}
    n_w = vals["B"].shape[1] if vals["B"].size else 0
    theta = theta_from_spec(doc.get("theta", {"kind": "canonical"}), n)
    ito = ito_from_spec(doc.get("ito", "canonical"), n_w, "ito")
    try:
        return LinearQsde(vals["A"], vals["B"], vals["C"], vals["D"], theta, ito,
                          int(doc.get("output_channel_offset", 0)))
    except QsynthError as exc:
        raise FormatError(f"system: {exc}") from exc


# ---------------------------------------------------------------- controllers

def triple_to_dict(t: ControllerTriple) -> dict:
    return {"A_K": matrix_to_list(t.A_K), "B_K": matrix_to_list(t.B_K), "C_K": matrix_to_list(t.C_K)}


def controller_to_dict(c: FullController) -> dict:
    doc = {
        "kind": "controller",
        "realization": c.kind,
        **triple_to_dict(c.triple),
        "B_K0": matrix_to_list(c.B_K0),
        "B_K1": matrix_to_list(c.B_K1),
        "theta_K": matrix_to_list(c.theta_K.matrix),
        "F_vK": ito_to_spec(c.F_vK),
        "xi_shift": float(c.xi_shift),
    }
    if c.oscillator is not None:
        doc["oscillator"] = {"R": matrix_to_list(c.oscillator.R), "Lambda": complex_to_dict(c.oscillator.Lam)}
    if c.augmentation is not None:
        a = c.augmentation
        doc["augmentation"] = {
            "A": matrix_to_list(a.sys.A), "B": matrix_to_list(a.sys.B), "C": matrix_to_list(a.sys.C),
            "D": matrix_to_list(a.sys.D), "theta": matrix_to_list(a.sys.theta.matrix),
            "embed": [int(i) for i in a.embed], "perm": [int(i) for i in a.perm],
        }
    return doc


def controller_from_dict(doc) -> FullController:
    if isinstance(doc, dict) and doc.get("kind") != "controller" and "controller" in doc:
        doc = doc["controller"]
    if _require(doc, "kind", "controller") != "controller":
        raise FormatError("expected a controller document or a report containing one")
    A_K = _matrix(_require(doc, "A_K", "controller"), "A_K")
    B_K = _matrix(_require(doc, "B_K", "controller"), "B_K")
    C_K = _matrix(_require(doc, "C_K", "controller"), "C_K")
    B_K0 = _matrix(_require(doc, "B_K0", "controller"), "B_K0")
    B_K1 = _matrix(_require(doc, "B_K1", "controller"), "B_K1")
    nK = A_K.shape[0]
    theta = CommutationMatrix(_matrix(_require(doc, "theta_K", "controller"), "theta_K").reshape(nK, nK))
    n_vK = B_K1.shape[1] if B_K1.size else 0
    F_vK = ito_from_spec(doc.get("F_vK", "canonical"), n_vK, "F_vK")
    osc = None
    if "oscillator" in doc:
        o = doc["oscillator"]
        lam = _require(o, "Lambda", "oscillator")
        osc = OscillatorParams(_matrix(o["R"], "R"),
                               _matrix(lam["re"], "Lambda.re") + 1j * _matrix(lam["im"], "Lambda.im"))
    aug = None
    if "augmentation" in doc:
        a = doc["augmentation"]
        n_y = B_K.shape[1]
        F = matops.block_diag(F_vK.F, canonical_ito(n_y).F) if n_y else F_vK.F
        sys = LinearQsde(_matrix(a["A"], "augmentation.A"), _matrix(a["B"], "augmentation.B"),
                         _matrix(a["C"], "augmentation.C"), _matrix(a["D"], "augmentation.D"),
                         CommutationMatrix(_matrix(a["theta"], "augmentation.theta")), ItoMatrix(F), 0)
        perm = np.asarray(a["perm"], dtype=int)
        aug = AugmentedSystem(sys, np.asarray(a["embed"], dtype=int), np.eye(perm.size)[perm])
    try:
        return FullController(A_K, B_K.reshape(nK, -1), C_K.reshape(-1, nK), B_K0, B_K1, theta, F_vK, osc, aug,
                              str(doc.get("realization", "quantum")), float(doc.get("xi_shift", 0.0)))
    except QsynthError as exc:
        raise FormatError(f"controller: {exc}") from exc


def eigen_to_dict(w) -> dict:
    w = np.asarray(w, dtype=complex)
    return {"re": [float(v) for v in w.real], "im": [float(v) for v in w.imag]}
