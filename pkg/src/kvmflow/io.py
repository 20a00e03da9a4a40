"""JSON input documents, trajectory CSV, and diff-stable JSON summaries.

Reals are written with 17 significant digits, which round-trips binary64
exactly; summary keys have a fixed order so identical runs produce
byte-identical files.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError

__all__ = [
    "MatrixInputDocument",
    "parse_input",
    "document_to_dict",
    "write_trajectory_csv",
    "write_summary",
    "build_summary",
]

_ALLOWED_KEYS = {"n", "offdiag", "symmetric", "label"}


@dataclass(frozen=True)
class MatrixInputDocument:
    n: int
    offdiag: np.ndarray | None = None  # length n-1
    symmetric: np.ndarray | None = None  # (n, n), experimental mode
    label: str | None = None

    @property
    def kind(self) -> str:
        return "offdiag" if self.offdiag is not None else "symmetric"


def _reject_constant(name):
    raise ParseError(f"non-finite JSON constant {name!r} is not allowed")


def _as_number_list(values, fieldname):
    out = []
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError(f"{fieldname}[{i}] is not a number: {v!r}")
        f = float(v)
        if not np.isfinite(f):
            raise ValidationError(f"{fieldname}[{i}] is not finite")
        out.append(f)
    return out


def parse_input(data) -> MatrixInputDocument:
    """Parse and validate a JSON input document (bytes or str, UTF-8).

    Accepts either {"n": n, "offdiag": [...n-1 reals...]} or
    {"symmetric": [[...]]} plus an optional "label".
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}") from exc
    try:
        obj = json.loads(data, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc

    if not isinstance(obj, dict):
        raise ValidationError("top-level JSON value must be an object")
    unknown = set(obj) - _ALLOWED_KEYS
    if unknown:
        raise ValidationError(f"unknown field(s): {sorted(unknown)}")
    if ("offdiag" in obj) == ("symmetric" in obj):
        raise ValidationError("exactly one of 'offdiag' or 'symmetric' is required")

    label = obj.get("label")
    if label is not None and not isinstance(label, str):
        raise ValidationError("'label' must be a string")

    if "offdiag" in obj:
        if "n" not in obj:
            raise ValidationError("'n' is required with 'offdiag'")
        n = obj["n"]
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ValidationError(f"'n' must be a positive integer, got {n!r}")
        if not isinstance(obj["offdiag"], list):
            raise ValidationError("'offdiag' must be a list of numbers")
        entries = _as_number_list(obj["offdiag"], "offdiag")
        if len(entries) != n - 1:
            raise ValidationError(
                f"'offdiag' must have length n-1 = {n - 1}, got {len(entries)}"
            )
        return MatrixInputDocument(n=n, offdiag=np.array(entries, dtype=np.float64),
                                   label=label)

    rows = obj["symmetric"]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ValidationError("'symmetric' must be a non-empty list of rows")
    n = len(rows)
    mat = []
    for i, row in enumerate(rows):
        if len(row) != n:
            raise ValidationError(f"'symmetric' row {i} has length {len(row)}, expected {n}")
        mat.append(_as_number_list(row, f"symmetric[{i}]"))
    H = np.array(mat, dtype=np.float64)
    if "n" in obj and obj["n"] != n:
        raise ValidationError(f"'n'={obj['n']} does not match matrix dimension {n}")
    defect = float(np.abs(H - H.T).max())
    if defect > 1e-12 * (1.0 + float(np.abs(H).max())):
        raise ValidationError(f"'symmetric' matrix is asymmetric (defect {defect:.3e})")
    return MatrixInputDocument(n=n, symmetric=0.5 * (H + H.T), label=label)


def document_to_dict(doc: MatrixInputDocument) -> dict:
    """Input echo in the same schema parse_input accepts (bit-exact floats)."""
    out = {}
    if doc.label is not None:
        out["label"] = doc.label
    out["n"] = int(doc.n)
    if doc.offdiag is not None:
        out["offdiag"] = [float(x) for x in doc.offdiag]
    else:
        out["symmetric"] = [[float(x) for x in row] for row in doc.symmetric]
    return out


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _open_sink(sink, mode="w"):
    if hasattr(sink, "write"):
        return sink, False
    return open(Path(sink), mode, encoding="utf-8", newline=""), True


def write_trajectory_csv(traj, sink) -> None:
    """Write one row per sample: t, a_1..a_{n-1}, f, k_norm, spec_drift."""
    fh, owned = _open_sink(sink)
    try:
        k = traj.states.shape[1]
        header = ["t"] + [f"a_{i + 1}" for i in range(k)] + ["f", "k_norm", "spec_drift"]
        fh.write(",".join(header) + "\n")
        for i in range(traj.times.size):
            row = (
                [_fmt(traj.times[i])]
                + [_fmt(v) for v in traj.states[i]]
                + [_fmt(traj.f_values[i]), _fmt(traj.k_norms[i]), _fmt(traj.spec_drift[i])]
            )
            fh.write(",".join(row) + "\n")
    finally:
        if owned:
            fh.close()


def write_dense_diagnostics_csv(traj, sink) -> None:
    """Diagnostics-only CSV for dense runs: t, f, k_norm, spec_drift."""
    fh, owned = _open_sink(sink)
    try:
        fh.write("t,f,k_norm,spec_drift\n")
        for i in range(traj.times.size):
            fh.write(",".join([
                _fmt(traj.times[i]), _fmt(traj.f_values[i]),
                _fmt(traj.k_norms[i]), _fmt(traj.spec_drift[i]),
            ]) + "\n")
    finally:
        if owned:
            fh.close()


_SUMMARY_KEYS = (
    "label",
    "mode",
    "notes",
    "input",
    "status",
    "final_offdiag",
    "spectrum",
    "predicted_limit",
    "checks",
    "overall",
    "config",
    "seed",
)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def build_summary(*, label=None, mode=None, notes=None, input=None, status=None,
                  final_offdiag=None, spectrum=None, predicted_limit=None,
                  checks=None, overall=None, config=None, seed=None,
                  extras: dict | None = None) -> dict:
    """Summary mapping with a fixed key order (null for absent values)."""
    values = {
        "label": label,
        "mode": mode,
        "notes": notes,
        "input": input,
        "status": status,
        "final_offdiag": final_offdiag,
        "spectrum": spectrum,
        "predicted_limit": predicted_limit,
        "checks": checks,
        "overall": overall,
        "config": config,
        "seed": seed,
    }
    out = {k: _jsonable(values[k]) for k in _SUMMARY_KEYS}
    for k, v in (extras or {}).items():
        out[k] = _jsonable(v)
    return out


def write_summary(obj, sink) -> None:
    """Serialize a summary dict, a VerificationReport, or a FlowTrajectory."""
    if isinstance(obj, dict):
        summary = _jsonable(obj)
    elif hasattr(obj, "checks") and hasattr(obj, "meta"):
        d = obj.to_dict()
        meta = d["meta"]
        summary = build_summary(
            input={"n": meta.get("n"), "offdiag": meta.get("input_offdiag")},
            status=meta.get("status"),
            final_offdiag=meta.get("final_offdiag"),
            spectrum=meta.get("spectrum"),
            predicted_limit=meta.get("predicted_limit"),
            checks=d["checks"],
            overall=d["overall"],
            config=meta.get("config"),
            seed=meta.get("seed"),
        )
    elif hasattr(obj, "states") and hasattr(obj, "k_norms"):
        summary = build_summary(
            input={"n": obj.states.shape[1] + 1,
                   "offdiag": [float(x) for x in obj.states[0]]},
            status=obj.status,
            final_offdiag=obj.final_state,
            config=_cfg_dict(obj.config),
        )
    else:
        raise TypeError(f"cannot summarize object of type {type(obj).__name__}")

    fh, owned = _open_sink(sink)
    try:
        fh.write(json.dumps(summary, indent=2))
        fh.write("\n")
    finally:
        if owned:
            fh.close()


def _cfg_dict(cfg) -> dict:
    return {
        "method": cfg.method,
        "dt": cfg.dt,
        "abs_tol": cfg.abs_tol,
        "rel_tol": cfg.rel_tol,
        "t_max": cfg.t_max,
        "eq_eps": cfg.eq_eps,
        "record_stride": cfg.record_stride,
        "max_rows": cfg.max_rows,
        "dt_min": cfg.dt_min,
    }
