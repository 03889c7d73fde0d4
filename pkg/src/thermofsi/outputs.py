"""Machine-readable result files.

CSV files use a fixed column order, '.' decimals, LF line endings and the
shortest round-trip representation of every float, so reading a file back
gives the in-memory values exactly.  Non-converged cells carry ``DNF`` in the
``total_iterations`` column.
"""

import csv
import io
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .stepping import RunRecord, StepResult

MATRIX_COLUMNS = ("method", "tol", "total_iterations", "steps", "rejections", "end_error")
STAGE_COLUMNS = ("method", "iteration", "residual_norm")
COMPARISON_COLUMNS = ("tol", "adaptive_iterations", "fixed_iterations", "ratio",
                      "adaptive_error", "fixed_error", "fixed_dt")
DNF = "DNF"


@dataclass(frozen=True)
class MatrixRow:
    method: str
    tol: float
    total_iterations: int
    steps: int
    rejections: int
    end_error: float
    dnf: bool = False

    @classmethod
    def from_record(cls, rec, method=None):
        return cls(method or rec.label, float(rec.tol), rec.total_iterations,
                   rec.accepted_steps, rec.rejections, float(rec.end_error), rec.dnf)

    def __eq__(self, other):
        if not isinstance(other, MatrixRow):
            return NotImplemented
        a = (self.method, self.tol, self.total_iterations, self.steps, self.rejections, self.dnf)
        b = (other.method, other.tol, other.total_iterations, other.steps, other.rejections,
             other.dnf)
        same_err = self.end_error == other.end_error or (
            math.isnan(self.end_error) and math.isnan(other.end_error))
        return a == b and same_err

    __hash__ = None


def fmt_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def matrix_csv_text(rows):
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(MATRIX_COLUMNS)
    for r in rows:
        total = DNF if r.dnf else str(r.total_iterations)
        w.writerow([r.method, fmt_float(r.tol), total, r.steps, r.rejections,
                    fmt_float(r.end_error)])
    return buf.getvalue()


def parse_matrix_csv(text):
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != MATRIX_COLUMNS:
        raise ValueError(f"unexpected matrix CSV header {header!r}")
    rows = []
    for method, tol, total, steps, rej, err in reader:
        dnf = total == DNF
        rows.append(MatrixRow(method, float(tol), None if dnf else int(total), int(steps),
                              int(rej), float(err), dnf))
    return rows


def stage_csv_text(rows):
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(STAGE_COLUMNS)
    for r in rows:
        w.writerow([r.method, r.iteration, fmt_float(r.residual_norm)])
    return buf.getvalue()


def parse_stage_csv(text):
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != STAGE_COLUMNS:
        raise ValueError(f"unexpected stage CSV header {header!r}")
    return [(m, int(k), float(r)) for m, k, r in reader]


def stage_dat_text(rows, dt=None):
    """Gnuplot data: one block per method, blocks separated by two blank lines."""
    lines = [f"# residual decay, first stage of the first step" + (f", dt = {dt:g} s" if dt else ""),
             "# columns: iteration residual_norm"]
    methods = list(dict.fromkeys(r.method for r in rows))
    for i, m in enumerate(methods):
        if i:
            lines += ["", ""]
        lines.append(f"# method {m} (index {i})")
        lines += [f"{r.iteration} {r.residual_norm:.17g}" for r in rows if r.method == m]
    return "\n".join(lines) + "\n"


def matrix_table_text(rows, title="Total fixed-point iterations"):
    """TOL rows (descending) by method columns; DNF cells are marked."""
    methods = list(dict.fromkeys(r.method for r in rows))
    tols = sorted({r.tol for r in rows}, reverse=True)
    cell = {(r.tol, r.method): (DNF if r.dnf else str(r.total_iterations)) for r in rows}
    width = max([10] + [len(m) + 2 for m in methods])
    out = [title, "TOL".ljust(10) + "".join(m.rjust(width) for m in methods)]
    for t in tols:
        out.append(f"{t:<10.0e}" + "".join(cell.get((t, m), "-").rjust(width) for m in methods))
    return "\n".join(out) + "\n"


# -- run records --------------------------------------------------------------

def _floats(a):
    return None if a is None else [float(x) for x in np.ravel(a)]


def record_to_dict(rec):
    return {
        "label": rec.label,
        "tol": rec.tol,
        "accelerator": rec.accelerator,
        "predictor": rec.predictor,
        "adaptive": rec.adaptive,
        "final_time": rec.final_time,
        "end_error": rec.end_error,
        "dnf": rec.dnf,
        "failure": rec.failure,
        "total_iterations": rec.total_iterations,
        "accepted_steps": rec.accepted_steps,
        "rejections": rec.rejections,
        "final_structure": _floats(rec.final_structure),
        "final_fluid": _floats(rec.final_fluid),
        "steps": [
            {
                "t_n": s.t_n,
                "dt": s.dt,
                "accepted": s.accepted,
                "error_estimate": s.error_estimate,
                "stage_iterations": list(s.stage_iterations),
                "residual_norms": [list(r) for r in s.residual_norms],
                "failure": s.failure,
            }
            for s in rec.steps
        ],
    }


def record_from_dict(d):
    steps = [StepResult(s["accepted"], s["t_n"], s["dt"], s["dt"], s["error_estimate"],
                        list(s["stage_iterations"]), [list(r) for r in s["residual_norms"]],
                        failure=s["failure"])
             for s in d["steps"]]
    arr = lambda v: None if v is None else np.array(v)  # noqa: E731
    return RunRecord(d["label"], d["tol"], d["accelerator"], d["predictor"], d["adaptive"],
                     steps, d["final_time"], arr(d["final_structure"]), arr(d["final_fluid"]),
                     d["end_error"], d["dnf"], d["failure"])


def runs_json_text(records, reference=None):
    payload = {"runs": [record_to_dict(r) for r in records]}
    if reference is not None:
        payload["reference"] = record_to_dict(reference)
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def load_runs_json(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    ref = payload.get("reference")
    return ([record_from_dict(d) for d in payload["runs"]],
            None if ref is None else record_from_dict(ref))


# -- emitters -----------------------------------------------------------------

def emit_outputs(records, out_dir, name="matrix", reference=None, title=None):
    """Write ``<name>.csv``, ``<name>.txt`` and ``<name>_runs.json``; return the paths."""
    _ensure_dir(out_dir)
    rows = [MatrixRow.from_record(r) for r in records]
    paths = {
        "csv": os.path.join(out_dir, f"{name}.csv"),
        "table": os.path.join(out_dir, f"{name}.txt"),
        "runs": os.path.join(out_dir, f"{name}_runs.json"),
    }
    _write_text(paths["csv"], matrix_csv_text(rows))
    _write_text(paths["table"], matrix_table_text(rows, title or "Total fixed-point iterations"))
    _write_text(paths["runs"], runs_json_text(records, reference))
    return paths


def emit_stage_study(rows, out_dir):
    _ensure_dir(out_dir)
    paths = []
    for dt in dict.fromkeys(r.dt for r in rows):
        sub = [r for r in rows if r.dt == dt]
        stem = os.path.join(out_dir, f"stage_study_dt{dt:g}")
        _write_text(stem + ".csv", stage_csv_text(sub))
        _write_text(stem + ".dat", stage_dat_text(sub, dt))
        paths += [stem + ".csv", stem + ".dat"]
    if not rows:
        path = os.path.join(out_dir, "stage_study.csv")
        _write_text(path, stage_csv_text([]))
        paths.append(path)
    summary = ["Iterations to converge the first stage (final residual norm)"]
    for dt in dict.fromkeys(r.dt for r in rows):
        for m in dict.fromkeys(r.method for r in rows if r.dt == dt):
            seq = [r for r in rows if r.dt == dt and r.method == m]
            summary.append(f"dt={dt:<6g} {m:<8} {len(seq):4d}  {seq[-1].residual_norm:.3e}")
    path = os.path.join(out_dir, "stage_study.txt")
    _write_text(path, "\n".join(summary) + "\n")
    return paths + [path]


def comparison_csv_text(result):
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(COMPARISON_COLUMNS)
    for row in result.rows:
        fx = row.fixed
        w.writerow([fmt_float(row.tol),
                    DNF if row.adaptive.dnf else row.adaptive.total_iterations,
                    DNF if fx is None or fx.dnf else fx.total_iterations,
                    fmt_float(row.ratio), fmt_float(row.adaptive.end_error),
                    fmt_float(math.nan if fx is None else fx.end_error),
                    fmt_float(row.fixed_dt)])
    return buf.getvalue()


def emit_fixed_vs_adaptive(result, out_dir):
    paths = emit_outputs(result.records, out_dir, "fixed_vs_adaptive", result.reference,
                         title="Total fixed-point iterations, adaptive vs accuracy-matched fixed")
    lines = ["Fixed step size vs adaptive steering at matched accuracy",
             f"{'TOL':<9}{'adaptive':>10}{'fixed':>10}{'ratio':>8}{'err adapt':>12}"
             f"{'err fixed':>12}{'dt fixed':>11}"]
    for row in result.rows:
        fx = row.fixed
        fixed_it = DNF if fx is None or fx.dnf else str(fx.total_iterations)
        fixed_err = math.nan if fx is None else fx.end_error
        lines.append(f"{row.tol:<9.0e}{row.adaptive.total_iterations:>10}{fixed_it:>10}"
                     f"{row.ratio:>8.2f}{row.adaptive.end_error:>12.3e}{fixed_err:>12.3e}"
                     f"{row.fixed_dt:>11.4g}")
    paths["comparison_csv"] = os.path.join(out_dir, "fixed_vs_adaptive_comparison.csv")
    paths["comparison"] = os.path.join(out_dir, "fixed_vs_adaptive_comparison.txt")
    _write_text(paths["comparison_csv"], comparison_csv_text(result))
    _write_text(paths["comparison"], "\n".join(lines) + "\n")
    return paths
