"""CSV output with '#'-prefixed provenance lines and round-trip exact floats."""
from __future__ import annotations

import csv
import io
import os
import tempfile
from typing import Union

from .models import Trajectory
from .sweep import SweepResult, provenance_lines

TRAJECTORY_COLUMNS = ("n", "D", "dD", "C_S", "C_R", "pop_S")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def trajectory_table(traj: Trajectory) -> SweepResult:
    cfg = traj.config
    echo = [f"model = {cfg.kind}"]
    if hasattr(cfg, "kappa"):
        echo.append(f"kappa = {cfg.kappa!r}")
    echo += [f"J = {cfg.J!r}", f"Omega = {cfg.Omega!r}", f"T = {cfg.thermal.T!r}",
             f"omega_ratio = {cfg.thermal.omega_ratio!r}",
             f"n_max = {cfg.stop.n_max}", f"eps_settle = {cfg.stop.eps_settle!r}",
             f"settle_window = {cfg.stop.settle_window}",
             f"converged = {fmt(traj.converged)}", f"n_steps_run = {traj.n_steps_run}"]
    rows = tuple(tuple(getattr(r, c) for c in TRAJECTORY_COLUMNS) for r in traj.records)
    return SweepResult(columns=TRAJECTORY_COLUMNS, rows=rows,
                       provenance=provenance_lines("trajectory", None, echo))


def render_csv(result: Union[SweepResult, Trajectory]) -> str:
    if isinstance(result, Trajectory):
        result = trajectory_table(result)
    buf = io.StringIO()
    for line in result.provenance:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def export_csv(result: Union[SweepResult, Trajectory], path) -> None:
    """Write ``result`` atomically: a failed or interrupted write leaves no file behind."""
    text = render_csv(result)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".qcollide-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path) -> tuple[list[str], list[str], list[list[str]]]:
    """Return (provenance lines, header, rows as strings)."""
    comments, body = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                comments.append(line[1:].strip())
            else:
                body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        return comments, [], []
    return comments, rows[0], rows[1:]


def body_of(text: str) -> str:
    """CSV text with the provenance comment lines removed."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))
