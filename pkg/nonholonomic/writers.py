"""
Artifact files for a run: trajectory CSV, impact JSONL and JSON documents.
"""
import logging
from pathlib import Path

import pandas as pd
from rest_framework.renderers import JSONRenderer

from .serializers import AuditReportSerializer, ImpactRecordSerializer

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def trajectory_frame(trajectory):
    """Columns ``t, q_*, v_*, p_*, energy, constraint_residual`` in that order."""
    n = trajectory.x.shape[1]
    k = trajectory.w.shape[1]
    columns = {"t": trajectory.times}
    for i in range(n):
        columns[f"q_{i + 1}"] = trajectory.x[:, i]
    for i in range(k):
        columns[f"v_{i + 1}"] = trajectory.w[:, i]
    for i in range(k):
        columns[f"p_{i + 1}"] = trajectory.p[:, i]
    columns["energy"] = trajectory.energy
    columns["constraint_residual"] = trajectory.constraint_residual
    return pd.DataFrame(columns)


def write_trajectory_csv(trajectory, path):
    path = Path(path)
    trajectory_frame(trajectory).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {len(trajectory)} samples to {path}")
    return path


def render_json(data, indent=None):
    context = {"indent": indent} if indent else None
    return JSONRenderer().render(data, renderer_context=context)


def write_events_jsonl(events, path):
    path = Path(path)
    renderer = JSONRenderer()
    lines = [renderer.render(ImpactRecordSerializer(event).data) for event in events]
    path.write_bytes(b"".join(line + b"\n" for line in lines))
    logger.debug(f"Wrote {len(events)} impacts to {path}")
    return path


def write_json(data, path):
    path = Path(path)
    path.write_bytes(render_json(data, indent=2) + b"\n")
    return path


def write_report(report, path):
    return write_json(AuditReportSerializer(report).data, path)
