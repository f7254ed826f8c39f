"""CSV readers and writers for clouds, embeddings and edge files, plus SVG scatter plots."""

from __future__ import annotations

import csv
import os
from typing import Iterable, Optional, Sequence

import numpy as np

from embedor.core import EdgeRecord, PointCloud

EDGE_FIELDS = ("i", "j", "euclid", "kappa", "energy", "weight", "delta")
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


class FormatError(ValueError):
    pass


def fmt(x) -> str:
    return "%.17g" % x


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _read_rows(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise FormatError(f"{path}: empty file")
    return rows


def load_point_cloud(path, label_column: Optional[str] = None, name: Optional[str] = None) -> PointCloud:
    """Read a comma-separated cloud. A header row is optional unless labels are requested."""
    rows = _read_rows(path)
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise FormatError(f"{path}: no data rows")
    label_idx = None
    if label_column is not None:
        if header is None or label_column not in header:
            raise FormatError(f"{path}: no column named {label_column!r}")
        label_idx = header.index(label_column)
    width = len(header) if header is not None else len(rows[0])
    coords, labels = [], []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise FormatError(f"{path}: row {r} has {len(row)} fields, expected {width}")
        vals = []
        for c, tok in enumerate(row):
            if c == label_idx:
                try:
                    labels.append(int(float(tok)))
                except ValueError:
                    raise FormatError(f"{path}: row {r}: label {tok!r} is not an integer") from None
                continue
            try:
                vals.append(float(tok))
            except ValueError:
                raise FormatError(f"{path}: row {r}, column {c}: {tok!r} is not numeric") from None
        coords.append(vals)
    pts = np.array(coords, dtype=np.float64)
    if pts.shape[0] < 2:
        raise FormatError(f"{path}: need at least 2 points, got {pts.shape[0]}")
    lab = np.array(labels, dtype=np.int64) if label_idx is not None else None
    return PointCloud(pts, lab, name or os.path.splitext(os.path.basename(str(path)))[0])


def write_point_cloud(cloud: PointCloud, path, label_column: str = "label") -> None:
    with open(path, "w", newline="") as fh:
        cols = [f"x{d}" for d in range(cloud.dim)]
        if cloud.labels is not None:
            cols.append(label_column)
        fh.write(",".join(cols) + "\n")
        for r in range(cloud.n):
            row = [fmt(v) for v in cloud.points[r]]
            if cloud.labels is not None:
                row.append(str(int(cloud.labels[r])))
            fh.write(",".join(row) + "\n")


def write_embedding(embedding, path, labels: Optional[Sequence[int]] = None) -> None:
    """Rows ``index,y0,...,y{m-1}[,label]``; accepts an EmbeddingState or an array."""
    Y = np.asarray(getattr(embedding, "Y", embedding), dtype=np.float64)
    if labels is None:
        labels = getattr(embedding, "labels", None)
    with open(path, "w", newline="") as fh:
        cols = ["index"] + [f"y{d}" for d in range(Y.shape[1])]
        if labels is not None:
            cols.append("label")
        fh.write(",".join(cols) + "\n")
        for r in range(Y.shape[0]):
            row = [str(r)] + [fmt(v) for v in Y[r]]
            if labels is not None:
                row.append(str(int(labels[r])))
            fh.write(",".join(row) + "\n")


def load_embedding(path):
    """Inverse of ``write_embedding``; returns (Y, labels or None)."""
    rows = _read_rows(path)
    header = [c.strip() for c in rows[0]]
    if not header or header[0] != "index":
        raise FormatError(f"{path}: expected an 'index' column first")
    ycols = [c for c, h in enumerate(header) if h.startswith("y") and h[1:].isdigit()]
    lcol = header.index("label") if "label" in header else None
    Y = np.empty((len(rows) - 1, len(ycols)))
    labels = np.empty(len(rows) - 1, dtype=np.int64) if lcol is not None else None
    for r, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise FormatError(f"{path}: row {r} has {len(row)} fields, expected {len(header)}")
        try:
            if int(row[0]) != r:
                raise FormatError(f"{path}: row {r} carries index {row[0]}")
            Y[r] = [float(row[c]) for c in ycols]
            if lcol is not None:
                labels[r] = int(row[lcol])
        except ValueError as exc:
            raise FormatError(f"{path}: row {r}: {exc}") from None
    return Y, labels


def _opt(x) -> str:
    return "" if x is None else fmt(x)


def write_edges(records: Iterable[EdgeRecord], path) -> None:
    """Annotation file ``i,j,euclid,kappa,energy,weight,delta``; missing values are empty."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(EDGE_FIELDS) + "\n")
        for e in records:
            fh.write(f"{e.i},{e.j},{fmt(e.euclid)},{_opt(e.kappa)},{_opt(e.energy)},{_opt(e.weight)},{_opt(e.delta)}\n")


def load_edges(path) -> list[EdgeRecord]:
    rows = _read_rows(path)
    header = [c.strip() for c in rows[0]]
    if header[:3] != ["i", "j", "euclid"]:
        raise FormatError(f"{path}: expected header starting with i,j,euclid")
    out = []
    for r, row in enumerate(rows[1:]):
        vals = dict(zip(header, row))
        try:
            extra = {k: float(vals[k]) if vals.get(k, "") != "" else None for k in EDGE_FIELDS[3:] if k in header}
            out.append(EdgeRecord(int(vals["i"]), int(vals["j"]), float(vals["euclid"]), **extra))
        except (ValueError, KeyError) as exc:
            raise FormatError(f"{path}: row {r}: {exc}") from None
    return out


def write_edge_list(graph, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("i,j,euclid\n")
        for a, b, d in zip(graph.ei, graph.ej, graph.euclid):
            fh.write(f"{a},{b},{fmt(d)}\n")


def load_edge_list(path, n: int):
    from embedor.graph import NeighborGraph

    recs = load_edges(path)
    ei = np.array([e.i for e in recs], dtype=np.int64)
    ej = np.array([e.j for e in recs], dtype=np.int64)
    d = np.array([e.euclid for e in recs])
    return NeighborGraph.from_edges(n, ei, ej, d)


def write_summary(values: dict, path) -> None:
    """``name,value`` lines in insertion order."""
    with open(path, "w", newline="") as fh:
        fh.write("metric_name,value\n")
        for k, v in values.items():
            if isinstance(v, (bool, np.bool_)):
                v = "true" if v else "false"
            elif isinstance(v, (float, np.floating)):
                v = fmt(v)
            fh.write(f"{k},{v}\n")


def write_pair_distances(metric, path, rows=None, cols=None) -> None:
    """Metric values as ``i,j,delta``; the full upper triangle unless pairs are given."""
    if rows is None:
        rows, cols = np.triu_indices(metric.n, 1)
    vals = metric.pairs(rows, cols)
    with open(path, "w", newline="") as fh:
        fh.write("i,j,delta\n")
        for a, b, v in zip(rows, cols, vals):
            fh.write(f"{a},{b},{fmt(v)}\n")


def emit_scatter_svg(
    embedding,
    edges: Sequence[EdgeRecord],
    path,
    labels: Optional[Sequence[int]] = None,
    size: int = 800,
    flagged: Optional[Iterable[int]] = None,
) -> None:
    """Scatter of the first two coordinates with edges drawn as line segments.

    ``flagged`` holds positions in ``edges`` to draw in red.
    """
    Y = np.asarray(getattr(embedding, "Y", embedding), dtype=np.float64)
    if labels is None:
        labels = getattr(embedding, "labels", None)
    n = Y.shape[0]
    for e in edges:
        if not (0 <= e.i < n and 0 <= e.j < n):
            raise ValueError(f"edge ({e.i}, {e.j}) out of range for {n} points")
    if Y.shape[1] == 1:
        Y = np.column_stack([Y[:, 0], np.zeros(n)])
    xy = Y[:, :2]
    lo = xy.min(axis=0)
    span = float((xy.max(axis=0) - lo).max()) or 1.0
    margin = 20
    scale = (size - 2 * margin) / span
    px = margin + (xy[:, 0] - lo[0]) * scale
    py = size - margin - (xy[:, 1] - lo[1]) * scale
    bad = set(flagged or ())
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        '<g class="edges" stroke-width="0.5">',
    ]
    for pos, e in enumerate(edges):
        color = "#d62728" if pos in bad else "#555555"
        parts.append(
            f'<line x1="{px[e.i]:.2f}" y1="{py[e.i]:.2f}" x2="{px[e.j]:.2f}" y2="{py[e.j]:.2f}" stroke="{color}" stroke-opacity="0.5"/>'
        )
    parts.append("</g>")
    parts.append('<g class="points">')
    if labels is None:
        labels = np.zeros(n, dtype=int)
    codes = {c: PALETTE[k % len(PALETTE)] for k, c in enumerate(sorted(set(int(v) for v in labels)))}
    for r in range(n):
        parts.append(f'<circle cx="{px[r]:.2f}" cy="{py[r]:.2f}" r="1.5" fill="{codes[int(labels[r])]}"/>')
    parts.append("</g></svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
