"""Scripted finite-n probes of the growth, convergence, entropy-rate,
ball-count and regularity statements, with JSON/CSV/SVG emitters.

Every report carries the rows it asserts over, so each flag can be
recomputed from the report alone.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .classes import (
    HEURISTIC,
    HereditaryClass,
    draw_uniform,
    growth_series,
    mcmc_chain,
)
from .cutmetrics import count_balls, delta_graph_graphon, weak_regularity
from .errors import DomainError, GraphonLabError
from .graphons import (
    StepGraphon,
    constant,
    entropy,
    exact_rg_entropy,
    rg_entropy_lower_bound,
    sample,
    step,
    string_a,
    turan,
    wrs,
)
from .graphs import MAX_ENUMERATION, Graph

REPORT_SCHEMA = "graphonlab/report/v1"
KINDS = ("growth", "convergence", "entropy_rate", "ball_count", "regularity")


@dataclass
class ExperimentReport:
    kind: str
    params: dict
    rows: list[dict]
    prediction: float | None = None
    flags: dict = field(default_factory=dict)
    x: str = "n"
    y: tuple[str, ...] = ()
    wall_clock: float = 0.0
    version: str = __version__

    def to_dict(self, timing: bool = False) -> dict:
        doc = {
            "schema": REPORT_SCHEMA,
            "version": self.version,
            "kind": self.kind,
            "params": self.params,
            "prediction": self.prediction,
            "flags": self.flags,
            "plot": {"x": self.x, "y": list(self.y)},
            "rows": self.rows,
        }
        if timing:
            doc["wall_clock"] = self.wall_clock
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentReport:
        plot = doc.get("plot", {})
        return cls(doc["kind"], doc["params"], doc["rows"], doc.get("prediction"), doc.get("flags", {}),
                   plot.get("x", "n"), tuple(plot.get("y", ())), doc.get("wall_clock", 0.0),
                   doc.get("version", __version__))


def _seed_list(seed):
    return list(seed) if isinstance(seed, (tuple, list)) else [seed]


def default_threads() -> int:
    env = os.environ.get("GRAPHONLAB_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise DomainError(f"GRAPHONLAB_THREADS must be a positive integer, got {env!r}") from None
        if n < 1:
            raise DomainError(f"GRAPHONLAB_THREADS must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


def _map(fn, items, threads):
    """Ordered map over independent rows; the result does not depend on ``threads``."""
    items = list(items)
    threads = default_threads() if threads is None else threads
    if threads < 1:
        raise DomainError("threads must be at least 1")
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


def _nonincreasing(xs):
    return all(b <= a for a, b in zip(xs, xs[1:]))


# -- growth ------------------------------------------------------------------


def run_growth(c: HereditaryClass, n_max: int) -> ExperimentReport:
    t0 = time.perf_counter()
    gs = growth_series(c, n_max)
    rows = [r.to_dict() for r in gs.rows]
    exps = [r["exponent"] for r in rows]
    flags = {
        "decreasing": _nonincreasing(exps) if len(exps) > 1 else None,
        "above_prediction": (exps[-1] >= gs.prediction) if exps and gs.prediction is not None else None,
        "at_cap": gs.colouring.at_cap if gs.colouring else None,
    }
    params = {"class": c.name, "n_max": n_max}
    if gs.colouring:
        params["colouring_number"] = [gs.colouring.r, gs.colouring.s]
    return ExperimentReport("growth", params, rows, gs.prediction, flags, "n", ("exponent",),
                            time.perf_counter() - t0)


# -- convergence ----------------------------------------------------------------


def run_convergence(c: HereditaryClass, maximizer: StepGraphon, ns: Sequence[int], samples: int,
                    seed: int, mcmc_steps_per_pair: int = 20, threads: int | None = None) -> ExperimentReport:
    """Cut-distance quartiles of uniform members of ``c`` to ``maximizer``.

    Rows with ``n <= 8`` use the exact sampler; larger ``n`` use the toggle
    chain (``mcmc_steps_per_pair * C(n,2)`` steps between draws) and are
    tagged HEURISTIC.
    """
    t0 = time.perf_counter()
    if samples < 1:
        raise DomainError("need at least one sample per n")

    def one(n):
        row_seed = _seed_list(seed) + [n]
        if n <= MAX_ENUMERATION:
            rng = np.random.Generator(np.random.Philox(row_seed))
            graphs = [draw_uniform(c, n, rng) for _ in range(samples)]
            method, tag = "exact", None
        else:
            gap = mcmc_steps_per_pair * comb(n, 2)
            chain = mcmc_chain(c, n, row_seed, burn_in=gap, thin=gap)
            graphs = [next(chain) for _ in range(samples)]
            method, tag = "mcmc", HEURISTIC
        d = np.array([delta_graph_graphon(g, maximizer).value for g in graphs])
        q1, med, q3 = (float(x) for x in np.quantile(d, [0.25, 0.5, 0.75]))
        row = {"n": n, "samples": samples, "median": med, "q1": q1, "q3": q3, "method": method,
               "seed": row_seed}
        if tag:
            row["tag"] = tag
        return row

    rows = _map(one, sorted(set(ns)), threads)
    medians = [r["median"] for r in rows]
    flags = {
        "medians_nonincreasing": _nonincreasing(medians) if len(rows) > 1 else None,
        "last_below_first": medians[-1] < medians[0] if len(rows) > 1 else None,
        "distance_kind": "UPPER_BOUND",
    }
    params = {"class": c.name, "maximizer": maximizer.to_dict(), "ns": sorted(set(ns)),
            "samples": samples, "seed": seed}
    return ExperimentReport("convergence", params, rows, None, flags, "n", ("median", "q1", "q3"),
                            time.perf_counter() - t0)


# -- entropy rate -------------------------------------------------------------


def run_entropy_rate(w: StepGraphon, n_max: int) -> ExperimentReport:
    t0 = time.perf_counter()
    ent = entropy(w)
    rows = []
    for n in range(2, n_max + 1):
        h = exact_rg_entropy(w, n)
        ratio = h / comb(n, 2)
        rows.append({"n": n, "entropy": h, "ratio": ratio, "lower_bound": rg_entropy_lower_bound(w, n),
                     "gap": abs(ratio - ent)})
    flags = {
        "lower_bound_holds": all(r["entropy"] >= r["lower_bound"] - 1e-9 for r in rows),
        "gap_shrinks": rows[-1]["gap"] < rows[0]["gap"] if len(rows) > 1 else None,
    }
    return ExperimentReport("entropy_rate", {"graphon": w.to_dict(), "n_max": n_max}, rows, ent, flags,
                            "n", ("ratio",), time.perf_counter() - t0)


# -- ball counts ----------------------------------------------------------------


def run_ball_count(w: StepGraphon, n: int, deltas: Sequence[float], threads: int | None = None) -> ExperimentReport:
    t0 = time.perf_counter()
    ent = entropy(w)
    pairs = comb(n, 2)

    def one(d):
        bc = count_balls(n, d, w)
        return {
            "delta": float(d), "n_hat": bc.n_hat, "n_full": bc.n_full,
            "exponent_hat": math.log2(bc.n_hat) / pairs if bc.n_hat and pairs else None,
            "exponent_full": math.log2(bc.n_full) / pairs if bc.n_full and pairs else None,
            "entropy": ent,
        }

    rows = _map(one, sorted(deltas), threads)
    flags = {
        "monotone": _nonincreasing([-r["n_hat"] for r in rows]) and _nonincreasing([-r["n_full"] for r in rows]),
        "hat_le_full": all(r["n_hat"] <= r["n_full"] for r in rows),
        "n_full_kind": "LOWER_BOUND",
    }
    params = {"graphon": w.to_dict(), "n": n, "deltas": [float(d) for d in sorted(deltas)]}
    return ExperimentReport("ball_count", params, rows, ent, flags, "delta", ("exponent_hat", "exponent_full"),
                            time.perf_counter() - t0)


# -- regularity -----------------------------------------------------------------


def _random_step(rng, k_max=6):
    k = int(rng.integers(1, k_max + 1))
    raw = rng.integers(1, 10, size=k)
    v = rng.random((k, k))
    return StepGraphon([int(x) / int(raw.sum()) for x in raw], (v + v.T) / 2)


def standard_corpus(seed: int = 0, size: int = 20) -> list[tuple[str, Graph | StepGraphon]]:
    """Pinned regularity corpus: named graphons, W-random graphs, random step graphons."""
    rng = np.random.Generator(np.random.Philox(_seed_list(seed) + [7]))
    corpus: list[tuple[str, Graph | StepGraphon]] = [
        ("sample:constant:0.5:64", sample(constant(0.5), 64, _seed_list(seed) + [1])),
        ("sample:wrs:2,0:48", sample(wrs(2, 0), 48, _seed_list(seed) + [2])),
        ("sample:turan:3:30", sample(turan(3), 30, _seed_list(seed) + [3])),
        ("turan:2", turan(2)),
        ("turan:3", turan(3)),
        ("wrs:2,1", wrs(2, 1)),
        ("wrs:3,1", wrs(3, 1)),
        ("string:1/8", string_a("1/8")),
        ("constant:0.5", constant(0.5)),
    ]
    i = 0
    while len(corpus) < size:
        corpus.append((f"random_step:{i}", _random_step(rng)))
        i += 1
    return corpus[:size]


def run_regularity(corpus: Sequence[tuple[str, Graph | StepGraphon]], ks: Sequence[int], seed: int = 0,
                   threads: int | None = None) -> ExperimentReport:
    t0 = time.perf_counter()

    def one(job):
        (label, subject), k = job
        res = weak_regularity(subject, k, seed=seed)
        ent_s = entropy(res.subject)
        ent_step = entropy(step(res.subject, res.partition))
        return {
            "subject": label, "k": k, "residual": res.residual, "exact": res.exact,
            "residual_upper": res.residual_upper, "bound": res.bound,
            "within_bound": res.residual_upper <= res.bound + 1e-9,
            "entropy_subject": ent_s, "entropy_stepped": ent_step,
            "entropy_audit": ent_step >= ent_s - 1e-12,
        }

    rows = _map(one, [(item, k) for item in corpus for k in ks], threads)
    flags = {
        "all_within_bound": all(r["within_bound"] for r in rows),
        "entropy_audit": all(r["entropy_audit"] for r in rows),
    }
    params = {"subjects": [label for label, _ in corpus], "ks": list(ks), "seed": seed}
    return ExperimentReport("regularity", params, rows, None, flags, "k", ("residual",), time.perf_counter() - t0)


# -- emitters -------------------------------------------------------------------


def _columns(rows):
    cols = []
    for r in rows:
        for key in r:
            if key not in cols:
                cols.append(key)
    return cols


def _cell(v):
    if isinstance(v, float):
        return format(v, ".12g")
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    if v is None:
        return ""
    return str(v)


def to_csv(report: ExperimentReport) -> str:
    cols = _columns(report.rows) or [report.x, *report.y]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(cols)
    for r in report.rows:
        wr.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def to_svg(report: ExperimentReport, width: int = 640, height: int = 400) -> str:
    """Line chart of the report's ``y`` series against ``x``."""
    pad = 50
    pts = {}
    for name in report.y:
        series = [(r[report.x], r[name]) for r in report.rows
                  if isinstance(r.get(report.x), (int, float)) and isinstance(r.get(name), (int, float))]
        if series:
            pts[name] = series
    xs = [x for s in pts.values() for x, _ in s]
    ys = [y for s in pts.values() for _, y in s]
    if report.prediction is not None:
        ys.append(report.prediction)
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<title>{report.kind}</title>',
        f'<line class="axis" x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line class="axis" x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.2f}" y="{height - 12}" text-anchor="middle">{report.x}</text>',
        f'<text x="{pad:.2f}" y="{pad - 12}" text-anchor="start">{_cell(y1)}</text>',
        f'<text x="{pad:.2f}" y="{height - pad + 16}" text-anchor="start">{_cell(y0)}</text>',
    ]
    for i, (name, series) in enumerate(pts.items()):
        colour = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in series)
        out.append(f'<polyline class="series" data-name="{name}" fill="none" stroke="{colour}" points="{coords}"/>')
    if report.prediction is not None:
        yp = sy(report.prediction)
        out.append(f'<line class="asymptote" x1="{pad}" y1="{yp:.2f}" x2="{width - pad}" y2="{yp:.2f}" '
                   f'stroke="gray" stroke-dasharray="6,4"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _rounded(x, digits):
    if isinstance(x, float):
        return float(format(x, f".{digits}g")) if math.isfinite(x) else x
    if isinstance(x, dict):
        return {k: _rounded(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_rounded(v, digits) for v in x]
    return x


def to_json(report: ExperimentReport, timing: bool = False, digits: int | None = None) -> str:
    """JSON text of ``report``; ``digits`` rounds every float to that many significant digits."""
    doc = report.to_dict(timing=timing)
    if digits is not None:
        doc = _rounded(doc, digits)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def emit(report: ExperimentReport, fmt: str, path=None, timing: bool = False, digits: int | None = None) -> str:
    """Render ``report`` as json, csv or svg; write it to ``path`` if given.

    JSON omits the wall-clock time unless ``timing`` is set, so equal inputs
    give byte-identical files.
    """
    if fmt == "json":
        text = to_json(report, timing=timing, digits=digits)
    elif fmt == "csv":
        text = to_csv(report)
    elif fmt == "svg":
        text = to_svg(report)
    else:
        raise DomainError(f"unknown report format {fmt!r}; use json, csv or svg")
    if path is not None:
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise ReportIOError(f"cannot write {path}: {exc.strerror}") from exc
    return text


class ReportIOError(GraphonLabError, OSError):
    pass


__all__ = [
    "ExperimentReport", "KINDS", "default_threads", "run_growth", "run_convergence", "run_entropy_rate",
    "run_ball_count", "run_regularity", "standard_corpus", "emit", "to_csv", "to_json", "to_svg",
]
