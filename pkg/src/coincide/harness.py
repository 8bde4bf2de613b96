"""Seeded experiment driver: body corpora, coincidence trials, reports."""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from .body import SupportBody, body_from_descriptor, make_ellipsoid, make_perturbed_ball
from .diameters import PointParams, multiplicity_at, segment_distance
from .errors import CoincideError
from .kappa import combined_lower_bound
from .search import SearchParams, search_concurrent_diameters
from .sections import SelectionParams, search_coincident_selections, selection_map

MODES = ("diameters", "selections", "both")


@dataclass
class ExperimentConfig:
    d: int = 2
    family: str = "perturbed_ball"  # or "ellipsoid"
    degree: int = 3
    eps_min: float = 0.03
    eps_max: float = 0.1
    base_jitter: float = 0.0
    count: int = 20
    master_seed: int = 0
    mode: str = "diameters"
    k_min: int = 2
    k_max: int = 3
    center_kind: str = "centroid"
    search: dict = field(default_factory=dict)
    selection: dict = field(default_factory=dict)
    trial_log: Optional[str] = None
    report_path: Optional[str] = None

    def validate(self):
        if self.mode not in MODES:
            raise CoincideError(f"mode must be one of {MODES}")
        if self.family not in ("perturbed_ball", "ellipsoid"):
            raise CoincideError(f"unknown body family {self.family!r}")
        if self.mode in ("diameters", "both") and not 2 <= self.d <= 8:
            raise CoincideError("diameter experiments need 2 <= d <= 8")
        if self.mode in ("selections", "both") and self.d not in (2, 3):
            raise CoincideError("selection experiments need d in {2, 3}")
        if not 2 <= self.k_min <= self.k_max:
            raise CoincideError("need 2 <= k_min <= k_max")
        if self.count < 1:
            raise CoincideError("count must be >= 1")
        return self

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise CoincideError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data).validate()

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path):
        Path(path).write_text(self.to_json() + "\n")


@dataclass
class TrialRecord:
    body_index: int
    seed: int
    mode: str
    k: int
    body: dict
    residual: float
    accepted: bool
    x: list
    min_separation: float
    interior_margin: float
    verified: bool
    wall_time: float = 0.0
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Report:
    table: list
    corpus: dict
    metadata: dict = field(default_factory=dict)

    def to_dict(self, include_metadata: bool = True) -> dict:
        out = {"table": self.table, "corpus": self.corpus}
        if include_metadata:
            out["metadata"] = self.metadata
        return out


def body_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1, np.uint64)[0] >> 1)


def generate_body(config: ExperimentConfig, index: int) -> SupportBody:
    seed = body_seed(config.master_seed, index)
    rng = np.random.Generator(np.random.Philox(seed))
    d = config.d
    if config.family == "ellipsoid":
        Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        axes = rng.uniform(0.5, 2.0, d)
        return make_ellipsoid(Q @ np.diag(axes**2) @ Q.T, rng.uniform(-0.5, 0.5, d))
    eps = float(rng.uniform(config.eps_min, config.eps_max))
    base = None
    if config.base_jitter > 0:
        base = np.diag(1.0 + config.base_jitter * rng.uniform(0.0, 1.0, d))
    return make_perturbed_ball(d, config.degree, eps, seed, base=base)


def _verify_diameters(body, cert, k) -> bool:
    dist = [segment_distance(cert.x, c.a, c.b) for c in cert.items]
    if not (max(dist) < 10 * cert.residual + 1e-12 and cert.interior_margin > 0):
        return False
    if body.d == 2:
        return multiplicity_at(body, cert.x, PointParams(max_results=max(64, k))).count >= k
    return True


def _verify_selections(body, cert, center_kind) -> bool:
    res = SelectionParams().resolution
    vals = [selection_map(body, h, center_kind, res).value for h in cert.items]
    return bool(max(np.linalg.norm(v - cert.x) for v in vals) < 10 * cert.residual + 1e-12)


def _record(index, seed, mode, k, body, cert, verified, wall) -> TrialRecord:
    return TrialRecord(
        body_index=index,
        seed=seed,
        mode=mode,
        k=k,
        body=body.descriptor(),
        residual=cert.residual,
        accepted=cert.accepted,
        x=cert.x.tolist(),
        min_separation=cert.min_separation,
        interior_margin=cert.interior_margin,
        verified=bool(cert.accepted and verified),
        wall_time=wall,
    )


class _TrialLog:
    """Single writer that appends one JSON line per trial and flushes."""

    def __init__(self, path):
        self.fh = open(path, "w") if path else None

    def write(self, rec: TrialRecord):
        if self.fh:
            self.fh.write(json.dumps(rec.to_dict()) + "\n")
            self.fh.flush()

    def close(self):
        if self.fh:
            self.fh.close()


def run_trials(config: ExperimentConfig, log_path=None) -> list:
    config.validate()
    log = _TrialLog(log_path or config.trial_log)
    records = []
    sparams = SearchParams(**config.search)
    hparams = SelectionParams(**config.selection)
    modes = ["diameters", "selections"] if config.mode == "both" else [config.mode]
    try:
        for i in range(config.count):
            seed = body_seed(config.master_seed, i)
            try:
                body = generate_body(config, i)
            except CoincideError as exc:
                rec = TrialRecord(i, seed, "generation", 0, {}, float("nan"), False, [], float("nan"),
                                  float("nan"), False, error=str(exc))
                log.write(rec)
                records.append(rec)
                continue
            for mode in modes:
                for k in range(config.k_min, config.k_max + 1):
                    t0 = time.perf_counter()
                    if mode == "diameters":
                        cert = search_concurrent_diameters(body, k, replace(sparams, seed=seed % 2**32))
                        ok = cert.accepted and _verify_diameters(body, cert, k)
                    else:
                        cert = search_coincident_selections(
                            body, k, config.center_kind, replace(hparams, seed=seed % 2**32)
                        )
                        ok = cert.accepted and _verify_selections(body, cert, config.center_kind)
                    rec = _record(i, seed, mode, k, body, cert, ok, time.perf_counter() - t0)
                    log.write(rec)
                    records.append(rec)
    finally:
        log.close()
    return records


def aggregate(records, config: ExperimentConfig) -> Report:
    """Fold trial records into the per-mode table; order independent."""
    records = sorted(records, key=lambda r: (r.body_index, r.mode, r.k))
    bound = combined_lower_bound(config.d)
    ks = list(range(config.k_min, config.k_max + 1))
    modes = ["diameters", "selections"] if config.mode == "both" else [config.mode]
    table = []
    failures = sorted({r.body_index for r in records if r.mode == "generation"})
    for mode in modes:
        rows = [r for r in records if r.mode == mode]
        bodies = sorted({r.body_index for r in rows})
        per_body = {}
        for b in bodies:
            acc = [r.k for r in rows if r.body_index == b and r.accepted and r.verified]
            per_body[b] = max(acc) if acc else 1
        row = {
            "mode": mode,
            "d": config.d,
            "theoretical_lower": bound.lower,
            "upper": bound.upper,
            "grunbaum_target": config.d + 1,
            "n_bodies": len(bodies),
            "empirical_max_k": max(per_body.values()) if per_body else 0,
            "worst_body_max_k": min(per_body.values()) if per_body else 0,
            "saturated": bool(per_body) and min(per_body.values()) >= config.k_max,
        }
        for k in ks:
            at_k = [r for r in rows if r.k == k]
            row[f"success_rate_k{k}"] = (
                sum(1 for r in at_k if r.accepted and r.verified) / len(at_k) if at_k else 0.0
            )
        table.append(row)
    corpus = {
        "config": {k: v for k, v in asdict(config).items() if k not in ("trial_log", "report_path")},
        "bodies_generated": config.count - len(failures),
        "generation_failures": failures,
    }
    return Report(table=table, corpus=corpus)


def run_experiment(config: ExperimentConfig, log_path=None) -> Report:
    t0 = time.perf_counter()
    records = run_trials(config, log_path)
    report = aggregate(records, config)
    report.metadata = {
        "created": datetime.now(timezone.utc).isoformat(),
        "wall_time_total": time.perf_counter() - t0,
    }
    return report


def load_trials(path) -> list:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            out.append(TrialRecord(**json.loads(line)))
    return out


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def report_csv(report: Report) -> str:
    if not report.table:
        return ""
    buf = io.StringIO()
    cols = list(report.table[0].keys())
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in report.table:
        w.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def report_json(report: Report, include_metadata: bool = True) -> str:
    # float repr is the shortest string that round-trips (at most 17 digits)
    return json.dumps(report.to_dict(include_metadata), indent=2) + "\n"


def emit_report(report: Report, fmt: str = "json", path=None, include_metadata: bool = True) -> str:
    if fmt == "csv":
        text = report_csv(report)
    elif fmt == "json":
        text = report_json(report, include_metadata)
    else:
        raise CoincideError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def render_svg_2d(body: SupportBody, certificate, path=None, size: int = 400, n_boundary: int = 720) -> str:
    """Static SVG of a planar body, the certificate chords and the common point."""
    if body.d != 2:
        raise ValueError("render_svg_2d needs a planar body")
    theta = 2 * np.pi * np.arange(n_boundary) / n_boundary
    P = body.contact(np.column_stack([np.cos(theta), np.sin(theta)]))
    px = svg_transform(body, size, n_boundary)

    pts = " ".join("%.3f,%.3f" % tuple(px(p)) for p in P)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<polygon points="{pts}" fill="none" stroke="black" stroke-width="1"/>',
    ]
    for c in certificate.items:
        (x1, y1), (x2, y2) = px(c.a), px(c.b)
        parts.append(
            f'<path d="M {x1:.3f} {y1:.3f} L {x2:.3f} {y2:.3f}" stroke="#c0392b" stroke-width="1"/>'
        )
    cx, cy = px(certificate.x)
    parts.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="3" fill="#2c3e50"/>')
    parts.append("</svg>")
    text = "\n".join(parts) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def svg_transform(body: SupportBody, size: int = 400, n_boundary: int = 720):
    """The world-to-pixel map used by :func:`render_svg_2d`."""
    theta = 2 * np.pi * np.arange(n_boundary) / n_boundary
    P = body.contact(np.column_stack([np.cos(theta), np.sin(theta)]))
    lo = P.min(axis=0)
    hi = P.max(axis=0)
    pad = 20.0
    scale = (size - 2 * pad) / float(max(hi - lo))
    return lambda p: np.array([pad + (p[0] - lo[0]) * scale, size - pad - (p[1] - lo[1]) * scale])
