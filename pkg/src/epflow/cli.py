"""Experiment front end: one command per study, plot-ready tables out.

Every run resolves a flat key-value configuration (defaults first, then
an optional config file, then command-line flags), records the resolved
values in the output header, and emits rows deterministically: the same
configuration and seed always produce the same bytes. Tool version and
wall time go to a sidecar file so the results themselves stay stable.

Counts grow like iterated exponentials, so census tables carry both the
exact decimal text and a natural-log column; downstream plotting reads
the log column and never parses 60-digit integers.

Exit codes: 0 success, 1 invalid input, 2 success with a low-confidence
flag raised by the experiment, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import __version__
from .bumps import build_w, flatness_report, make_gamma0, make_psi
from .disk import build_ladder, ep_rate, orbit_census, sphere_census
from .errors import DivergenceSignal, DomainError
from .flow import detect_period, integrate, make_disk_field, speed_profile
from .suspension import (
    CAT_MATRIX,
    GOLDEN_ANGLE,
    RegionBox,
    SlowDownSpec,
    abramov_check,
    circle_rotation,
    gamma_return,
    occupation_fraction_series,
    reparam,
    suspend,
    theta,
    torus_automorphism,
)
from .tear import (
    make_embedded_field,
    make_tear_chart,
    make_tear_field,
    mirror_return,
    residual_grids,
    return_ratio,
    rotate_field,
    section_samples,
    semiconjugacy_residual,
)

__all__ = ["ExperimentConfig", "parse_config_file", "run", "main"]

_FORMATS = ("csv", "jsonl")
_SCALING_OF = {"Z0": "unit", "Z1": "inverse-square", "Z2": "dyadic"}


# ---------------------------------------------------------------------------
# Shared validation helpers


def _pick(value, choices, what: str):
    if value not in choices:
        raise DomainError(
            f"{what} must be one of {', '.join(choices)}, got {value!r}"
        )
    return value


def _index_range(params, flow: str):
    lo = int(params["min-index"])
    hi = int(params["max-index"])
    # the dyadic period grid overflows double precision beyond index 9
    cap = 9 if flow == "Z2" else 16
    if not 2 <= lo <= hi <= cap:
        raise DomainError(
            f"index range [{lo}, {hi}] must satisfy 2 <= min <= max <= {cap}"
            f" for flow {flow}"
        )
    return lo, hi


def _grid_time(flow: str, n: int) -> float:
    if flow == "Z2":
        return 2.0 * math.pi * float(2 ** (2**n))
    return 2.0 * math.pi * n * n


# ---------------------------------------------------------------------------
# Experiment runners: (params, seed, threads) -> (columns, rows, low_flag)


def _census_rows(params, sphere: bool):
    flow = _pick(params["flow"], tuple(_SCALING_OF), "flow")
    lo, hi = _index_range(params, flow)
    scaling = _SCALING_OF[flow]
    lad = build_ladder(max(2, hi))
    rows = []
    for n in range(lo, hi + 1):
        t = _grid_time(flow, n)
        count = (
            sphere_census(lad, scaling, t)
            if sphere
            else orbit_census(lad, scaling, t)
        )
        rows.append(
            {
                "index": n,
                "t": t,
                "count": str(count),
                "log-count": math.log(count),
                "ep": ep_rate(lad, scaling, t, sphere=sphere),
            }
        )
    return ["index", "t", "count", "log-count", "ep"], rows, False


def _run_census(params, seed, threads):
    return _census_rows(params, sphere=False)


def _run_sphere_census(params, seed, threads):
    return _census_rows(params, sphere=True)


def _run_ep_curve(params, seed, threads):
    flow = _pick(params["flow"], tuple(_SCALING_OF), "flow")
    lo, hi = _index_range(params, flow)
    sphere = bool(params["sphere"])
    scaling = _SCALING_OF[flow]
    lad = build_ladder(max(2, hi))
    rows = []
    for n in range(lo, hi + 1):
        t = _grid_time(flow, n)
        rows.append(
            {
                "index": n,
                "t": t,
                "log-t": math.log(t),
                "ep": ep_rate(lad, scaling, t, sphere=sphere),
            }
        )
    return ["index", "t", "log-t", "ep"], rows, False


def _run_orbit_verify(params, seed, threads):
    flow = _pick(params["flow"], tuple(_SCALING_OF), "flow")
    point = [float(v) for v in params["point"]]
    if len(point) != 2:
        raise DomainError(f"point must have two coordinates, got {len(point)}")
    i_max = int(params["ladder-max"])
    if not 2 <= i_max <= 12:
        raise DomainError(f"ladder-max={i_max} must be in 2..12")
    h_max = float(params["h-max"])
    lad = build_ladder(i_max)
    fieldlike = make_disk_field(lad, _SCALING_OF[flow])
    p = np.array(point)
    r = float(np.hypot(p[0], p[1]))
    guess = float(params["guess"])
    if guess <= 0.0:
        # one turn at the local angular speed
        guess = 2.0 * math.pi / float(speed_profile(lad, _SCALING_OF[flow], r))
    traj = integrate(fieldlike, p, (0.0, guess), tol=1e-9, h_max=h_max)
    closure = float(np.linalg.norm(traj.y_end - p))
    period = detect_period(fieldlike, p, guess, tol=float(params["tol"]), h_max=h_max)
    rows = [
        {
            "flow": flow,
            "x1": point[0],
            "x2": point[1],
            "guess": guess,
            "closure-abs": closure,
            "closure-rel": closure / r if r > 0.0 else closure,
            "period": period,
            "period-rel-dev": abs(period - guess) / guess if period else None,
        }
    ]
    columns = [
        "flow",
        "x1",
        "x2",
        "guess",
        "closure-abs",
        "closure-rel",
        "period",
        "period-rel-dev",
    ]
    return columns, rows, period is None


def _cocycle_observable(p) -> float:
    # fixed positive bounded observable: base harmonic plus fiber height
    return 0.3 + 0.2 * math.sin(2.0 * math.pi * float(p[0])) + 0.1 * float(p[-1])


def _run_suspension(params, seed, threads):
    kind = _pick(params["base"], ("rotation", "cat"), "base")
    roof = float(params["roof"])
    triples = int(params["triples"])
    if triples < 1:
        raise DomainError(f"triples={triples} must be >= 1")
    span = float(params["t-span"])
    if span <= 0.0:
        raise DomainError(f"t-span={span!r} must be positive")
    tol = float(params["tol"])
    if tol <= 0.0:
        raise DomainError(f"tol={tol!r} must be positive")
    base = (
        circle_rotation(float(params["angle"]))
        if kind == "rotation"
        else torus_automorphism(CAT_MATRIX)
    )
    space = suspend(base, roof=roof)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(triples):
        x = np.append(rng.uniform(size=base.dim), rng.uniform() * roof)
        t, u = rng.uniform(0.0, span, size=2)
        lhs = theta(_cocycle_observable, space, x, t + u, rtol=tol)
        rhs = theta(_cocycle_observable, space, x, t, rtol=tol) + theta(
            _cocycle_observable, space, space.flow(x, t), u, rtol=tol
        )
        worst = max(worst, abs(lhs - rhs))
    rows = [
        {
            "base": kind,
            "roof": roof,
            "triples": triples,
            "t-span": span,
            "tol": tol,
            "max-residual": worst,
        }
    ]
    return ["base", "roof", "triples", "t-span", "tol", "max-residual"], rows, False


def _run_abramov(params, seed, threads):
    report = abramov_check(
        torus_automorphism(CAT_MATRIX),
        float(params["roof"]),
        sample_size=int(params["sample-size"]),
        t=float(params["t"]),
        eps_grid=tuple(float(e) for e in params["eps-grid"]),
        cloud_radius=float(params["cloud-radius"]),
        rng_seed=seed,
    )
    rows = [
        {
            "roof": report.roof,
            "h-flow": report.h_flow,
            "h-base": report.h_base,
            "ratio": report.ratio,
            "low-confidence": report.low_confidence,
            "sample-size": report.sample_size,
            "t": float(params["t"]),
        }
    ]
    columns = ["roof", "h-flow", "h-base", "ratio", "low-confidence", "sample-size", "t"]
    return columns, rows, report.low_confidence


def _run_slowdown(params, seed, threads):
    betas = [float(b) for b in params["betas"]]
    halvings = int(params["halvings"])
    if not 0 <= halvings <= 8:
        raise DomainError(f"halvings={halvings} must be in 0..8")
    center = tuple(float(v) for v in params["center"])
    if len(center) < 2:
        raise DomainError("center needs base coordinates plus a fiber coordinate")
    chart_radius = float(params["chart-radius"])
    n_gamma = int(params["gamma-samples"])
    if n_gamma < 1:
        raise DomainError(f"gamma-samples={n_gamma} must be >= 1")
    space = suspend(circle_rotation(float(params["angle"])))
    rows = []
    first_flow = None
    for k in range(halvings + 1):
        # halving the ladder: every ratio between consecutive bounds halves
        ladder_k = tuple(b * 0.5 ** (i * k) for i, b in enumerate(betas))
        profile = build_w(ladder_k, dim=len(center))
        spec = SlowDownSpec(center=center, radial=profile, chart_radius=chart_radius)
        rflow = reparam(space, spec)
        if first_flow is None:
            first_flow = rflow
        # same seed per rung: the transit samples stay paired across ladders
        rng = np.random.default_rng(seed)
        offs = rng.uniform(0.05, 0.95, n_gamma) * (0.5 * chart_radius)
        offs *= rng.choice([-1.0, 1.0], n_gamma)
        gammas = [gamma_return(rflow, [center[0] + o]) for o in offs]
        rows.append(
            {
                "quantity": "gamma-mean",
                "setting": f"halving={k}",
                "value": float(np.mean(gammas)),
            }
        )
    region = RegionBox(
        base_lo=(float(params["region-lo"]),),
        base_hi=(float(params["region-hi"]),),
        s_lo=float(params["s-lo"]),
        s_hi=float(params["s-hi"]),
    )
    times = sorted(float(t) for t in params["times"])
    fractions = occupation_fraction_series(
        first_flow, [float(params["y0"])], times, region
    )
    for t, frac in zip(times, fractions):
        rows.append(
            {"quantity": "occupation-fraction", "setting": f"t={t!r}", "value": frac}
        )
    return ["quantity", "setting", "value"], rows, False


def _run_tear_residual(params, seed, threads):
    variant = _pick(params["variant"], ("Z", "Z1"), "variant")
    which = _pick(params["grid"], ("axis", "sigma", "rho", "all"), "grid")
    chart = make_tear_chart()
    fieldlike = make_tear_field(variant, chart)
    grids = residual_grids(chart)
    rows = []
    for name in list(grids) if which == "all" else [which]:
        report = semiconjugacy_residual(
            fieldlike,
            float(params["tmax"]),
            grids[name],
            tol=float(params["tol"]),
            n_times=int(params["n-times"]),
            threads=threads,
        )
        rows.append(
            {
                "grid": name,
                "residual": report.residual,
                "excluded": report.excluded,
                "compared": report.compared,
            }
        )
    return ["grid", "residual", "excluded", "compared"], rows, False


def _run_tear_mirror(params, seed, threads):
    variant = _pick(params["variant"], ("Z", "Z1"), "variant")
    samples = section_samples(
        int(params["count"]),
        float(params["rho-min"]),
        float(params["rho-max"]),
        dim=int(params["dim"]),
        rng_seed=seed,
    )
    chart = make_tear_chart()
    t_max = float(params["tmax"])
    tol = float(params["tol"])
    dim = int(params["dim"])
    rotated = rotate_field(make_tear_field(variant, chart), dim=dim)
    mirror = mirror_return(rotated, samples, t_max=t_max, tol=tol, threads=threads)
    rows = [
        {
            "quantity": "mirror-worst",
            "value": mirror.worst,
            "excluded": mirror.excluded,
            "compared": mirror.compared,
        }
    ]
    if bool(params["with-ratio"]):
        other = rotate_field(
            make_tear_field("Z" if variant == "Z1" else "Z1", chart), dim=dim
        )
        # ratio convention: smoothed crossing time over the plain one
        base, smoothed = (other, rotated) if variant == "Z1" else (rotated, other)
        ratio = return_ratio(base, smoothed, samples, t_max=t_max, tol=tol, threads=threads)
        for name, value in (("ratio-min", ratio.min_ratio), ("ratio-max", ratio.max_ratio)):
            rows.append(
                {
                    "quantity": name,
                    "value": value,
                    "excluded": ratio.excluded,
                    "compared": ratio.compared,
                }
            )
    return ["quantity", "value", "excluded", "compared"], rows, False


def _run_embed_check(params, seed, threads):
    choice = _pick(params["variant"], ("X1", "X2", "both"), "variant")
    count = int(params["count"])
    shell_count = int(params["shell-count"])
    if count < 1 or shell_count < 1:
        raise DomainError("count and shell-count must be >= 1")
    dim = int(params["dim"])
    if dim < 3:
        raise DomainError(f"dim={dim} must be >= 3")
    lad = build_ladder()
    rng = np.random.default_rng(seed)
    disk_pts = np.zeros((count, dim))
    radii = np.sqrt(rng.uniform(0.0, 1.0, size=count))
    angles = rng.uniform(0.0, 2.0 * math.pi, size=count)
    disk_pts[:, 0] = radii * np.cos(angles)
    disk_pts[:, 1] = radii * np.sin(angles)
    shell_pts = []
    while len(shell_pts) < shell_count:
        p = rng.uniform(-1.3, 1.3, size=dim)
        r2 = p[0] ** 2 + p[1] ** 2
        q2 = float(np.sum(p[2:] ** 2))
        if r2 + q2 < 1.99 and (q2 > 1e-4 or r2 > 1.0 + 1e-4):
            shell_pts.append(p)
    rows = []
    for variant in ("X1", "X2") if choice == "both" else (choice,):
        emb = make_embedded_field(variant, ladder=lad, dim=dim)
        planar = make_disk_field(lad, _SCALING_OF["Z1" if variant == "X1" else "Z2"])
        dev = 0.0
        trailing = 0.0
        for p in disk_pts:
            out = emb.value(p)
            want = planar.value(p[:2])
            dev = max(dev, abs(out[0] - want[0]), abs(out[1] - want[1]))
            trailing = max(trailing, float(np.max(np.abs(out[2:]))))
        escape = math.inf
        for p in shell_pts:
            escape = min(escape, float(np.sum(emb.value(p)[2:])))
        rows.extend(
            [
                {"variant": variant, "quantity": "disk-match-dev", "value": dev},
                {"variant": variant, "quantity": "disk-trailing-max", "value": trailing},
                {"variant": variant, "quantity": "shell-trailing-min-sum", "value": escape},
            ]
        )
    return ["variant", "quantity", "value"], rows, False


def _run_bump_audit(params, seed, threads):
    betas = tuple(float(b) for b in params["betas"])
    dim = int(params["dim"])
    n = int(params["samples-per-ball"])
    if n < 10:
        raise DomainError(f"samples-per-ball={n} must be >= 10")
    order = int(params["max-order"])
    profile = build_w(betas, dim=dim)
    rng = np.random.default_rng(seed)
    rows = []

    def add(check: str, passed, worst) -> None:
        rows.append({"check": check, "passed": bool(passed), "worst": float(worst)})

    vals = np.asarray(profile.radial(rng.uniform(0.0, 2.0, size=n)))
    out_of_range = float(np.max(np.maximum(vals - 1.0, -vals)))
    annulus = np.asarray(profile.radial(rng.uniform(1.0, 2.0, size=n)))
    annulus_dev = float(np.max(np.abs(annulus - 1.0)))
    add(
        "range-and-annulus",
        out_of_range <= 0.0 and annulus_dev == 0.0,
        max(out_of_range, annulus_dev),
    )
    for i in range(1, len(betas) + 1):
        ball = rng.uniform(0.0, 1.0 / (i + 1), size=n)
        sup = float(np.max(np.asarray(profile.radial(ball))))
        add(f"ball-bound-{i}", sup <= betas[i - 1] + 1e-12, sup - betas[i - 1])
    add("vanish-at-center", float(profile.radial(0.0)) == 0.0, profile.radial(0.0))
    off = np.asarray(profile.radial(rng.uniform(0.02, 2.0, size=n)))
    add("positive-off-plateau", float(np.min(off)) > 0.0, np.min(off))
    audits = [("w-flat-at-center", profile.handle(), np.zeros(dim))]
    audits.append(("gamma0-flat-at-1", make_gamma0(), 1.0))
    audits.append(("gamma0-flat-at-minus-1", make_gamma0(), -1.0))
    audits.append(("psi-flat-at-0", make_psi(), 0.0))
    for name, handle, x in audits:
        report = flatness_report(handle, x, max_order=order)
        add(name, report.passed, max(max(row) for row in report.magnitudes))
    return ["check", "passed", "worst"], rows, not all(r["passed"] for r in rows)


# ---------------------------------------------------------------------------
# Registry and the resolved configuration


@dataclass(frozen=True)
class _Experiment:
    defaults: dict
    fmt: str
    runner: Callable


_EXPERIMENTS = {
    "census": _Experiment(
        defaults={"flow": "Z1", "min-index": 2, "max-index": 8},
        fmt="csv",
        runner=_run_census,
    ),
    "sphere-census": _Experiment(
        defaults={"flow": "Z1", "min-index": 2, "max-index": 8},
        fmt="csv",
        runner=_run_sphere_census,
    ),
    "ep-curve": _Experiment(
        defaults={"flow": "Z1", "min-index": 2, "max-index": 8, "sphere": False},
        fmt="csv",
        runner=_run_ep_curve,
    ),
    "orbit-verify": _Experiment(
        defaults={
            "flow": "Z1",
            "point": [0.5, 0.0],
            "guess": 0.0,
            "tol": 1e-6,
            "h-max": 0.05,
            "ladder-max": 6,
        },
        fmt="jsonl",
        runner=_run_orbit_verify,
    ),
    "suspension": _Experiment(
        defaults={
            "base": "rotation",
            "angle": GOLDEN_ANGLE,
            "roof": 1.0,
            "triples": 1000,
            "t-span": 4.0,
            "tol": 1e-9,
        },
        fmt="jsonl",
        runner=_run_suspension,
    ),
    "abramov": _Experiment(
        defaults={
            "roof": 1.0,
            "sample-size": 4096,
            "t": 10.0,
            "eps-grid": [0.1, 0.07, 0.05],
            "cloud-radius": 0.015,
        },
        fmt="jsonl",
        runner=_run_abramov,
    ),
    "slowdown": _Experiment(
        defaults={
            "betas": [1.0, 0.5, 0.25, 0.125],
            "halvings": 2,
            "center": [0.5, 0.5],
            "chart-radius": 0.2,
            "angle": GOLDEN_ANGLE,
            "gamma-samples": 8,
            "y0": 0.123,
            "times": [1e3, 1e4, 1e5],
            "region-lo": 0.7,
            "region-hi": 0.9,
            "s-lo": 0.2,
            "s-hi": 0.8,
        },
        fmt="jsonl",
        runner=_run_slowdown,
    ),
    "tear-residual": _Experiment(
        defaults={"variant": "Z", "grid": "all", "tmax": 5.0, "tol": 1e-9, "n-times": 33},
        fmt="jsonl",
        runner=_run_tear_residual,
    ),
    "tear-mirror": _Experiment(
        defaults={
            "variant": "Z1",
            "count": 100,
            "rho-min": 0.3,
            "rho-max": 2.5,
            "dim": 5,
            "tmax": 400.0,
            "tol": 1e-9,
            "with-ratio": True,
        },
        fmt="jsonl",
        runner=_run_tear_mirror,
    ),
    "embed-check": _Experiment(
        defaults={"variant": "both", "count": 1000, "shell-count": 300, "dim": 5},
        fmt="jsonl",
        runner=_run_embed_check,
    ),
    "bump-audit": _Experiment(
        defaults={
            "betas": [1.0, 0.5, 0.25, 0.125],
            "dim": 5,
            "samples-per-ball": 10000,
            "max-order": 3,
        },
        fmt="csv",
        runner=_run_bump_audit,
    ),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved run description.

    Construction validates the experiment name, rejects unknown
    parameter keys, fills defaults, and pins the output format, so a
    config object always states exactly what :func:`run` will execute.
    """

    experiment: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    output_path: Optional[str] = None
    format: str = ""
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in _EXPERIMENTS:
            raise DomainError(
                f"unknown experiment {self.experiment!r}; choose from "
                + ", ".join(_EXPERIMENTS)
            )
        spec = _EXPERIMENTS[self.experiment]
        resolved = dict(spec.defaults)
        for key, value in self.parameters.items():
            if key not in resolved:
                raise DomainError(
                    f"unknown key {key!r} for experiment {self.experiment!r}"
                )
            resolved[key] = value
        object.__setattr__(self, "parameters", resolved)
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise DomainError(f"seed must be a nonnegative integer, got {self.seed!r}")
        fmt = self.format or spec.fmt
        if fmt not in _FORMATS:
            raise DomainError(f"format must be one of csv, jsonl, got {self.format!r}")
        object.__setattr__(self, "format", fmt)
        if isinstance(self.threads, bool) or not isinstance(self.threads, int) or self.threads < 1:
            raise DomainError(f"threads must be a positive integer, got {self.threads!r}")

    def header_items(self):
        """Resolved configuration as ordered (key, value) pairs."""
        items = [
            ("experiment", self.experiment),
            ("format", self.format),
            ("seed", self.seed),
            ("threads", self.threads),
        ]
        items.extend(self.parameters.items())
        return items


# ---------------------------------------------------------------------------
# Config file and value coercion

_TRUE_WORDS = {"true", "yes", "on", "1"}
_FALSE_WORDS = {"false", "no", "off", "0"}


def parse_config_file(path: str) -> dict:
    """Key-value lines to a ``{key: (text, line_number)}`` map.

    Lines hold ``key = value`` with ``#`` starting a comment and list
    values comma-separated. Duplicate keys are rejected so a later line
    can never silently shadow an earlier one.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DomainError(f"cannot read config {path}: {exc}")
    out = {}
    for lineno, raw in enumerate(lines, 1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise DomainError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in text.split("=", 1))
        if not key:
            raise DomainError(f"{path}:{lineno}: empty key")
        if key in out:
            raise DomainError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = (value, lineno)
    return out


def _coerce_scalar(key: str, text: str, template, where: str):
    if isinstance(template, bool):
        word = text.strip().lower()
        if word in _TRUE_WORDS:
            return True
        if word in _FALSE_WORDS:
            return False
        raise DomainError(f"{where}: {key} expects true/false, got {text!r}")
    if isinstance(template, int):
        try:
            return int(text.strip(), 10)
        except ValueError:
            raise DomainError(f"{where}: {key} expects an integer, got {text!r}")
    if isinstance(template, float):
        try:
            return float(text)
        except ValueError:
            raise DomainError(f"{where}: {key} expects a number, got {text!r}")
    return text.strip()


def _coerce(key: str, text: str, template, where: str):
    if isinstance(template, list):
        element = template[0] if template else 0.0
        parts = [p for p in (s.strip() for s in text.split(",")) if p]
        if not parts:
            raise DomainError(f"{where}: {key} expects a comma-separated list")
        return [_coerce_scalar(key, p, element, where) for p in parts]
    return _coerce_scalar(key, text, template, where)


# ---------------------------------------------------------------------------
# Deterministic rendering


def _cell(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _config_value(value) -> str:
    if isinstance(value, (list, tuple)):
        return ", ".join(_cell(v) for v in value)
    return _cell(value)


def _jsonable(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _render(config: ExperimentConfig, columns, rows) -> str:
    if config.format == "csv":
        lines = [f"# {k} = {_config_value(v)}" for k, v in config.header_items()]
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(_cell(row[c]) for c in columns))
    else:
        header = {k: _jsonable(v) for k, v in config.header_items()}
        lines = [json.dumps({"config": header})]
        for row in rows:
            lines.append(json.dumps({c: _jsonable(row[c]) for c in columns}))
    return "\n".join(lines) + "\n"


def run(config: ExperimentConfig) -> int:
    """Execute one experiment and return the exit status.

    Results go to the output path, or stdout when none is set. With an
    output path a sidecar ``<path>.meta.json`` records the tool version,
    the resolved configuration, and wall time; the results file itself
    carries no timing, so identical (config, seed) runs are identical
    byte for byte.
    """
    started = time.monotonic()
    spec = _EXPERIMENTS[config.experiment]
    columns, rows, low = spec.runner(config.parameters, config.seed, config.threads)
    payload = _render(config, columns, rows)
    if config.output_path is None:
        sys.stdout.write(payload)
    else:
        meta = {
            "tool": "epflow",
            "version": __version__,
            "resolved": {k: _jsonable(v) for k, v in config.header_items()},
            "rows": len(rows),
            "wall-time-seconds": time.monotonic() - started,
        }
        try:
            with open(config.output_path, "w", encoding="utf-8") as fh:
                fh.write(payload)
            with open(config.output_path + ".meta.json", "w", encoding="utf-8") as fh:
                fh.write(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            raise DomainError(f"cannot write {config.output_path}: {exc}")
    return 2 if low else 0


# ---------------------------------------------------------------------------
# Command line


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); keep codes ours
        raise _ArgumentError(message)


_FLAG_HELP = {
    "flow": "field variant: Z0, Z1, or Z2",
    "min-index": "first index of the period grid",
    "max-index": "last index of the period grid",
    "sphere": "count on the doubled sphere instead of the disk",
    "point": "initial point as 'x1, x2'",
    "guess": "period guess; nonpositive means one local turn",
    "tol": "tolerance (closure or integrator, per experiment)",
    "h-max": "integrator step cap",
    "ladder-max": "largest strip index of the circle ladder",
    "base": "base map: rotation or cat",
    "angle": "rotation angle of the base circle map",
    "roof": "roof height of the suspension",
    "triples": "number of random cocycle triples",
    "t-span": "upper bound of the random time draws",
    "sample-size": "seed cloud size for the entropy estimate",
    "t": "scan horizon for the entropy estimate",
    "eps-grid": "separation scales, comma list",
    "cloud-radius": "seed cloud radius",
    "betas": "decreasing speed-bound ladder, comma list",
    "halvings": "how many times the ladder ratio is halved",
    "center": "slow-down center in chart coordinates",
    "chart-radius": "diameter of the slow-down well is half this",
    "gamma-samples": "transit samples per ladder rung",
    "y0": "orbit start for occupation fractions",
    "times": "horizons for occupation fractions, comma list",
    "region-lo": "lower base edge of the occupation box",
    "region-hi": "upper base edge of the occupation box",
    "s-lo": "lower fiber edge of the occupation box",
    "s-hi": "upper fiber edge of the occupation box",
    "variant": "which field variant the experiment probes",
    "grid": "residual grid: axis, sigma, rho, or all",
    "tmax": "integration horizon",
    "n-times": "samples along each compared orbit",
    "count": "number of sample points",
    "rho-min": "smallest transverse entry radius",
    "rho-max": "largest transverse entry radius",
    "dim": "ambient dimension",
    "with-ratio": "also report crossing-time ratios",
    "shell-count": "sample points between the disk and the ball",
    "samples-per-ball": "random samples per audited ball",
    "max-order": "highest difference order in flatness audits",
}

_PARAM_KEYS = sorted({k for spec in _EXPERIMENTS.values() for k in spec.defaults})


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="epflow",
        description="Run one experiment and write a plot-ready table.",
    )
    parser.add_argument(
        "experiment_pos",
        nargs="?",
        metavar="experiment",
        help="one of: " + ", ".join(_EXPERIMENTS),
    )
    parser.add_argument("--experiment", help="experiment name (same as the positional)")
    parser.add_argument("--config", metavar="PATH", help="key = value configuration file")
    parser.add_argument("--seed", type=int, help="random seed (default 0)")
    parser.add_argument("--out", metavar="PATH", help="results file; stdout when absent")
    parser.add_argument("--format", choices=_FORMATS, help="output format")
    parser.add_argument("--threads", type=int, help="worker cap for parallel experiments")
    for key in _PARAM_KEYS:
        names = [f"--{key}"]
        if key == "max-index":
            names.append("--tmax-index")  # established alias for the grid cap
        parser.add_argument(
            *names,
            dest="opt_" + key.replace("-", "_"),
            metavar="VALUE",
            help=_FLAG_HELP.get(key, "experiment parameter"),
        )
    return parser


def _dispatch(ns, parser: _Parser) -> int:
    file_values = parse_config_file(ns.config) if ns.config else {}
    where = ns.config or "config"

    if ns.experiment_pos and ns.experiment and ns.experiment_pos != ns.experiment:
        raise DomainError(
            f"experiment given twice: {ns.experiment_pos!r} and {ns.experiment!r}"
        )
    experiment = ns.experiment_pos or ns.experiment
    if "experiment" in file_values:
        text, _ = file_values.pop("experiment")
        experiment = experiment or text
    if experiment is None:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print("epflow: error: no experiment selected", file=sys.stderr)
        return 1
    if experiment not in _EXPERIMENTS:
        raise DomainError(
            f"unknown experiment {experiment!r}; choose from " + ", ".join(_EXPERIMENTS)
        )

    seed = ns.seed
    if seed is None and "seed" in file_values:
        text, line = file_values.pop("seed")
        seed = _coerce_scalar("seed", text, 0, f"{where}:{line}")
    threads = ns.threads
    if threads is None and "threads" in file_values:
        text, line = file_values.pop("threads")
        threads = _coerce_scalar("threads", text, 1, f"{where}:{line}")
    fmt = ns.format
    if fmt is None and "format" in file_values:
        fmt, _ = file_values.pop("format")
    out = ns.out
    if out is None and "out" in file_values:
        out, _ = file_values.pop("out")

    defaults = _EXPERIMENTS[experiment].defaults
    params = {}
    for key, (text, line) in file_values.items():
        if key not in defaults:
            raise DomainError(
                f"{where}:{line}: unknown key {key!r} for experiment {experiment!r}"
            )
        params[key] = _coerce(key, text, defaults[key], f"{where}:{line}")
    for key in _PARAM_KEYS:
        text = getattr(ns, "opt_" + key.replace("-", "_"))
        if text is None:
            continue
        if key not in defaults:
            raise DomainError(
                f"flag --{key} does not apply to experiment {experiment!r}"
            )
        params[key] = _coerce(key, text, defaults[key], f"--{key}")

    config = ExperimentConfig(
        experiment=experiment,
        parameters=params,
        seed=0 if seed is None else seed,
        output_path=out,
        format=fmt or "",
        threads=1 if threads is None else threads,
    )
    return run(config)


def main(argv=None) -> int:
    """Entry point; returns the exit status instead of raising."""
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except _ArgumentError as exc:
        print(f"epflow: error: {exc}", file=sys.stderr)
        print(parser.format_usage().rstrip(), file=sys.stderr)
        return 1
    try:
        return _dispatch(ns, parser)
    except (DomainError, DivergenceSignal) as exc:
        print(f"epflow: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"epflow: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
