"""Disorder-averaged ML decoding experiments, threshold fits and barrier formulas."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import re
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .circuit import Circuit, builtin, parse
from .disorder import SignMap, make_rng, sample_error_bits
from .gf2 import Eliminator
from .montecarlo import (
    MCModel,
    TemperatureSchedule,
    bennett_delta_f,
    decompose_logical,
    population_annealing_f,
)
from .oracle import EliminationPlan
from .pauli import SpacetimePauli
from .spacetime import _vec, gauge_basis
from .spinmodel import GeneralPauli, IndependentXZ, build_hamiltonian, effective_coupling, simplify

__all__ = [
    "ConfigError",
    "NoCrossing",
    "ExperimentConfig",
    "CurvePoint",
    "ThresholdEstimate",
    "ml_success",
    "jackknife",
    "run_experiment",
    "estimate_threshold",
    "barrier_analysis",
    "write_curves",
    "read_curves",
    "default_window",
    "setup_point",
    "delta_f_exact",
    "delta_f_mc",
    "depth_for",
    "make_channel",
    "class_group",
]


class ConfigError(ValueError):
    pass


class NoCrossing(RuntimeError):
    pass


# -- statistics ------------------------------------------------------------------------

def ml_success(delta_f, indicator: bool = False):
    """Softmax weight of the most likely class, with the identity at ``dF = 0``.

    ``delta_f`` holds ``F(C_s L) - F(C_s)`` for each nontrivial class along
    the last axis. With ``indicator`` set, return 1 when the sampled class is
    the (first) most likely one and 0 otherwise.
    """
    df = np.asarray(delta_f, dtype=np.float64)
    full = np.concatenate([np.zeros(df.shape[:-1] + (1,)), df], axis=-1)
    if indicator:
        return (np.argmin(full, axis=-1) == 0).astype(np.float64)
    lo = np.min(full, axis=-1, keepdims=True)
    w = np.exp(-(full - lo))
    return np.max(w, axis=-1) / np.sum(w, axis=-1)


def jackknife(samples, estimator: Callable = np.mean) -> float:
    """Leave-one-out variance ``(n-1)/n * sum (theta_i - theta_bar)^2``."""
    x = np.asarray(samples, dtype=np.float64)
    n = len(x)
    if n < 2:
        raise ValueError("jackknife needs at least two samples")
    if estimator is np.mean:
        total = x.sum(axis=0)
        loo = (total - x) / (n - 1)
    else:
        idx = np.arange(n)
        loo = np.array([estimator(x[idx != i]) for i in range(n)])
    return float((n - 1) / n * np.sum((loo - loo.mean(axis=0)) ** 2))


# -- configuration ------------------------------------------------------------------------

CHANNELS = ("x", "z", "xz", "depolarizing")
METHODS = ("exact", "bennett", "pa")


@dataclass
class ExperimentConfig:
    family: str | None = None
    distances: list[int] = field(default_factory=list)
    ps: list[float] = field(default_factory=list)
    depth: str | int | None = None  # e.g. "2d+1"; builtin default when unset
    params: dict = field(default_factory=dict)
    circuit_file: str | None = None
    channel: str = "x"
    classes: list[str] | None = None
    realizations: int = 1000
    method: str = "exact"
    mc: dict = field(default_factory=dict)
    seed: int = 0
    output: str | None = None
    gauge_fix: bool = False
    checkpoint: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**d)
        cfg.check()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise ConfigError(str(exc)) from None

    def check(self) -> None:
        if (self.family is None) == (self.circuit_file is None):
            raise ConfigError("give exactly one of family or circuit_file")
        if self.family is not None and not self.distances:
            raise ConfigError("distances must be non-empty")
        if not self.ps or any(not 0.0 <= p <= 0.5 for p in self.ps):
            raise ConfigError("ps must be non-empty and inside [0, 0.5]")
        if self.channel not in CHANNELS:
            raise ConfigError(f"channel must be one of {CHANNELS}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.realizations < 2:
            raise ConfigError("need at least two realizations")
        if self.depth is not None:
            depth_for(self.depth, 3)

    def to_dict(self) -> dict:
        return asdict(self)


_DEPTH = re.compile(r"^\s*(\d*)\s*\*?\s*d\s*(?:([+-])\s*(\d+))?\s*$")


def depth_for(rule: str | int, d: int) -> int:
    """Evaluate a depth rule such as ``"2d+1"``, ``"4d-1"`` or ``12``."""
    if isinstance(rule, int):
        return rule
    m = _DEPTH.match(str(rule))
    if not m:
        raise ConfigError(f"cannot read depth rule {rule!r}")
    a = int(m.group(1) or 1)
    b = int(m.group(3) or 0) * (-1 if m.group(2) == "-" else 1)
    return a * d + b


def make_channel(kind: str, p: float):
    if kind == "x":
        return IndependentXZ(p, 0.0)
    if kind == "z":
        return IndependentXZ(0.0, p)
    if kind == "xz":
        return IndependentXZ(p, p)
    return GeneralPauli(1.0 - p, p / 3, p / 3, p / 3)


@dataclass(frozen=True)
class CurvePoint:
    d: int
    p: float
    rate: float
    ci: float
    n: int
    seed: int
    rate_indicator: float = float("nan")
    ci_indicator: float = float("nan")


# -- one (d, p) point ------------------------------------------------------------------------

def class_group(circuit: Circuit, names: Sequence[str] | None) -> list[SpacetimePauli]:
    """Nontrivial elements of the group generated by the chosen observables."""
    reps = []
    elim = Eliminator()
    for name in (names if names is not None else [o.name for o in circuit.observables]):
        if name in ("I", "identity"):
            continue
        rep = circuit.observable(name).representative
        if elim.add(_vec(rep)) is None:
            reps.append(rep)
    group = [SpacetimePauli.identity(circuit.num_qubits, circuit.duration)]
    for r in reps:
        group = group + [g * r for g in group]
    return group[1:]


@dataclass
class PointSetup:
    circuit: Circuit
    channel: object
    model: object
    signs: SignMap
    logicals: list[SpacetimePauli]
    logical_parities: np.ndarray  # (classes, interactions)


def setup_point(circuit: Circuit, channel, classes=None, gauge_fix: bool = False) -> PointSetup:
    keep = None if not gauge_fix else False
    basis = gauge_basis(circuit, keep_redundant=keep)
    model = build_hamiltonian(basis, channel)
    logicals = class_group(circuit, classes)
    split = model.css_split
    if isinstance(channel, IndependentXZ) and split is not None and logicals:
        if all(L.is_pure_x() for L in logicals):
            model = model.restrict(split[0])
        elif all(L.is_pure_z() for L in logicals):
            model = model.restrict(split[1])
    model = simplify(model)
    signs = SignMap(model)
    size = circuit.num_qubits * circuit.duration
    par = []
    for L in logicals:
        x = np.array([(L.x >> i) & 1 for i in range(size)], dtype=bool)
        z = np.array([(L.z >> i) & 1 for i in range(size)], dtype=bool)
        par.append(signs.parities(x, z))
    par = np.array(par, dtype=np.int8).reshape(len(logicals), len(model.interactions))
    return PointSetup(circuit, channel, model, signs, logicals, par)


def _sample_etas(setup: PointSetup, seed: int, start: int, stop: int) -> np.ndarray:
    size = setup.circuit.num_qubits * setup.circuit.duration
    xs, zs = [], []
    for r in range(start, stop):
        x, z = sample_error_bits(size, setup.channel, make_rng(seed, r))
        xs.append(x)
        zs.append(z)
    return setup.signs.signs(np.array(xs), np.array(zs))


def delta_f_exact(setup: PointSetup, etas: np.ndarray, plan: EliminationPlan | None = None) -> np.ndarray:
    """Exact ``F(C_s L) - F(C_s)`` per realization (rows) and class (columns)."""
    plan = plan or EliminationPlan(setup.model)
    k = len(setup.logicals)
    flips = 1 - 2 * setup.logical_parities.astype(np.int64)
    batch = np.concatenate([etas[:, None, :], etas[:, None, :] * flips[None, :, :]], axis=1)
    logz = plan.log_partition(batch.reshape(-1, batch.shape[-1])).reshape(len(etas), k + 1)
    with np.errstate(invalid="ignore"):
        out = -(logz[:, 1:] - logz[:, :1])
    return np.where(np.isnan(out), np.inf, out)


def _mc_schedule(mc: dict) -> TemperatureSchedule:
    return TemperatureSchedule.geometric(int(mc.get("replicas", 10)), float(mc.get("beta_min", 0.1)))


def delta_f_mc(setup: PointSetup, eta: np.ndarray, method: str, mc: dict, seed: int,
               mcm: MCModel | None = None) -> np.ndarray:
    """Monte Carlo ``dF`` per class for one realization."""
    mcm = mcm or MCModel(setup.model)
    out = []
    if method == "bennett":
        schedule = _mc_schedule(mc)
        size = setup.circuit.num_qubits * setup.circuit.duration
        for j, L in enumerate(setup.logicals):
            chain = [eta]
            cur = eta.astype(np.int64)
            for q in decompose_logical(L):
                x = np.array([(q.x >> i) & 1 for i in range(size)], dtype=bool)
                z = np.array([(q.z >> i) & 1 for i in range(size)], dtype=bool)
                cur = cur * (1 - 2 * setup.signs.parities(x, z).astype(np.int64))
                chain.append(cur)
            est = bennett_delta_f(setup.model, chain, schedule, sweeps=int(mc.get("sweeps", 2000)),
                                  seed=seed * 1000 + j, thermalize=int(mc.get("thermalize", 1000)),
                                  max_flips=int(mc.get("max_flips", 4)), mc=mcm)
            out.append(est.value)
        return np.array(out)
    steps = int(mc.get("anneal_steps", 50))
    schedule = TemperatureSchedule.linear(steps, 0.0)
    kwargs = dict(population=int(mc.get("population", 1000)),
                  sweeps_per_step=int(mc.get("sweeps_per_step", 5)), mc=mcm)
    base = population_annealing_f(setup.model, eta, schedule, seed=seed * 1000, **kwargs).value
    for j in range(len(setup.logicals)):
        eta_l = eta * (1 - 2 * setup.logical_parities[j].astype(np.int64))
        f = population_annealing_f(setup.model, eta_l, schedule, seed=seed * 1000 + j + 1, **kwargs).value
        out.append(f - base)
    return np.array(out)


def _point_rows(cfg: ExperimentConfig, setup: PointSetup, p: float, done: list,
                save: Callable[[list], None]) -> np.ndarray:
    n = cfg.realizations
    k = len(setup.logicals)
    if k == 0 or p == 0.0:
        # no logical classes or no errors: the sampled class always wins
        return np.full((n, max(k, 1)), np.inf)
    if cfg.method == "exact":
        plan = EliminationPlan(setup.model, int(cfg.mc.get("max_width", 20)))
        rows = list(done)
        chunk = 1000
        for start in range(len(rows), n, chunk):
            stop = min(n, start + chunk)
            rows.extend(delta_f_exact(setup, _sample_etas(setup, cfg.seed, start, stop), plan).tolist())
            save(rows)
        return np.array(rows, dtype=np.float64)
    mcm = MCModel(setup.model)
    rows = list(done)
    every = int(cfg.mc.get("checkpoint_every", 10))
    for r in range(len(rows), n):
        eta = _sample_etas(setup, cfg.seed, r, r + 1)[0]
        seed = int(make_rng(cfg.seed, r).integers(2**31))
        rows.append(delta_f_mc(setup, eta, cfg.method, cfg.mc, seed, mcm).tolist())
        if (r + 1) % every == 0:
            save(rows)
    save(rows)
    return np.array(rows, dtype=np.float64)


def _circuit_for(cfg: ExperimentConfig, d: int | None) -> Circuit:
    if cfg.circuit_file:
        with open(cfg.circuit_file) as fh:
            return parse(fh.read())
    params = dict(cfg.params)
    if cfg.depth is not None:
        params["T"] = depth_for(cfg.depth, d)
    return builtin(cfg.family, d=d, **params)


def run_experiment(cfg: ExperimentConfig, log: Callable[[str], None] | None = None) -> list[CurvePoint]:
    """Every ``(d, p)`` point of ``cfg``; writes CSV and manifest when ``cfg.output`` is set."""
    cfg.check()
    ckpt = {}
    if cfg.checkpoint and os.path.exists(cfg.checkpoint):
        with open(cfg.checkpoint) as fh:
            ckpt = json.load(fh)
    timings = {}
    points = []
    distances = cfg.distances if cfg.family else [None]
    for d in distances:
        circuit = _circuit_for(cfg, d)
        dd = d if d is not None else circuit.num_qubits
        for p in cfg.ps:
            key = f"{dd},{p!r}"
            t0 = time.perf_counter()
            setup = setup_point(circuit, make_channel(cfg.channel, p), cfg.classes, cfg.gauge_fix)

            def save(rows, key=key):
                if cfg.checkpoint:
                    ckpt[key] = [[_enc(v) for v in row] for row in rows]
                    tmp = cfg.checkpoint + ".tmp"
                    with open(tmp, "w") as fh:
                        json.dump(ckpt, fh)
                    os.replace(tmp, cfg.checkpoint)

            done = [[_dec(v) for v in row] for row in ckpt.get(key, [])][:cfg.realizations]
            rows = _point_rows(cfg, setup, p, done, save)
            succ = ml_success(rows)
            hard = ml_success(rows, indicator=True)
            point = CurvePoint(dd, p, float(1.0 - succ.mean()), 2.0 * math.sqrt(jackknife(succ)),
                               len(rows), cfg.seed, float(1.0 - hard.mean()),
                               2.0 * math.sqrt(jackknife(hard)))
            points.append(point)
            timings[key] = time.perf_counter() - t0
            if log:
                log(f"d={dd} p={p} rate={point.rate:.5f} ci={point.ci:.5f} n={point.n} "
                    f"({timings[key]:.1f}s)")
    if cfg.output:
        write_outputs(cfg, points, timings)
    return points


def _enc(v: float):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _dec(v) -> float:
    return float(v)


# -- files -------------------------------------------------------------------------------

CSV_FIELDS = ("d", "p", "rate", "ci", "n", "seed")


def curves_csv(points: Iterable[CurvePoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for pt in points:
        w.writerow([pt.d, repr(pt.p), f"{pt.rate:.10g}", f"{pt.ci:.10g}", pt.n, pt.seed])
    return buf.getvalue()


def write_curves(points: Iterable[CurvePoint], path) -> None:
    with open(path, "w") as fh:
        fh.write(curves_csv(points))


def read_curves(path) -> list[CurvePoint]:
    with open(path) as fh:
        return [CurvePoint(int(r["d"]), float(r["p"]), float(r["rate"]), float(r["ci"]),
                           int(r["n"]), int(r["seed"])) for r in csv.DictReader(fh)]


def write_outputs(cfg: ExperimentConfig, points: list[CurvePoint], timings: dict) -> None:
    """``<output>.csv``, ``<output>.manifest.json`` and ``<output>.timings.json``.

    Wall-clock times live in their own file so that reruns with the same
    config and seed reproduce the CSV and manifest byte for byte.
    """
    import numba
    import scipy

    from . import __version__

    base = cfg.output
    write_curves(points, base + ".csv")
    manifest = {
        "config": cfg.to_dict(),
        "versions": {"package": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__},
        "indicator": [{"d": pt.d, "p": pt.p, "rate": pt.rate_indicator, "ci": pt.ci_indicator}
                      for pt in points],
        "timings_file": os.path.basename(base) + ".timings.json",
    }
    with open(base + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    with open(base + ".timings.json", "w") as fh:
        json.dump({"seconds": timings}, fh, indent=1, sort_keys=True)


# -- thresholds ------------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdEstimate:
    x_c: float
    y_c: float
    ci: tuple[float, float]
    window: tuple[float, float]
    fits: dict  # d -> (slope, intercept)
    sigma: float


def _wls(x: np.ndarray, y: np.ndarray, s: np.ndarray) -> tuple[float, float]:
    w = 1.0 / np.maximum(s, 1e-12) ** 2
    a = np.stack([x, np.ones_like(x)], axis=1) * np.sqrt(w)[:, None]
    coef, *_ = np.linalg.lstsq(a, y * np.sqrt(w), rcond=None)
    return float(coef[0]), float(coef[1])


def _intersect(fits: list[tuple[float, float]], tol: float) -> tuple[float, float]:
    slopes = np.array([f[0] for f in fits])
    if np.ptp(slopes) <= tol * max(1.0, float(np.max(np.abs(slopes)))):
        raise NoCrossing("fitted lines are parallel")
    # y = b x + c for every line: minimise sum (b x + c - y)^2 over (x, y)
    a = np.stack([slopes, -np.ones_like(slopes)], axis=1)
    rhs = -np.array([f[1] for f in fits])
    sol, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    return float(sol[0]), float(sol[1])


def default_window(points: Sequence[CurvePoint]) -> tuple[float, float]:
    """Grid range bracketing the first ordering flip between extreme distances, +-1 point."""
    ds = sorted({pt.d for pt in points})
    ps = sorted({pt.p for pt in points})
    rate = {(pt.d, pt.p): pt.rate for pt in points}
    common = [p for p in ps if (ds[0], p) in rate and (ds[-1], p) in rate]
    sign = [np.sign(rate[ds[-1], p] - rate[ds[0], p]) for p in common]
    for i in range(len(common) - 1):
        if sign[i] != sign[i + 1] and sign[i] != 0:
            return common[max(0, i - 1)], common[min(len(common) - 1, i + 2)]
    return ps[0], ps[-1]


def estimate_threshold(points: Sequence[CurvePoint], window: tuple[float, float] | None = None,
                       n_boot: int = 2000, seed: int = 0, tol: float = 1e-9) -> ThresholdEstimate:
    """Joint crossing of per-distance weighted linear fits with a parametric bootstrap CI.

    Each point's weight is its inverse variance, with ``sigma = ci / 2``.
    The bootstrap redraws every point from a normal with that sigma and
    refits; the reported interval is ``x_c +- 2 sigma_boot``.
    """
    window = tuple(window) if window is not None else default_window(points)
    lo, hi = window
    by_d: dict[int, list[CurvePoint]] = {}
    for pt in points:
        if lo - 1e-12 <= pt.p <= hi + 1e-12:
            by_d.setdefault(pt.d, []).append(pt)
    by_d = {d: sorted(v, key=lambda q: q.p) for d, v in by_d.items() if len(v) >= 2}
    if len(by_d) < 2:
        raise NoCrossing("need at least two distances with two points in the window")
    ds = sorted(by_d)
    data = [(np.array([q.p for q in by_d[d]]), np.array([q.rate for q in by_d[d]]),
             np.array([max(q.ci / 2.0, 1e-9) for q in by_d[d]])) for d in ds]
    fits = [_wls(x, y, s) for x, y, s in data]
    x_c, y_c = _intersect(fits, tol)
    if not lo - 1e-12 <= x_c <= hi + 1e-12:
        raise NoCrossing(f"crossing {x_c:.5g} falls outside the window {window}")
    rng = np.random.default_rng(seed)
    boots = []
    for _ in range(n_boot):
        try:
            bf = [_wls(x, y + rng.normal(0.0, s), s) for x, y, s in data]
            boots.append(_intersect(bf, tol)[0])
        except NoCrossing:
            continue
    sig = float(np.std(boots)) if boots else float("nan")
    return ThresholdEstimate(x_c, y_c, (x_c - 2 * sig, x_c + 2 * sig), (lo, hi),
                             {d: f for d, f in zip(ds, fits)}, sig)


# -- low-noise barrier formulas -------------------------------------------------------------

BARRIERS = {
    # deformation cost of the standard compilation vs the wiggling one, as
    # (coefficient, component weight) terms of K^(w)
    "repetition": (((2, 1),), ((4, 2), (-2, 3))),
    "toric": (((2, 5),), ((4, 4), (-2, 3))),
}
FAMILY_OF = {"rep_standard": "repetition", "rep_wiggling": "repetition",
             "toric_standard": "toric", "toric_wiggling": "toric"}


def barrier_analysis(family: str, p: float | None = None) -> dict:
    """``dE_standard - dE_wiggling`` for a single-spin deformation of the logical.

    Returns the value at ``p`` (when given) and the ``p -> 0`` limit, where
    ``K^(w) = 1/2 ln(1/(w p)) + o(1)`` makes the divergent parts cancel.
    """
    fam = FAMILY_OF.get(family, family)
    if fam not in BARRIERS:
        raise ValueError(f"unknown family {family!r}")
    a_terms, b_terms = BARRIERS[fam]
    out = {"family": fam, "terms_standard": a_terms, "terms_wiggling": b_terms}
    limit = (sum(-0.5 * c * math.log(w) for c, w in a_terms)
             - sum(-0.5 * c * math.log(w) for c, w in b_terms))
    out["limit"] = limit
    if p is not None:
        if not 0.0 < p <= 0.5:
            raise ValueError("p must lie in (0, 0.5]")
        k = lambda w: effective_coupling(w, 0, p, 0.0)  # noqa: E731
        out["value"] = sum(c * k(w) for c, w in a_terms) - sum(c * k(w) for c, w in b_terms)
        out["p"] = p
    return out
