"""Training loop: per-loss gradients, direction selection, Adam or plain steps.

A run is fully determined by its :class:`TrainConfig`; collocation points
for step ``t`` come from ``default_rng([seed, t])`` so runs are reproducible
row for row.  Results go to a CSV with a fixed schema plus a JSON metadata
sidecar.
"""

import csv
import dataclasses
import hashlib
import json
import math
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import autodiff as ad
from . import baselines
from . import problems as pb
from .core import DEFAULT_EPS, GradientSet, compute_direction
from .errors import ConfigError, NonFiniteError, ZeroGradient

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

METHODS = ("ours", "mgda", "config", "imtlg", "gapo", "dcgd_center", "adam")


@dataclass
class TrainConfig:
    problem: str = "helmholtz2d"
    method: str = "ours"
    p: float = 2.0
    lr: float = 3e-4
    steps: int = 10000
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    eps: float = DEFAULT_EPS
    n_r: int = 1024
    n_b: int = 256
    n_i: int = 256
    seed: int = 0
    output: str = ""
    rho: float = 1.0
    plain_sgd: bool = False
    log_every: int = 100
    hidden: tuple = (50, 50)
    a1: float = 1.0
    a2: float = 4.0
    k: float = 1.0
    timing: bool = True

    def __post_init__(self):
        self.p = _parse_p(self.p)
        self.hidden = tuple(int(h) for h in self.hidden)
        self.validate()

    def validate(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; valid methods: {', '.join(METHODS)}")
        if self.problem not in pb.PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; valid problems: {', '.join(pb.PROBLEMS)}")
        if not self.lr > 0:
            raise ConfigError("lr must be positive")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if not self.p >= 1:
            raise ConfigError("p must be >= 1")
        if self.log_every < 1:
            raise ConfigError("log_every must be >= 1")
        if self.rho < 0:
            raise ConfigError("rho must be non-negative")
        if self.method == "dcgd_center" and self.problem == "kleingordon1d":
            raise ConfigError("dcgd_center needs exactly two losses")

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_toml(cls, path):
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        nested = [k for k, v in data.items() if isinstance(v, dict)]
        if nested:
            raise ConfigError(f"config must be flat; found tables {nested}")
        return cls.from_dict(data)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["p"] = "inf" if math.isinf(self.p) else self.p
        d["hidden"] = list(self.hidden)
        return d

    def replace(self, **changes):
        d = dataclasses.asdict(self)
        d.update(changes)
        return type(self).from_dict(d)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _parse_p(p):
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity"):
            return math.inf
        try:
            return float(p)
        except ValueError:
            raise ConfigError(f"cannot parse p = {p!r}") from None
    return float(p)


# ---------------------------------------------------------------------------
# Adam


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    s: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(state, theta, d, lr, betas=(0.9, 0.999), eps_adam=1e-8):
    """One Adam update applied to the direction ``d``.

    Returns ``(theta_new, state_new)``; the inputs are not modified.
    """
    b1, b2 = betas
    m = b1 * state.m + (1.0 - b1) * d
    s = b2 * state.s + (1.0 - b2) * d * d
    t = state.t + 1
    m_hat = m / (1.0 - b1**t) if b1 < 1 else m
    s_hat = s / (1.0 - b2**t) if b2 < 1 else s
    return theta - lr * m_hat / (np.sqrt(s_hat) + eps_adam), AdamState(m, s, t)


# ---------------------------------------------------------------------------
# direction selection


@dataclass
class Direction:
    d: np.ndarray
    r_star: float = math.nan
    terminated: bool = False
    reason: str = ""


def select_direction(method, G, p=2.0, eps=DEFAULT_EPS, rho=1.0):
    """Turn per-loss gradients (rows of ``G``) into an update direction.

    ``ours`` uses the scaled Chebyshev direction; ``config`` and
    ``dcgd_center`` use their unit direction with the same adaptive scalar
    ``sum_i g_i . v``; ``mgda``, ``imtlg`` and ``gapo`` use their combined
    vectors as they are; ``adam`` uses the summed gradient.
    """
    if method == "adam":
        return Direction(G.sum(axis=0))
    try:
        gs = GradientSet(G, p if method == "ours" else 2.0)
    except ZeroGradient:
        # a vanishing loss gradient is itself a Pareto-stationary point
        return Direction(np.zeros(G.shape[1]), 0.0, True, "zero-gradient")
    if method == "ours":
        res = compute_direction(gs, eps)
        if res.terminated:
            return Direction(np.zeros(gs.n), res.r_star, True, "r_star<=eps")
        return Direction(res.d, res.r_star)
    if method == "mgda":
        return Direction(baselines.mgda(gs).v)
    if method == "gapo":
        return Direction(baselines.gapo(gs, rho).v)
    if method == "imtlg":
        return Direction(baselines.imtl_g(gs).v)
    if method in ("config", "dcgd_center"):
        res = baselines.config_dir(gs) if method == "config" else baselines.dcgd_center(gs)
        v = res.v_unit
        return Direction(float(G.sum(axis=0) @ v) * v)
    raise ConfigError(f"unknown method {method!r}; valid methods: {', '.join(METHODS)}")


# ---------------------------------------------------------------------------
# records and output


@dataclass
class TrainRecord:
    step: int
    losses: tuple
    r_star: float
    rel_l2: float
    terminated: bool
    elapsed_s: float

    def row(self):
        return [self.step, *map(_fmt, self.losses), _fmt(self.r_star), _fmt(self.rel_l2),
                "true" if self.terminated else "false", _fmt(self.elapsed_s)]


def _fmt(x):
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def csv_header(m):
    return ["step", *[f"loss_{i + 1}" for i in range(m)], "r_star", "rel_l2", "terminated", "elapsed_s"]


@dataclass
class TrainResult:
    config: TrainConfig
    records: list
    theta: np.ndarray
    terminated: bool = False
    reason: str = ""
    steps_run: int = 0
    monotone: Optional[bool] = None
    meta: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def final(self):
        return self.records[-1]


def git_revision():
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=5,
                             cwd=Path(__file__).resolve().parent)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def meta_path(csv_path):
    p = Path(csv_path)
    return p.with_name(p.stem + ".meta.json")


def write_outputs(result, m, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(m))
        for rec in result.records:
            w.writerow(rec.row())
    with open(meta_path(path), "w") as fh:
        json.dump(result.meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# the loop


def _build(config):
    if config.problem == "quadratic2":
        problem = pb.QuadraticProblem()
        return problem, None, problem.init(config.seed)
    kw = dict(n_r=config.n_r, n_b=config.n_b, n_i=config.n_i)
    if config.problem == "helmholtz2d":
        kw.update(a1=config.a1, a2=config.a2, k=config.k)
    problem = pb.make_problem(config.problem, **kw)
    spec = ad.NetSpec(problem.input_dim, config.hidden, 1)
    return problem, spec, ad.init_xavier(spec, config.seed).theta


def _evaluate(problem, spec, theta, step, seed, grads=True):
    if spec is None:
        vals, G = problem.values_and_grads(theta)
        return vals, (G if grads else None)
    build = pb.loss_builder(problem, spec, problem.sample(seed, step))
    if grads:
        return ad.grouped_gradients(theta, build)
    return np.array([float(x) for x in build(theta)]), None


def _rel_l2(problem, spec, theta):
    return problem.evaluate(theta) if spec is None else pb.evaluate(problem, theta, spec)


def train(config, write=True):
    """Run one training job.  Returns a :class:`TrainResult` (iterable of records).

    Raises
    ------
    NonFiniteError
        A loss or gradient became NaN/Inf; the partial CSV (ending with the
        offending step) is still written.
    """
    problem, spec, theta = _build(config)
    m = problem.m
    state = AdamState.zeros(theta.size)
    t0 = time.perf_counter()
    records = []
    result = TrainResult(config, records, theta)
    check_monotone = config.plain_sgd and spec is None
    monotone = True if check_monotone else None

    def clock():
        return time.perf_counter() - t0 if config.timing else 0.0

    def finish():
        result.theta = theta
        result.monotone = monotone
        result.meta = {
            "config": config.to_dict(),
            "config_hash": config.digest(),
            "git_revision": git_revision(),
            "eval_grid": problem.eval_grid_spec(),
            "loss_names": list(problem.loss_names),
            "n_params": int(theta.size),
            "steps_run": result.steps_run,
            "terminated": result.terminated,
            "reason": result.reason,
        }
        if write and config.output:
            write_outputs(result, m, config.output)
        return result

    step = 0
    for step in range(config.steps):
        vals, G = _evaluate(problem, spec, theta, step, config.seed)
        if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(G))):
            records.append(TrainRecord(step, tuple(vals), math.nan, math.nan, False, clock()))
            result.reason = "non-finite"
            finish()
            raise NonFiniteError(f"non-finite loss or gradient at step {step}", step=step)
        direc = select_direction(config.method, G, config.p, config.eps, config.rho)
        log = step % config.log_every == 0
        if direc.terminated:
            result.terminated, result.reason = True, direc.reason
            result.steps_run = step
            records.append(TrainRecord(step, tuple(vals), direc.r_star, _rel_l2(problem, spec, theta), True,
                                       clock()))
            return finish()
        if log:
            records.append(TrainRecord(step, tuple(vals), direc.r_star, _rel_l2(problem, spec, theta), False,
                                       clock()))
        if config.plain_sgd:
            new = theta - config.lr * direc.d
        else:
            new, state = adam_step(state, theta, direc.d, config.lr, (config.beta1, config.beta2),
                                   config.eps_adam)
        if check_monotone:
            before = float(np.sum(vals))
            after = float(np.sum(problem.values_and_grads(new)[0]))
            monotone &= after <= before + 1e-12 * max(1.0, abs(before))
        theta = new
    result.steps_run = config.steps
    vals, _ = _evaluate(problem, spec, theta, config.steps, config.seed, grads=False)
    records.append(TrainRecord(config.steps, tuple(vals), math.nan, _rel_l2(problem, spec, theta), False,
                               clock()))
    return finish()


# ---------------------------------------------------------------------------
# sweeps


def ablate_p(config, p_values=(1.5, 2.0, 3.0)):
    """Train ``method=ours`` once per ``p``; one summary row per value."""
    rows = []
    for p in p_values:
        out = ""
        if config.output:
            base = Path(config.output)
            out = str(base.with_name(f"{base.stem}_p{p:g}{base.suffix or '.csv'}"))
        res = train(config.replace(method="ours", p=p, output=out))
        rows.append(_summary(res, p=p))
    return rows


def _summary(res, **extra):
    fin = res.final
    row = {"problem": res.config.problem, "method": res.config.method, "seed": res.config.seed, **extra,
           "steps_run": res.steps_run, "terminated": res.terminated, "rel_l2": fin.rel_l2}
    for i, v in enumerate(fin.losses):
        row[f"loss_{i + 1}"] = v
    return row


def _final_from_csv(path):
    rows = read_csv(path)
    last = rows[-1]
    losses = tuple(float(last[k]) for k in last if k.startswith("loss_"))
    return float(last["rel_l2"]) if last["rel_l2"] else math.nan, losses


def _run_or_load(config):
    if config.output and Path(config.output).exists():
        return _final_from_csv(config.output)
    res = train(config)
    return res.final.rel_l2, res.final.losses


def compare(configs, jobs=1):
    """Final metrics of several runs, aggregated per (problem, method, p).

    Runs whose output CSV already exists are read back instead of re-run.
    Standard deviations are sample deviations (``ddof = 1``).
    """
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            finals = list(ex.map(_run_or_load, configs))
    else:
        finals = [_run_or_load(c) for c in configs]
    groups = {}
    for cfg, (rel, losses) in zip(configs, finals):
        key = (cfg.problem, cfg.method, "inf" if math.isinf(cfg.p) else cfg.p)
        groups.setdefault(key, []).append((cfg.seed, rel, losses))
    rows = []
    for (problem, method, p), runs in sorted(groups.items(), key=lambda kv: str(kv[0])):
        rel = np.array([r[1] for r in runs])
        row = {"problem": problem, "method": method, "p": p, "runs": len(runs),
               "seeds": " ".join(str(r[0]) for r in runs),
               "rel_l2_mean": float(np.mean(rel)),
               "rel_l2_std": float(np.std(rel, ddof=1)) if len(rel) > 1 else 0.0,
               "rel_l2_median": float(np.median(rel))}
        L = np.array([r[2] for r in runs])
        for i in range(L.shape[1]):
            row[f"loss_{i + 1}_mean"] = float(L[:, i].mean())
        rows.append(row)
    return rows


def write_rows(rows, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
