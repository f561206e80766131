"""Attractor sampling and self-excited / hidden classification.

A sample is a post-transient orbit cloud. An equilibrium excites it when a
trajectory started on a small sphere around that equilibrium ends up close to
the cloud. No exciting equilibrium means the attractor is reported as hidden,
which is negative evidence only: it records what was tried.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import csv
import io
import math

import numpy as np
from scipy.spatial import cKDTree

from . import flow
from .systems import equilibria, jacobian

__all__ = [
    "Classification",
    "AttractorSample",
    "settle",
    "classify_excitation",
    "trial_directions",
    "grid_points",
    "one_sided_distance",
]

PENDING = "pending"
SELF_EXCITED = "self_excited"
HIDDEN = "hidden"
CONVERGED = "converged_to_equilibrium"
UNBOUNDED = "unbounded"


@dataclass
class Classification:
    kind: str = PENDING
    equilibria: list = field(default_factory=list)
    reason: str = None
    trials: dict = field(default_factory=dict)

    def to_dict(self):
        return {"kind": self.kind, "equilibria": list(self.equilibria), "reason": self.reason,
                "trials": {str(k): v for k, v in self.trials.items()}}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], list(d["equilibria"]), d.get("reason"),
                   {int(k): v for k, v in d.get("trials", {}).items()})


@dataclass
class AttractorSample:
    system: str
    params: dict
    seed: np.ndarray
    transient: float
    sample_every: float
    points: np.ndarray
    classification: Classification = field(default_factory=Classification)

    def to_dict(self):
        return {
            "system": self.system,
            "params": dict(self.params),
            "seed": [float(x) for x in self.seed],
            "transient": self.transient,
            "sample_every": self.sample_every,
            "points": [[float(x) for x in p] for p in self.points],
            "classification": self.classification.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["system"], dict(d["params"]), np.array(d["seed"], dtype=float),
                   d["transient"], d["sample_every"],
                   np.array(d["points"], dtype=float).reshape(len(d["points"]), -1),
                   Classification.from_dict(d["classification"]))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index"] + [f"u{i + 1}" for i in range(len(self.seed))])
        for i, p in enumerate(self.points):
            w.writerow([i] + ["%.15g" % x for x in p])
        return buf.getvalue()


def _nearest_equilibrium(spec, u):
    best = None
    for i, eq in enumerate(equilibria(spec)):
        dist = float(np.linalg.norm(u - eq.coordinates))
        if best is None or dist < best[1]:
            best = (i, dist)
    return best


def settle(spec, seed, transient, t_sample, sample_every, cfg=None, bound=1e6, eps_eq=1e-6):
    """Integrate past ``transient``, then keep samples over ``t_sample``.

    The classification is filled only for the unbounded and converged cases;
    otherwise it stays pending for classify_excitation.
    """
    if not (transient > 0 and t_sample > 0):
        raise ValueError("transient and t_sample must be > 0")
    seed = np.asarray(seed, dtype=float)
    sample = AttractorSample(spec.id, dict(spec.params), seed.copy(), float(transient),
                             float(sample_every), np.empty((0, spec.n)))
    try:
        _, pts = flow._sample_orbit(spec, seed, transient + t_sample, sample_every, cfg, bound)
    except flow.IntegrationError as exc:
        sample.classification = Classification(UNBOUNDED, reason=str(exc))
        return sample
    n_tr = int(round(transient / sample_every))
    sample.points = pts[n_tr + 1:]
    # final window: the last tenth of the samples
    window = sample.points[-max(1, len(sample.points) // 10):]
    near = _nearest_equilibrium(spec, window[-1])
    if near is not None:
        eq = equilibria(spec)[near[0]].coordinates
        if np.max(np.linalg.norm(window - eq, axis=1)) <= eps_eq and near[1] <= 10 * eps_eq:
            sample.classification = Classification(CONVERGED, [near[0]],
                                                   reason=f"within {eps_eq:g} of equilibrium")
    return sample


def trial_directions(spec, eq, trials=8):
    """Unit directions for perturbations around an equilibrium.

    Up to half come from unstable eigenvectors (+/- real and imaginary parts),
    the rest from +/- coordinate axes and then +/- the diagonal.
    """
    n = spec.n
    out = []
    vals, vecs = np.linalg.eig(jacobian(spec, eq.coordinates))
    order = sorted(range(n), key=lambda i: (-vals[i].real, -vals[i].imag))
    seen_conj = set()
    for i in order:
        lam = vals[i]
        unstable = abs(lam) > 1.0 if spec.is_map else lam.real > 0.0
        if not unstable or i in seen_conj:
            continue
        v = vecs[:, i]
        parts = [v.real] if abs(lam.imag) == 0.0 else [v.real, v.imag]
        if lam.imag != 0.0:
            for k in range(n):
                if k != i and np.isclose(vals[k], np.conj(lam)):
                    seen_conj.add(k)
        for part in parts:
            nrm = np.linalg.norm(part)
            if nrm > 0:
                # fix the sign so the first nonzero entry is positive
                part = part / nrm
                nz = np.flatnonzero(np.abs(part) > 1e-12)
                if part[nz[0]] < 0:
                    part = -part
                out += [part, -part]
    out = out[: trials // 2]
    fill = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        fill += [e, -e]
    diag = np.ones(n) / math.sqrt(n)
    fill += [diag, -diag]
    out += fill[: max(0, trials - len(out))]
    return out[:trials]


def one_sided_distance(cloud, reference):
    """max over ``cloud`` of the distance to the nearest ``reference`` point."""
    ref = reference if isinstance(reference, cKDTree) else cKDTree(np.asarray(reference, float))
    dist, _ = ref.query(np.asarray(cloud, dtype=float))
    return float(np.max(dist))


def _run_trial(args):
    spec, start, t_trial, t_keep, every, cfg, bound, ref, delta_attr, capture = args
    try:
        _, pts = flow._sample_orbit(spec, start, t_trial, every, cfg, bound)
    except flow.IntegrationError as exc:
        return {"outcome": "failed", "reason": str(exc)}
    keep = pts[-int(round(t_keep / every)):]
    near = _nearest_equilibrium(spec, keep[-1])
    if near is not None:
        eq = equilibria(spec)[near[0]].coordinates
        if np.max(np.linalg.norm(keep[-max(1, len(keep) // 10):] - eq, axis=1)) <= capture:
            return {"outcome": "captured", "equilibrium": near[0]}
    dist = one_sided_distance(keep, ref)
    return {"outcome": "attracted" if dist <= delta_attr else "elsewhere", "distance": dist}


def classify_excitation(spec, sample, eps=None, trials=8, delta_attr=1.0, t_trial=None,
                        t_keep=None, trial_every=None, cfg=None, bound=1e6, jobs=1):
    """Fill ``sample.classification`` with self_excited or hidden.

    ``eps`` defaults to 1e-3 * (1 + |eq|) per equilibrium. Trials run for
    ``t_trial`` (default: the sample's transient plus ``t_keep``) and the last
    ``t_keep`` of each (default: a fifth of the sample span) is compared against the
    sample by one-sided nearest-neighbour distance, with trial states taken
    every ``trial_every`` (default: ten sample intervals). The sample should be
    dense along the orbit, since the test uses its raw points. A trial whose final tenth
    stays within its starting radius of an equilibrium is counted as captured.
    """
    if sample.classification.kind in (UNBOUNDED, CONVERGED):
        raise ValueError("sample must be bounded and not at an equilibrium")
    if len(sample.points) == 0:
        raise ValueError("sample has no points")
    span = len(sample.points) * sample.sample_every
    every = 10 * sample.sample_every if trial_every is None else trial_every
    t_keep = 0.2 * span if t_keep is None else t_keep
    t_trial = sample.transient + t_keep if t_trial is None else t_trial
    if spec.is_map:
        every = int(every)
        t_trial = every * int(t_trial // every)
        t_keep = every * int(t_keep // every)
    else:
        t_trial = every * round(t_trial / every)
        t_keep = every * round(t_keep / every)
    tree = cKDTree(sample.points)
    tasks, owners = [], []
    eqs = equilibria(spec)
    for i, eq in enumerate(eqs):
        radius = 1e-3 * (1.0 + float(np.linalg.norm(eq.coordinates))) if eps is None else eps
        for d in trial_directions(spec, eq, trials):
            tasks.append((spec, eq.coordinates + radius * d, t_trial, t_keep, every, cfg, bound,
                          tree, delta_attr, 2.0 * radius))
            owners.append(i)
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial, tasks))
    else:
        results = [_run_trial(t) for t in tasks]
    summary = {i: {"attracted": 0, "captured": 0, "elsewhere": 0, "failed": 0}
               for i in range(len(eqs))}
    for i, res in zip(owners, results):
        summary[i][res["outcome"]] += 1
    exciting = [i for i in range(len(eqs)) if summary[i]["attracted"] > 0]
    kind = SELF_EXCITED if exciting else HIDDEN
    sample.classification = Classification(
        kind, exciting, reason=f"{trials} trials per equilibrium, delta_attr={delta_attr:g}",
        trials=summary)
    return sample


def grid_points(sample, k):
    """k points by uniform stride over the sample: indices floor(i * N / k)."""
    n_pts = len(sample.points)
    if k < 1 or k > n_pts:
        raise ValueError(f"need 1 <= k <= {n_pts}, got {k}")
    return [sample.points[(i * n_pts) // k].copy() for i in range(k)]
