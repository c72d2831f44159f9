"""GEP instance data: container, synthetic generator, and file I/O."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

__all__ = [
    "InstanceError",
    "GepInstance",
    "GenConfig",
    "generate_instance",
    "storage_penalty_matrix",
    "save_instance",
    "load_instance",
    "load_timeseries_csv",
]


class InstanceError(ValueError):
    """Raised for invalid, missing or malformed instance data."""


# (name, expected ndim) for every array field; scalars are handled separately
_ARRAY_FIELDS = {
    "c_inv": 1,
    "c_p": 1,
    "demand": 1,
    "cap_factor": 2,
    "eta_c": 1,
    "eta_d": 1,
    "s0": 1,
    "p_s_min": 1,
    "p_s_max": 1,
    "x_min": 1,
    "x_max": 1,
    "penalty_matrix": 2,
    "z_ref": 2,
}
_SCALAR_FIELDS = ("num_generators", "num_storage", "delta", "c_ns")


@dataclass(frozen=True, eq=False)
class GepInstance:
    """Parameters and input series of one GEP problem.

    Units: costs in EUR/MW (investment) and EUR/MWh (operation, shedding),
    demand in MWh per period, powers in MW, storage states in MWh.
    Arrays are made read-only on construction.
    """

    num_generators: int
    num_storage: int
    delta: float
    c_inv: np.ndarray  # (G+N,)
    c_p: np.ndarray  # (G,)
    c_ns: float
    demand: np.ndarray  # (T,)
    cap_factor: np.ndarray  # (T, G)
    eta_c: np.ndarray  # (N,)
    eta_d: np.ndarray  # (N,)
    s0: np.ndarray  # (N,)
    p_s_min: np.ndarray  # (2N,) charge limits then discharge limits
    p_s_max: np.ndarray  # (2N,)
    x_min: np.ndarray  # (G+N,)
    x_max: np.ndarray  # (G+N,)
    penalty_matrix: np.ndarray  # (R, G+3N+1)
    z_ref: np.ndarray  # (T, R)

    def __post_init__(self):
        G, N = self.num_generators, self.num_storage
        for name, ndim in _ARRAY_FIELDS.items():
            arr = np.array(getattr(self, name), dtype=float)
            if name == "penalty_matrix" and arr.size == 0:
                arr = arr.reshape(0, G + 3 * N + 1)
            if name == "z_ref" and arr.ndim == 1 and arr.size == 0:
                arr = arr.reshape(len(np.atleast_1d(self.demand)), 0)
            if name == "cap_factor" and arr.ndim == 1 and arr.size == 0:
                arr = arr.reshape(len(np.atleast_1d(self.demand)), 0)
            if arr.ndim != ndim:
                raise InstanceError(f"{name}: expected {ndim}-d array, got shape {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "num_generators", int(G))
        object.__setattr__(self, "num_storage", int(N))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "c_ns", float(self.c_ns))
        self.validate()

    # -- derived sizes -----------------------------------------------------
    @property
    def G(self) -> int:
        return self.num_generators

    @property
    def N(self) -> int:
        return self.num_storage

    @property
    def T(self) -> int:
        return self.demand.shape[0]

    @property
    def R(self) -> int:
        return self.penalty_matrix.shape[0]

    @property
    def num_periods(self) -> int:
        return self.T

    @property
    def num_ref(self) -> int:
        return self.R

    def validate(self) -> None:
        G, N, T, R = self.G, self.N, self.T, self.R
        if G < 0 or N < 0:
            raise InstanceError("num_generators/num_storage: must be >= 0")
        if T < 1:
            raise InstanceError("demand: at least one period required")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise InstanceError("delta: must be positive and finite")
        shapes = {
            "c_inv": (G + N,),
            "c_p": (G,),
            "cap_factor": (T, G),
            "eta_c": (N,),
            "eta_d": (N,),
            "s0": (N,),
            "p_s_min": (2 * N,),
            "p_s_max": (2 * N,),
            "x_min": (G + N,),
            "x_max": (G + N,),
            "penalty_matrix": (R, G + 3 * N + 1),
            "z_ref": (T, R),
        }
        for name, shape in shapes.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise InstanceError(f"{name}: expected shape {shape}, got {arr.shape}")
        for name in _ARRAY_FIELDS:
            if not np.all(np.isfinite(getattr(self, name))):
                raise InstanceError(f"{name}: non-finite entries")
        if not math.isfinite(self.c_ns) or self.c_ns < 0:
            raise InstanceError("c_ns: must be finite and >= 0")
        for name in ("c_inv", "c_p", "eta_c", "eta_d", "s0", "p_s_min", "p_s_max",
                     "x_min", "x_max", "demand"):
            if np.any(getattr(self, name) < 0):
                raise InstanceError(f"{name}: negative entries")
        cf = self.cap_factor
        if np.any(cf < 0) or np.any(cf > 1):
            raise InstanceError("cap_factor: entries must lie in [0, 1]")
        if np.any(self.x_min > self.x_max):
            raise InstanceError("x_min: exceeds x_max")
        if np.any(self.p_s_min > self.p_s_max):
            raise InstanceError("p_s_min: exceeds p_s_max")

    def __eq__(self, other):
        if not isinstance(other, GepInstance):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray):
                if a.shape != b.shape or not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None

    def replace(self, **changes) -> "GepInstance":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return GepInstance(**kw)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.tolist() if isinstance(v, np.ndarray) else v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GepInstance":
        if not isinstance(data, dict):
            raise InstanceError("instance document: top level must be an object")
        kw = {}
        for name in _SCALAR_FIELDS + tuple(_ARRAY_FIELDS):
            if name not in data:
                raise InstanceError(f"{name}: missing field")
            value = data[name]
            if name in _ARRAY_FIELDS:
                try:
                    value = np.asarray(value, dtype=float)
                except (TypeError, ValueError) as exc:
                    raise InstanceError(f"{name}: not a numeric array ({exc})") from None
            elif not isinstance(value, (int, float)) or isinstance(value, bool):
                raise InstanceError(f"{name}: expected a number, got {type(value).__name__}")
            kw[name] = value
        return cls(**kw)


def storage_penalty_matrix(G: int, N: int) -> np.ndarray:
    """Selector [0_{N x (G+1)}, I_N, 0_{N x 2N}] picking the storage states out of z_op."""
    A = np.zeros((N, G + 3 * N + 1))
    A[:, G + 1:G + 1 + N] = np.eye(N)
    return A


@dataclass(frozen=True)
class GenConfig:
    """Settings for the synthetic instance generator (defaults: reference cost data)."""

    G: int
    N: int
    T: int
    seed: int = 0
    fraction_thermal: float = 0.2
    delta: float = 1.0
    c_ns: float = 5000.0
    c_inv_thermal: float = 40000.0
    c_inv_vres: float = 30000.0
    c_inv_storage: float = 35000.0
    c_p_thermal: float = 50.0
    c_p_vres: float = 3.0
    x_min: float = 0.1
    x_max: float = 1.0
    p_s_max_range: tuple[float, float] = (0.3, 0.6)
    eta_c: float = 0.9
    eta_d: float = 1.1
    s0: float = 0.0
    z_ref_range: tuple[float, float] = (0.1, 1.0)
    demand_base_per_unit: float = 0.5
    demand_swing: float = 0.3
    demand_noise: float = 0.05
    cf_noise: float = 0.1

    def __post_init__(self):
        if self.G < 0 or self.N < 0:
            raise InstanceError("G, N: must be >= 0")
        if self.T < 1:
            raise InstanceError("T: must be >= 1")
        if not 0.0 <= self.fraction_thermal <= 1.0:
            raise InstanceError("fraction_thermal: must lie in [0, 1]")
        if self.delta <= 0:
            raise InstanceError("delta: must be positive")
        lo, hi = self.p_s_max_range
        if not 0 <= lo <= hi:
            raise InstanceError("p_s_max_range: need 0 <= low <= high")
        if self.x_min > self.x_max or self.x_min < 0:
            raise InstanceError("x_min/x_max: need 0 <= x_min <= x_max")

    @property
    def num_thermal(self) -> int:
        return int(round(self.fraction_thermal * self.G))


def generate_instance(config: GenConfig) -> GepInstance:
    """Build a seeded synthetic instance.

    The first ``round(fraction_thermal * G)`` generators are thermal (capacity
    factor 1); the rest are vRES with a clipped daily sinusoid plus noise.
    Demand follows a daily sinusoid around ``0.5 * (G + N)`` MWh.
    """
    cfg = config
    G, N, T = cfg.G, cfg.N, cfg.T
    ss = np.random.SeedSequence(cfg.seed)
    rng_profile, rng_storage, rng_ref = (np.random.default_rng(s) for s in ss.spawn(3))
    n_th = cfg.num_thermal
    thermal = np.arange(G) < n_th

    t = np.arange(T)
    daily = np.sin(2.0 * np.pi * t / 24.0)
    noise = rng_profile.uniform(-cfg.demand_noise, cfg.demand_noise, size=T)
    demand = cfg.demand_base_per_unit * (G + N) * (1.0 + cfg.demand_swing * daily + noise)
    demand = np.clip(demand, 0.0, None)

    phase = rng_profile.uniform(0.0, 2.0 * np.pi, size=G)
    cf_noise = rng_profile.uniform(-cfg.cf_noise, cfg.cf_noise, size=(T, G))
    cf = np.sin(2.0 * np.pi * t[:, None] / 24.0 + phase[None, :]) + cf_noise
    cf = np.clip(cf, 0.0, 1.0)
    cf[:, thermal] = 1.0

    c_inv = np.concatenate([
        np.where(thermal, cfg.c_inv_thermal, cfg.c_inv_vres),
        np.full(N, cfg.c_inv_storage),
    ])
    c_p = np.where(thermal, cfg.c_p_thermal, cfg.c_p_vres).astype(float)

    lo, hi = cfg.p_s_max_range
    p_s_max = rng_storage.uniform(lo, hi, size=2 * N)
    z_ref = rng_ref.uniform(*cfg.z_ref_range, size=(T, N))

    return GepInstance(
        num_generators=G,
        num_storage=N,
        delta=cfg.delta,
        c_inv=c_inv,
        c_p=c_p,
        c_ns=cfg.c_ns,
        demand=demand,
        cap_factor=cf,
        eta_c=np.full(N, cfg.eta_c),
        eta_d=np.full(N, cfg.eta_d),
        s0=np.full(N, cfg.s0),
        p_s_min=np.zeros(2 * N),
        p_s_max=p_s_max,
        x_min=np.full(G + N, cfg.x_min),
        x_max=np.full(G + N, cfg.x_max),
        penalty_matrix=storage_penalty_matrix(G, N),
        z_ref=z_ref,
    )


# -- persistence -----------------------------------------------------------

def save_instance(inst: GepInstance, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(inst.to_dict(), indent=1))
    return path


def load_instance(path) -> GepInstance:
    path = Path(path)
    if not path.exists():
        raise InstanceError(f"{path}: no such file")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: malformed document ({exc})") from None
    return GepInstance.from_dict(data)


def load_timeseries_csv(path, G: int, R: int):
    """Read ``t,demand,cf_1..cf_G,ref_1..ref_R`` rows.

    Returns ``(demand (T,), cap_factor (T, G), z_ref (T, R))``; T is the row
    count. Rows must be sorted by t, contiguous, starting at the first t.
    """
    path = Path(path)
    if not path.exists():
        raise InstanceError(f"{path}: no such file")
    expected = ["t", "demand"] + [f"cf_{g + 1}" for g in range(G)] + [f"ref_{r + 1}" for r in range(R)]
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InstanceError(f"{path}: no data rows")
        header = [h.strip() for h in header]
        if header != expected:
            missing = [h for h in expected if h not in header]
            what = f"missing column(s) {missing}" if missing else f"expected header {expected}"
            raise InstanceError(f"{path}: {what}, got {header}")
        ts, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(expected):
                raise InstanceError(f"{path}: row {lineno}: expected {len(expected)} cells, got {len(row)}")
            try:
                t_val = float(row[0])
                vals = [float(c) for c in row[1:]]
            except ValueError:
                raise InstanceError(f"{path}: row {lineno}: non-numeric cell") from None
            if t_val != int(t_val):
                raise InstanceError(f"{path}: row {lineno}: t must be an integer")
            t_val = int(t_val)
            if ts:
                if t_val <= ts[-1]:
                    raise InstanceError(f"{path}: row {lineno}: t={t_val} unsorted or duplicated")
                if t_val != ts[-1] + 1:
                    raise InstanceError(f"{path}: row {lineno}: gap in t, missing t={ts[-1] + 1}")
            ts.append(t_val)
            rows.append(vals)
    if not rows:
        raise InstanceError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    return data[:, 0].copy(), data[:, 1:1 + G].copy(), data[:, 1 + G:].copy()
