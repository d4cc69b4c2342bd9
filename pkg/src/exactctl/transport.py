"""The transport example: z_t = z_xi + m(xi) u + f(z) on (0, 1), z(0) = 0.

The nonlinearity is ``f = P^{-1} rho P`` where ``P`` is the normalized
indicator isometry and ``rho`` acts on l^2 coordinates by
``alpha_i -> phi(alpha_i) / i`` (1-based ``i``) with

    phi(a) = 0 for a < 0,  -sqrt(a) on [0, 1],  -1 for a > 1.

``rho`` is truncated at the grid size ``n``; the discarded tail has norm at
most ``1/sqrt(n)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import TimeGrid
from .errors import ConfigInvalid
from .semigroup import SemigroupHandle
from .steer import SteeringOptions
from .space import GridFunction, SeqVector, midpoints, p_forward, p_inverse

# sqrt(sum_{i>=1} 1/i^2) = pi / sqrt(6)
F_BOUND = float(np.pi / np.sqrt(6.0))


def phi(a):
    """Continuous, non-increasing, bounded by 1 in absolute value."""
    a = np.asarray(a, dtype=float)
    return np.where(a < 0.0, 0.0, -np.sqrt(np.clip(a, 0.0, 1.0)))


def rho(alpha):
    alpha = np.asarray(alpha, dtype=float)
    weights = 1.0 / np.arange(1, alpha.shape[-1] + 1)
    return weights * phi(alpha)


class TransportNonlinearity:
    """``f = P^{-1} rho P`` acting on cell values along the last axis.

    Because ``P`` is a coordinatewise scaling, ``f`` acts cellwise and the
    implicit equation ``z = b + c f(z)`` decouples into scalar monotone
    equations with a closed-form solution (:meth:`resolve`).
    """

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        s = np.sqrt(1.0 / x.shape[-1])
        return rho(x * s) / s

    def resolve(self, b, c):
        """Solve ``z - c f(z) = b`` exactly for ``c >= 0``.

        In coordinates ``alpha = sqrt(h) z`` each cell solves
        ``alpha - (c/i) phi(alpha) = beta`` whose left side is strictly
        increasing; the three branches of ``phi`` give the three cases below.
        """
        b = np.asarray(b, dtype=float)
        s = np.sqrt(1.0 / b.shape[-1])
        beta = b * s
        ci = c / np.arange(1, b.shape[-1] + 1)
        root = 0.5 * (-ci + np.sqrt(ci * ci + 4.0 * np.maximum(beta, 0.0)))
        mid = root * root
        alpha = np.where(beta < 0.0, beta, np.where(beta <= 1.0 + ci, mid, beta - ci))
        return alpha / s


def apply_f(x: GridFunction) -> GridFunction:
    return p_inverse(SeqVector(rho(p_forward(x).coeffs)))


def lipschitz_witness(m, n):
    """Grid function ``x_m`` with ``P x_m = (1/m, 0, 0, ...)``."""
    a = np.zeros(n)
    a[0] = 1.0 / m
    return a / np.sqrt(1.0 / n)


# --------------------------------------------------------------------------- config


def _steering_errors(st):
    errors = {}
    mi = st.get("max_iter", 1)
    if isinstance(mi, bool) or not isinstance(mi, int) or mi < 1:
        errors["steering.max_iter"] = "must be a positive integer"
    checks = {"relaxation": (lambda v: 0 < v <= 1, "must lie in (0, 1]"),
              "tol_fixed_point": (lambda v: v > 0, "must be positive"),
              "divergence_factor": (lambda v: v > 0, "must be positive")}
    for key, (ok, msg) in checks.items():
        if key in st:
            v = st[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not ok(v):
                errors[f"steering.{key}"] = msg
    return errors


@dataclass(frozen=True)
class TransportConfig:
    n: int = 64
    T: float = 1.25
    m_profile: dict = field(default_factory=lambda: {"constant": 1.0})
    target: dict = field(default_factory=lambda: {"kind": "sine", "k": 1})
    steering: SteeringOptions = field(default_factory=SteeringOptions)
    seed: int = 0
    output_dir: str = "out"

    @classmethod
    def from_dict(cls, data, base_dir="."):
        errors = {}
        if not isinstance(data, dict):
            raise ConfigInvalid("config must be a JSON object", fields={"<root>": "not an object"})
        known = {"n", "T", "m_profile", "target", "steering", "seed", "output_dir"}
        for key in data:
            if key not in known:
                errors[key] = "unknown field"
        kw = {}
        if "n" in data:
            n = data["n"]
            if isinstance(n, bool) or not isinstance(n, int):
                errors["n"] = "must be an integer"
            else:
                kw["n"] = n
        if "T" in data:
            T = data["T"]
            if isinstance(T, bool) or not isinstance(T, (int, float)):
                errors["T"] = "must be a number"
            else:
                kw["T"] = float(T)
        for key in ("m_profile", "target"):
            if key in data:
                if not isinstance(data[key], dict):
                    errors[key] = "must be an object"
                else:
                    kw[key] = dict(data[key])
        if "steering" in data:
            st = data["steering"]
            if not isinstance(st, dict):
                errors["steering"] = "must be an object"
            else:
                bad = set(st) - set(SteeringOptions.__dataclass_fields__)
                for b in bad:
                    errors[f"steering.{b}"] = "unknown field"
                errors.update(_steering_errors(st))
                if not errors:
                    kw["steering"] = SteeringOptions(**st)
        if "seed" in data:
            if isinstance(data["seed"], bool) or not isinstance(data["seed"], int):
                errors["seed"] = "must be an integer"
            else:
                kw["seed"] = data["seed"]
        if "output_dir" in data:
            kw["output_dir"] = str(data["output_dir"])
        cfg = cls(**kw)
        if isinstance(cfg.target, dict) and cfg.target.get("kind") == "csv":
            p = Path(cfg.target.get("path", ""))
            if not p.is_absolute():
                p = Path(base_dir) / p
            target = dict(cfg.target)
            target["path"] = str(p)
            cfg = TransportConfig(cfg.n, cfg.T, cfg.m_profile, target, cfg.steering,
                                  cfg.seed, cfg.output_dir)
        try:
            cfg.validate()
        except ConfigInvalid as exc:
            errors = {**exc.payload["fields"], **errors}
        if errors:
            raise ConfigInvalid("invalid configuration", fields=dict(sorted(errors.items())))
        return cfg

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigInvalid(f"cannot read config: {exc}", fields={"<file>": str(exc)}) from exc
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"config is not valid JSON: {exc}", fields={"<file>": str(exc)}) from exc
        return cls.from_dict(data, base_dir=path.parent)

    def validate(self):
        errors = {}
        if self.n < 8:
            errors["n"] = "must be >= 8"
        if not self.T > 0:
            errors["T"] = "must be positive"
        elif abs(self.T * self.n - round(self.T * self.n)) > 1e-9 * max(1.0, self.T * self.n):
            errors["T"] = f"T * n must be an integer (got {self.T * self.n})"
        try:
            m = self.m_values() if "n" not in errors else None
            if m is not None and np.any(m < 0):
                errors["m_profile"] = "values must be >= 0"
        except ConfigInvalid as exc:
            errors.update(exc.payload["fields"])
        if "n" not in errors:
            try:
                self.target_values()
            except ConfigInvalid as exc:
                errors.update(exc.payload["fields"])
        if errors:
            raise ConfigInvalid("invalid configuration", fields=errors)

    def m_values(self):
        prof = self.m_profile
        if set(prof) == {"constant"}:
            c = prof["constant"]
            if isinstance(c, bool) or not isinstance(c, (int, float)):
                raise ConfigInvalid("bad m_profile", fields={"m_profile.constant": "must be a number"})
            return np.full(self.n, float(c))
        if set(prof) == {"table"}:
            tab = prof["table"]
            if not isinstance(tab, list) or len(tab) != self.n:
                raise ConfigInvalid("bad m_profile",
                                    fields={"m_profile.table": f"must be a list of {self.n} numbers"})
            try:
                return np.array(tab, dtype=float)
            except (TypeError, ValueError) as exc:
                raise ConfigInvalid("bad m_profile", fields={"m_profile.table": str(exc)}) from exc
        raise ConfigInvalid("bad m_profile",
                            fields={"m_profile": "expected {'constant': c} or {'table': [...]}"})

    def target_values(self):
        tgt = self.target
        kind = tgt.get("kind")
        xi = midpoints(self.n)
        try:
            if kind == "sine":
                return np.sin(float(tgt.get("k", 1)) * np.pi * xi)
            if kind == "gauss":
                center = float(tgt["center"])
                width = float(tgt["width"])
                if not width > 0:
                    raise ConfigInvalid("bad target", fields={"target.width": "must be positive"})
                return np.exp(-0.5 * ((xi - center) / width) ** 2)
            if kind == "csv":
                from .serialize import read_grid_function_csv

                values = read_grid_function_csv(tgt["path"]).values
                if values.size != self.n:
                    raise ConfigInvalid("bad target",
                                        fields={"target.path": f"has {values.size} rows, expected {self.n}"})
                return values
        except KeyError as exc:
            raise ConfigInvalid("bad target", fields={f"target.{exc.args[0]}": "missing"}) from exc
        except (TypeError, ValueError, OSError) as exc:
            raise ConfigInvalid("bad target", fields={"target": str(exc)}) from exc
        raise ConfigInvalid("bad target", fields={"target.kind": "expected sine, gauss or csv"})


@dataclass(frozen=True, eq=False)
class TransportModel:
    semigroup: SemigroupHandle
    B: np.ndarray
    f: TransportNonlinearity
    grid: TimeGrid
    target: GridFunction

    @property
    def n(self):
        return self.B.shape[0]


def build_transport_model(cfg: TransportConfig) -> TransportModel:
    """Shift semigroup, multiplication operator ``B = m``, ``f``, and grid with ``dt = h``."""
    cfg.validate()
    return TransportModel(
        semigroup=SemigroupHandle.left_shift(),
        B=cfg.m_values(),
        f=TransportNonlinearity(),
        grid=TimeGrid.aligned(cfg.T, cfg.n),
        target=GridFunction(cfg.target_values()),
    )


# --------------------------------------------------------------------------- probes


def random_state_pair(n):
    """Sampler of state pairs whose cell coordinates straddle all three branches of ``phi``."""
    s = np.sqrt(n)

    def sample(rng):
        scale = rng.choice([0.05, 0.5, 2.0])
        return (s * scale * rng.standard_normal(n), s * scale * rng.standard_normal(n))

    return sample


def dissipativity_probe(n=64, count=10_000, seed=1):
    """One-sided Lipschitz estimate of ``f`` over seeded random pairs (expected <= 0)."""
    from .analysis import estimate_one_sided_constant

    return estimate_one_sided_constant(TransportNonlinearity(), random_state_pair(n), count, seed)


def lipschitz_ladder(m_max, n=64):
    """Ratios ``||f(x_m) - f(0)|| / ||x_m||`` for ``m = 4, 16, ...`` up to ``m_max`` (and ``m_max``).

    Each ratio equals ``sqrt(m)``: ``f`` has unbounded slope at the origin.
    """
    from .analysis import lipschitz_ratio_probe

    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    ladder = []
    m = 4
    while m <= m_max:
        ladder.append(m)
        m *= 4
    if not ladder or ladder[-1] != m_max:
        ladder.append(m_max)
    f = TransportNonlinearity()
    rows = []
    for m in ladder:
        rep = lipschitz_ratio_probe(f, [(lipschitz_witness(m, n), np.zeros(n))])
        rows.append({"m": m, "ratio": rep.estimate, "sqrt_m": float(np.sqrt(m))})
    return rows
