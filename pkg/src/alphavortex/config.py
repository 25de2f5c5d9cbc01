"""Run configuration: a JSON document with defaults for every knob."""

from dataclasses import dataclass, field, asdict
import hashlib
import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError
from .halfplane import VortexEnsemble
from .weak import TestFunction, default_panel

DEFAULTS = {
    "alpha": 0.1,
    "ensemble": {"kind": "explicit", "positions": [[0.0, 1.0]], "strengths": [1.0]},
    "T": 1.0,
    "dt": 0.02,
    "diag_every": 1,
    "grid": {"L": None, "N": None, "h": None, "x1_range": [-2.0, 2.0], "x2_max": 3.0},
    "tolerances": {"tail_tol": 1e-3, "energy_tol": 1e-3},
    "seed": 0,
    "out": "runs",
    "phi_panel": None,
    "phi_epsilon": 0.1,
    "checks": None,
    "budget": 1.0,
    "factor": 2.0,
}

HELP_DEFAULTS = """\
configuration keys (JSON) and defaults:
  alpha                  0.1 (number, or list of numbers for sweep)
  ensemble.kind          "explicit" with positions [[x1, x2], ...] and strengths [...]
                         or "sheet" with n, height, span [a, b], total (>= 0),
                         profile "uniform" | "elliptic", jitter (default 0)
  T, dt                  1.0, 0.02
  diag_every             1 (steps between diagnostics rows)
  grid.L, grid.N         trace window half-width and sample count (default: automatic)
  grid.h                 field output spacing (default: no field output)
  grid.x1_range          [-2, 2]
  grid.x2_max            3.0
  tolerances.tail_tol    1e-3 (trace tail relative to total variation)
  tolerances.energy_tol  1e-3 (relative energy increase flagged in diagnostics)
  seed                   0
  out                    "runs"
  phi_panel              null = five default bumps; else list of
                         {center, radius, epsilon, amplitude, id}; horizon is T
  phi_epsilon            0.1 (wall clearance of the default bumps)
  checks                 null = all registered checks; a non-empty list selects
  budget                 1.0 (sample-count multiplier for verify)
  factor                 2.0 (allowed growth of measured constants in verify)
"""


def _merge(base, over):
    out = dict(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown configuration key {k!r}")
        if isinstance(base[k], dict) and isinstance(v, dict) and k != "ensemble":
            out[k] = _merge(base[k], v)
        else:
            out[k] = v
    return out


def _positive(name, v):
    try:
        ok = float(v) > 0.0 and math.isfinite(float(v))
    except (TypeError, ValueError):
        ok = False
    if not ok:
        raise ConfigError(f"{name} must be a positive number, got {v!r}")
    return float(v)


@dataclass(frozen=True)
class RunConfig:
    alphas: tuple
    ensemble: dict
    T: float
    dt: float
    diag_every: int
    grid: dict
    tolerances: dict
    seed: int
    out: str
    phi_panel: Optional[list]
    phi_epsilon: float
    checks: Optional[list]
    budget: float
    factor: float
    raw: dict = field(repr=False, compare=False, default_factory=dict)

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("configuration must be a JSON object")
        d = _merge(DEFAULTS, doc)
        alpha = d["alpha"]
        alphas = tuple(alpha) if isinstance(alpha, (list, tuple)) else (alpha,)
        if not alphas:
            raise ConfigError("alpha list is empty")
        alphas = tuple(_positive("alpha", a) for a in alphas)
        if len(set(alphas)) != len(alphas):
            raise ConfigError(f"duplicate alpha values in {list(alphas)}")
        T = _positive("T", d["T"])
        dt = _positive("dt", d["dt"])
        diag_every = int(d["diag_every"])
        if diag_every < 1:
            raise ConfigError("diag_every must be at least 1")
        tol = {k: _positive(f"tolerances.{k}", v) for k, v in d["tolerances"].items()}
        g = d["grid"]
        for k in ("L", "h", "x2_max"):
            if g.get(k) is not None:
                _positive(f"grid.{k}", g[k])
        if g.get("N") is not None:
            n = int(g["N"])
            if n < 2 or n & (n - 1):
                raise ConfigError("grid.N must be a power of two")
        if (g.get("L") is None) != (g.get("N") is None):
            raise ConfigError("grid.L and grid.N must be given together")
        if d["checks"] is not None and len(d["checks"]) == 0:
            raise ConfigError("the check list is empty")
        if d["phi_panel"] is not None and len(d["phi_panel"]) == 0:
            raise ConfigError("the test-function panel is empty")
        cfg = cls(alphas, d["ensemble"], T, dt, diag_every, g, tol, int(d["seed"]), str(d["out"]),
                  d["phi_panel"], _positive("phi_epsilon", d["phi_epsilon"]), d["checks"],
                  _positive("budget", d["budget"]), _positive("factor", d["factor"]), d)
        cfg.build_ensemble()  # validate early
        cfg.panel()
        return cfg

    @classmethod
    def load(cls, path=None, **overrides):
        doc = {}
        if path is not None:
            try:
                doc = json.loads(Path(path).read_text())
            except FileNotFoundError:
                raise ConfigError(f"configuration file not found: {path}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        doc.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(doc)

    @property
    def alpha(self):
        if len(self.alphas) != 1:
            raise ConfigError("this command takes a single alpha")
        return self.alphas[0]

    def digest(self):
        """Hash of the physical configuration (output location excluded)."""
        doc = {k: v for k, v in self.raw.items() if k != "out"}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]

    def to_json(self):
        d = asdict(self)
        d.pop("raw")
        return d

    # ------------------------------------------------------------------

    def build_ensemble(self):
        e = self.ensemble
        kind = e.get("kind", "explicit")
        try:
            if kind == "explicit":
                return VortexEnsemble(e["positions"], e["strengths"])
            if kind == "sheet":
                return sheet(int(e["n"]), float(e["height"]), tuple(e.get("span", (-1.0, 1.0))),
                             float(e.get("total", 1.0)), e.get("profile", "uniform"),
                             float(e.get("jitter", 0.0)), self.seed)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid ensemble: {exc}") from None
        raise ConfigError(f"unknown ensemble kind {kind!r}")

    def panel(self, horizon=None):
        """Test functions with time horizon ``horizon`` (default T)."""
        horizon = self.T if horizon is None else horizon
        if self.phi_panel is None:
            return default_panel(horizon, self.phi_epsilon)
        try:
            return [
                TestFunction(tuple(p["center"]), float(p["radius"]),
                             float(p.get("epsilon", self.phi_epsilon)), horizon,
                             float(p.get("amplitude", 1.0)), str(p.get("id", f"phi{i}")))
                for i, p in enumerate(self.phi_panel)
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid test function: {exc}") from None


def sheet(n, height, span=(-1.0, 1.0), total=1.0, profile="uniform", jitter=0.0, seed=0):
    """n vortices on the segment span x {height} carrying circulation ``total``.

    ``uniform`` gives equal strengths, ``elliptic`` weights proportional to
    sqrt(1 - s^2) on the normalised segment.  Both are nonnegative for
    total >= 0.  ``jitter`` perturbs the abscissae by up to that fraction of
    the spacing, drawn from ``seed``.
    """
    if n < 1:
        raise ValueError("sheet needs at least one vortex")
    if total < 0.0:
        raise ValueError("sheet circulation must be nonnegative")
    a, b = span
    if not b > a:
        raise ValueError("sheet span must be increasing")
    s = np.linspace(-1.0, 1.0, n) if n > 1 else np.zeros(1)
    if profile == "uniform":
        w = np.ones(n)
    elif profile == "elliptic":
        s = np.cos(np.pi * (np.arange(n) + 0.5) / n)[::-1]
        w = np.sqrt(1.0 - s * s)
    else:
        raise ValueError(f"unknown profile {profile!r}")
    x1 = 0.5 * (a + b) + 0.5 * (b - a) * s
    if jitter:
        gap = (b - a) / max(n - 1, 1)
        x1 = x1 + jitter * gap * np.random.default_rng(seed).uniform(-0.5, 0.5, n)
    pos = np.column_stack((x1, np.full(n, height)))
    return VortexEnsemble(pos, total * w / w.sum())
