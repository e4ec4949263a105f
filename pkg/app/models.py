# app/models.py
from __future__ import annotations

from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


# ---------------------------------------------------------------------------
# Scalar functions of X0
# ---------------------------------------------------------------------------


class X0Eval(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: float
    value: float
    d1: float
    d1_over_x: float            # X0'(x)/x, equals 2 at x = 0
    d2: float
    d3: float
    d2_minus_d1_over_x: float   # X0'' - X0'/x, O(x^2) near 0
    terms_used: int
    est_error: float
    method: str                 # "double" | "double-double" | "far-field"


class DerivedScalars(BaseModel):
    x: float
    y: float
    tau: float
    m: float
    h: float
    B1: float
    C1: float
    B2: float
    C2: float
    kappa1: float
    kappa2: float
    kappa3: float
    Pinv: float
    Pinv_z: float
    T: float
    q: float
    w: float
    wtilde: float
    singular: List[str] = Field(default_factory=list)  # scalars set to NaN


class PhiPair(BaseModel):
    cos_phi: float
    sin_phi: float
    phi_z: float
    phi_branch: float


# ---------------------------------------------------------------------------
# Connection data
# ---------------------------------------------------------------------------


class ConnCoeffs(BaseModel):
    model_config = ConfigDict(frozen=True)

    a1: float
    b1: float
    c1: float
    a2: float
    b2: float
    c2: float

    @property
    def nu1_sq(self) -> float:
        return self.a1 * self.a1 + self.b1 * self.b1 + self.c1 * self.c1

    @property
    def nu2_sq(self) -> float:
        return self.a2 * self.a2 + self.b2 * self.b2 + self.c2 * self.c2


class OmegaPair(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    omega1: np.ndarray
    omega2: np.ndarray


class StepWeights(BaseModel):
    theta1_density: float   # (x^2 - y^2) / (x h)
    theta2_density: float   # 2 y / h


class PointClass(str, Enum):
    REGULAR = "Regular"
    S1_DEGENERATE = "S1_degenerate"
    S2_EXCLUDED = "S2_excluded"
    OFF_DOMAIN = "OffDomain"


# ---------------------------------------------------------------------------
# Lattice
# ---------------------------------------------------------------------------


class GridSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    x0: float
    y0: float
    a: float
    n: int

    @model_validator(mode="after")
    def _check(self) -> "GridSpec":
        if self.a <= 0:
            raise ValueError("grid side length must be positive")
        if self.n < 1:
            raise ValueError("grid needs at least one subdivision")
        return self

    @property
    def delta(self) -> float:
        return self.a / self.n

    def x_at(self, i: int) -> float:
        # i == n lands exactly on the far edge
        return self.x0 + self.a if i == self.n else self.x0 + i * self.delta

    def y_at(self, j: int) -> float:
        return self.y0 + self.a if j == self.n else self.y0 + j * self.delta

    def contains(self, x: float, y: float) -> bool:
        return (
            self.x0 <= x <= self.x0 + self.a
            and self.y0 <= y <= self.y0 + self.a
        )


class Move(str, Enum):
    RIGHT = "R"
    UP = "U"


class LatticePath(BaseModel):
    steps: List[Move] = Field(default_factory=list)

    @classmethod
    def underline(cls, s: int, t: int) -> "LatticePath":
        """x first, then y."""
        return cls(steps=[Move.RIGHT] * s + [Move.UP] * t)

    @classmethod
    def overline(cls, s: int, t: int) -> "LatticePath":
        """y first, then x."""
        return cls(steps=[Move.UP] * t + [Move.RIGHT] * s)

    @classmethod
    def staircase(cls, n: int) -> "LatticePath":
        """(0,0) -> (0,1) -> (1,1) -> ... -> (n,n)."""
        steps: List[Move] = []
        for _ in range(n):
            steps.extend([Move.UP, Move.RIGHT])
        return cls(steps=steps)

    def endpoint(self) -> Tuple[int, int]:
        i = sum(1 for m in self.steps if m == Move.RIGHT)
        return i, len(self.steps) - i


class StepFactors(BaseModel):
    s: float
    t: float
    nu2: float


class ConvergenceK(BaseModel):
    K1: float
    K2: float
    K: float


class ConvergenceRow(BaseModel):
    n: int
    delta: float
    global_error: float     # ||F_delta - F_ref|| at the target
    path_gap: float         # ||F_underline - F_overline|| at the target
    bound: float            # delta (exp(2Ka) - 1)


class ConvergenceStudy(BaseModel):
    rows: List[ConvergenceRow]
    K: ConvergenceK
    global_order: float
    path_order: float


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------


class CurveKind(str, Enum):
    X_CURVE = "XCurve"
    Y_CURVE = "YCurve"
    DIAGONAL = "Diagonal"
    U_CURVE = "UCurve"


class CurveSample(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: CurveKind
    fixed: float              # y0 for x-curves, x0 for y-curves, 0 otherwise
    side: int = 1             # +1 on D(+), -1 once mapped to x < 0
    params: np.ndarray        # (N,)
    points: np.ndarray        # (N, 4)
    frames: np.ndarray        # (N, 4, 4)

    @model_validator(mode="after")
    def _check(self) -> "CurveSample":
        n = len(self.params)
        if len(self.points) != n or len(self.frames) != n:
            raise ValueError("params, points and frames must have the same length")
        if n > 1:
            d = np.diff(self.params)
            if not (np.all(d > 0) or np.all(d < 0)):
                raise ValueError("curve parameters must be strictly monotone")
        return self


class SphereFit(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    center: np.ndarray
    radius: float
    normal: np.ndarray
    max_radial_dev: float
    max_planar_dev: float


class DiagonalBuild(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    diagonal: CurveSample
    substitutes: List[CurveSample]   # k-curves on [y_i, y_i+1] x {y_i}
    forward_stall: float             # max |f - f(y_i, y_i)| when built forward


class CuspReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    at_param: float
    exponents: Tuple[float, float, float]
    frame_at_cusp: np.ndarray


class AsymptoticCircles(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    b_inf: np.ndarray
    c_inf: np.ndarray
    fitted_angular_speed: float
    speeds: Dict[float, float] = Field(default_factory=dict)         # per y
    v0_norms: Dict[float, float] = Field(default_factory=dict)       # per y
    gamma_radii: Dict[float, Tuple[float, float]] = Field(default_factory=dict)  # measured, expected
    v1_gaps: Dict[float, float] = Field(default_factory=dict)       # per y, |v1 - (-2/sqrt5) v0|
    b_inf_spread: float = 0.0
    tail_residual: float = 0.0


class YAsymptotics(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    b_tilde_inf: np.ndarray
    c_tilde_inf: np.ndarray
    u_fit_residual: float            # max |u(y) - closed form| over the samples
    v1_fit_residual: float
    u_utilde_max: float              # max |<u(y), u~(x)>| on the sample grid
    du_dy_max_err: float             # closed form vs y^2 / (1 + y^2)
    du_dy_fd_err: float              # finite differences of u along a y-curve
    endpoint_gaps: Dict[float, float] = Field(default_factory=dict)       # x -> |f(x,Y) - f(x,-Y)|, period-averaged
    endpoint_gaps_half: Dict[float, float] = Field(default_factory=dict)  # same at Y/2
    endpoint_limit_gaps: Dict[float, float] = Field(default_factory=dict) # x -> |f(x,Y) - (N^-1 v1~ + A~)|


class XAsymptotics(BaseModel):
    y0: float
    n_gap_scaled_max: float          # max x |v1 + n| over the window
    n_gap_growth: float              # second-half max over first-half max
    xi_phase_rms: float              # phase of xi against w(x), constant offset removed
    near_center_perp: float          # x -> 0 circle center off the line A + t v1
    far_center_perp: float           # x -> inf circle center off the same line
    far_center_gap: float            # far center vs A - v1 / (2 sqrt5 sqrt(1+y^2))


class OriginLimit(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    point: np.ndarray                # -(1/2) v1(0) + A(0)
    max_gap: Dict[float, float] = Field(default_factory=dict)   # radius -> max |f - point|


class GaugeShift(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    shift: np.ndarray
    a_residual: float                # max |P_bc (A(y) + shift)|
    atilde_residual: float           # max |P_b~c~ (A~(x) + shift)|


# ---------------------------------------------------------------------------
# Reports / CLI
# ---------------------------------------------------------------------------


class InvariantEntry(BaseModel):
    name: str
    measured: float
    bound: float
    passed: bool
    detail: str = ""


class InvariantReport(BaseModel):
    entries: List[InvariantEntry] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def summary(self) -> str:
        ok = sum(1 for e in self.entries if e.passed)
        return f"{ok}/{len(self.entries)}"


class CheckOptions(BaseModel):
    grid: GridSpec = GridSpec(x0=2.0, y0=1.0, a=1.0, n=64)
    tolerances: Dict[str, float] = Field(default_factory=dict)   # overrides by check entry name
    stress_steps: int = 1_000_000
    workers: Optional[int] = None
    progress: bool = False


class RunConfig(BaseModel):
    command: str                               # "eval" | "curve" | "grid" | "invariants" | "reflect"
    rectangle: Tuple[float, float, float] = (2.0, 1.0, 1.0)   # x0, y0, a
    n: int = 64
    tolerances: Dict[str, float] = Field(default_factory=dict)
    init_frame: str = "identity"               # "identity" | path to .npy / .csv
    output: Optional[str] = None
    format: str = "csv"                        # "csv" | "ply" | "json-report"

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.command != "reflect" and self.rectangle[0] <= 0:
            raise ValueError("rectangle must lie in x > 0")
        if self.format not in {"csv", "ply", "json-report"}:
            raise ValueError(f"unknown output format {self.format!r}")
        return self
