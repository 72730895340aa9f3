"""Exact reference solution for the two-site XX chain between two baths.

Four correlators close under the dynamics:

    X  = <X1 X2 + Y1 Y2>
    Y  = i <Y1 X2 - X1 Y2>        (purely imaginary)
    z1 = <Z1>,  z2 = <Z2>

``Y`` is stored as the real number ``y = -i Y = <Y1 X2 - X1 Y2>``, so the
spin current is ``j_s = i J Y = -J y``.  With that substitution the equations of
motion are real:

    dX/dt  = -4 lam X + (h_R - h_L) y
    dz1/dt =  4 lam (M_L - z1) - 2 J y
    dz2/dt =  4 lam (M_R - z2) + 2 J y
    dy/dt  = (h_L - h_R) X - 4 J (z2 - z1) - 4 lam y
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .densemat import TensorSpace
from .lindblad import LindbladModel, evolve, ness, rk4_step, spin_chain_model
from .spin import BathSpec, ChainSpec, site_op, thermal_spin
from .thermo import thermo_record

DEVIATION_LIMIT = 1e-6


@dataclass(frozen=True)
class TwoSiteParams:
    J: float
    h_L: float
    h_R: float
    lam: float
    beta_L: float
    beta_R: float

    @property
    def M_L(self) -> float:
        return thermal_spin(self.beta_L, self.h_L).magnetization

    @property
    def M_R(self) -> float:
        return thermal_spin(self.beta_R, self.h_R).magnetization

    def chain(self) -> ChainSpec:
        return ChainSpec((self.h_L, self.h_R), self.J, self.J)

    def baths(self) -> tuple[BathSpec, BathSpec]:
        return (BathSpec("L", self.beta_L, self.lam), BathSpec("R", self.beta_R, self.lam))

    def model(self) -> LindbladModel:
        return spin_chain_model(self.chain(), self.baths())


@dataclass(frozen=True)
class CorrelatorState:
    X: float
    y: float
    z1: float
    z2: float

    @property
    def Y(self) -> complex:
        """The purely imaginary correlator ``i <Y1 X2 - X1 Y2>``."""
        return 1j * self.y

    def as_array(self) -> np.ndarray:
        return np.array([self.X, self.y, self.z1, self.z2])

    @classmethod
    def from_array(cls, a) -> "CorrelatorState":
        return cls(*(float(x) for x in a))

    @classmethod
    def from_density_matrix(cls, rho: np.ndarray) -> "CorrelatorState":
        return cls.from_array([np.trace(op @ rho).real for op in _correlator_ops()])


def _correlator_ops() -> list[np.ndarray]:
    space = TensorSpace.qubits(2)
    x1, x2 = site_op(space, 0, "x"), site_op(space, 1, "x")
    y1, y2 = site_op(space, 0, "y"), site_op(space, 1, "y")
    z1, z2 = site_op(space, 0, "z"), site_op(space, 1, "z")
    return [x1 @ x2 + y1 @ y2, y1 @ x2 - x1 @ y2, z1, z2]


def _rhs_array(s: np.ndarray, p: TwoSiteParams, m_l: float, m_r: float) -> np.ndarray:
    x, y, z1, z2 = s
    lam4 = 4 * p.lam
    return np.array(
        [
            -lam4 * x + (p.h_R - p.h_L) * y,
            (p.h_L - p.h_R) * x - 4 * p.J * (z2 - z1) - lam4 * y,
            lam4 * (m_l - z1) - 2 * p.J * y,
            lam4 * (m_r - z2) + 2 * p.J * y,
        ]
    )


def correlator_rhs(s: CorrelatorState, p: TwoSiteParams) -> CorrelatorState:
    return CorrelatorState.from_array(_rhs_array(s.as_array(), p, p.M_L, p.M_R))


def integrate_correlators(
    s0: CorrelatorState, p: TwoSiteParams, t_final: float, dt: float, sample_dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """RK4 for the correlator system; returns sample times and an (n, 4) array."""
    m_l, m_r = p.M_L, p.M_R
    f = lambda s: _rhs_array(s, p, m_l, m_r)  # noqa: E731
    n_seg = max(1, math.ceil(t_final / sample_dt - 1e-9))
    times = np.linspace(0.0, t_final, n_seg + 1)
    out = [s0.as_array()]
    s = s0.as_array()
    for k in range(n_seg):
        seg = times[k + 1] - times[k]
        steps = max(1, math.ceil(seg / dt - 1e-9))
        h = seg / steps
        for _ in range(steps):
            s = rk4_step(f, s, h)
        out.append(s.copy())
    return times, np.array(out)


@dataclass(frozen=True)
class ClosedFormNESS:
    j_s: float
    wdot: float
    qdot_L: float
    qdot_R: float
    diS_dt: float
    correlators: CorrelatorState


def ness_closed_form(p: TwoSiteParams) -> ClosedFormNESS:
    """Steady-state current and rates of the two-site chain.

    ``j_s = 16 lam J^2 (M_R - M_L) / ((h_L - h_R)^2 + 16 J^2 + 16 lam^2)``,
    ``Qdot_L = -h_L j_s``, ``Qdot_R = h_R j_s``, ``Wdot = (h_L - h_R) j_s`` and
    ``d_iS/dt = (beta_L h_L - beta_R h_R) j_s``.
    """
    if not p.lam > 0:
        raise ValueError("lam must be positive")
    m_l, m_r = p.M_L, p.M_R
    dh = p.h_L - p.h_R
    j_s = 4 * p.lam * 4 * p.J**2 * (m_r - m_l) / (dh**2 + 16 * p.J**2 + 16 * p.lam**2)
    if p.J != 0:
        y = -j_s / p.J
    else:
        y = 0.0
    corr = CorrelatorState(
        X=dh * j_s / (4 * p.lam * p.J) if p.J != 0 else 0.0,
        y=y,
        z1=m_l + j_s / (2 * p.lam),
        z2=m_r - j_s / (2 * p.lam),
    )
    return ClosedFormNESS(
        j_s=j_s,
        wdot=dh * j_s,
        qdot_L=-p.h_L * j_s,
        qdot_R=p.h_R * j_s,
        diS_dt=(p.beta_L * p.h_L - p.beta_R * p.h_R) * j_s,
        correlators=corr,
    )


@dataclass
class OracleReport:
    times: np.ndarray
    oracle: np.ndarray
    engine: np.ndarray
    max_dev: float
    ness_dev: dict
    work_split_dev: float
    passed: bool


def oracle_vs_engine(
    p: TwoSiteParams,
    rho0: np.ndarray,
    t_final: float,
    dt: float | None = None,
    sample_dt: float = 0.1,
    limit: float = DEVIATION_LIMIT,
) -> OracleReport:
    """Integrate the correlator system and the full Lindblad equation side by side.

    Also compares the null-space steady state of the engine with
    :func:`ness_closed_form` and checks ``Wdot_L = 2 lam J X = Wdot_R`` along
    the engine trajectory.
    """
    model = p.model()
    dt = model.default_dt if dt is None else dt
    traj = evolve(model, rho0, t_final, dt=dt, sample_dt=sample_dt)
    engine = np.array([CorrelatorState.from_density_matrix(r).as_array() for r in traj.states])
    times, oracle = integrate_correlators(
        CorrelatorState.from_density_matrix(rho0), p, t_final, dt, sample_dt
    )
    max_dev = float(np.max(np.abs(engine - oracle)))

    work_dev = 0.0
    for (_, rho), row in zip(traj, engine):
        rec = thermo_record(model, rho)
        target = 2 * p.lam * p.J * row[0]
        work_dev = max(work_dev, abs(rec.wdot_L - target), abs(rec.wdot_R - target))

    steady = ness(model)
    rec = thermo_record(model, steady.rho)
    exact = ness_closed_form(p)
    ness_dev = {
        "j_s": abs(rec.j_s - exact.j_s),
        "wdot": abs(rec.wdot - exact.wdot),
        "qdot_L": abs(rec.qdot_L - exact.qdot_L),
        "qdot_R": abs(rec.qdot_R - exact.qdot_R),
        "diS_dt": abs(rec.diS_dt - exact.diS_dt),
    }
    passed = max_dev <= limit and max(ness_dev.values()) <= limit and work_dev <= limit
    return OracleReport(times, oracle, engine, max_dev, ness_dev, work_dev, passed)
