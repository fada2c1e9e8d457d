"""Single-machine infinite-bus model.

State x = (delta, omega, e'_q, e'_d): rotor angle (rad), rotor speed (rad/s)
and the q/d-axis transient voltages (p.u.). Known input u = (T_m, E_fd).
The stator/network algebra reduces to one complex branch: the internal
voltage phasor Psi = (e'_q - j e'_d) e^{j delta} drives the terminal current
I_t = ybar (Psi - e'_qI) toward the infinite bus, and all outputs
(e_R, e_I, i_R, i_I) plus the air-gap torque follow from that chain.

Conventions are taken exactly as the model is stated, including treating
e'_qI as a real scalar on the network real axis. The drift decomposes
exactly as A x + B u + phi(x, u), which the observer designs rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import NonFiniteState, fd_jacobian, rk4_step


@dataclass(frozen=True)
class MachineParams:
    """Machine and reduced-network constants (angles rad, times s, rest p.u.)."""

    omega0: float          # rated rotor speed (rad/s)
    h: float               # inertia constant (s)
    kd: float              # damping factor
    td0_prime: float       # d-axis open-circuit time constant (s)
    tq0_prime: float       # q-axis open-circuit time constant (s)
    xd: float              # d-axis synchronous reactance
    xq: float              # q-axis synchronous reactance
    xd_prime: float        # d-axis transient reactance
    xq_prime: float        # q-axis transient reactance
    line_admittance_re: float
    line_admittance_im: float
    eq_inf: float          # infinite-bus transient voltage e'_qI
    s_b: float             # system base MVA
    s_n: float             # generator base MVA

    def __post_init__(self) -> None:
        for name in ("h", "td0_prime", "tq0_prime", "s_b", "s_n"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"MachineParams.{name} must be > 0")
        if not (self.xd >= self.xd_prime > 0.0):
            raise ValueError("MachineParams requires xd >= xd_prime > 0")
        if not (self.xq >= self.xq_prime > 0.0):
            raise ValueError("MachineParams requires xq >= xq_prime > 0")
        for name in self.__dataclass_fields__:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"MachineParams.{name} must be finite")

    @property
    def line_admittance(self) -> complex:
        return complex(self.line_admittance_re, self.line_admittance_im)


@dataclass(frozen=True)
class MachineState:
    delta: float
    omega: float
    eq_prime: float
    ed_prime: float

    def __post_init__(self) -> None:
        for name in self.__dataclass_fields__:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"MachineState.{name} must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.delta, self.omega, self.eq_prime, self.ed_prime])

    @classmethod
    def from_array(cls, x) -> "MachineState":
        d, w, eq, ed = np.asarray(x, dtype=float)
        return cls(float(d), float(w), float(eq), float(ed))


@dataclass(frozen=True)
class MachineInput:
    tm: float
    efd: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tm) and math.isfinite(self.efd)):
            raise ValueError("MachineInput entries must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.tm, self.efd])


@dataclass(frozen=True)
class AlgebraicBlock:
    """Value object for the stator/network chain evaluated at one state."""

    psi_r: float
    psi_i: float
    i_r: float
    i_i: float
    i_d: float
    i_q: float
    e_d: float
    e_q: float
    t_e: float
    e_r_out: float
    e_i_out: float


def _as_state(x) -> np.ndarray:
    if hasattr(x, "as_array"):
        x = x.as_array()
    return np.asarray(x, dtype=float)


def _as_input(u) -> np.ndarray:
    if hasattr(u, "as_array"):
        u = u.as_array()
    return np.asarray(u, dtype=float)


def _chain(delta: float, eq: float, ed: float, p: MachineParams):
    """Scalar evaluation of the output chain; returns the full tuple."""
    sin_d = math.sin(delta)
    cos_d = math.cos(delta)
    psi_r = ed * sin_d + eq * cos_d
    psi_i = eq * sin_d - ed * cos_d
    g, b = p.line_admittance_re, p.line_admittance_im
    # I_t = ybar * (Psi - e'_qI), expanded into real/imag parts
    dre = psi_r - p.eq_inf
    dim = psi_i
    i_r = g * dre - b * dim
    i_i = g * dim + b * dre
    ratio = p.s_b / p.s_n
    i_q = ratio * (i_i * sin_d + i_r * cos_d)
    i_d = ratio * (i_r * sin_d - i_i * cos_d)
    e_q = eq - p.xd_prime * i_d
    e_d = ed + p.xq_prime * i_q
    t_e = ratio * (e_q * i_q + e_d * i_d)
    e_r = ed * sin_d + e_q * cos_d
    e_i = eq * sin_d - e_d * cos_d
    return psi_r, psi_i, i_r, i_i, i_d, i_q, e_d, e_q, t_e, e_r, e_i


def algebraic_outputs(x, p: MachineParams) -> AlgebraicBlock:
    """Evaluate the full stator/network chain at state x."""
    delta, _, eq, ed = _as_state(x)
    vals = _chain(float(delta), float(eq), float(ed), p)
    if not all(math.isfinite(v) for v in vals):
        raise NonFiniteState("algebraic chain overflowed")
    return AlgebraicBlock(*vals)


def drift(x, u, p: MachineParams) -> np.ndarray:
    """Continuous dynamics x' = f(x, u) of the fourth-order machine."""
    delta, omega, eq, ed = _as_state(x)
    tm, efd = _as_input(u)
    _, _, _, _, i_d, i_q, _, _, t_e, _, _ = _chain(float(delta), float(eq), float(ed), p)
    dw = omega - p.omega0
    out = np.array(
        [
            dw,
            (p.omega0 / (2.0 * p.h)) * (tm - t_e - (p.kd / p.omega0) * dw),
            (efd - eq - (p.xd - p.xd_prime) * i_d) / p.td0_prime,
            (-ed + (p.xq - p.xq_prime) * i_q) / p.tq0_prime,
        ]
    )
    if not np.all(np.isfinite(out)):
        raise NonFiniteState("drift overflowed")
    return out


def decomposition(p: MachineParams) -> tuple[np.ndarray, np.ndarray]:
    """Linear part (A, B) of the exact split f(x, u) = A x + B u + phi(x, u)."""
    a = np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [0.0, -p.kd / (2.0 * p.h), 0.0, 0.0],
            [0.0, 0.0, -1.0 / p.td0_prime, 0.0],
            [0.0, 0.0, 0.0, -1.0 / p.tq0_prime],
        ]
    )
    b = np.array(
        [
            [0.0, 0.0],
            [p.omega0 / (2.0 * p.h), 0.0],
            [0.0, 1.0 / p.td0_prime],
            [0.0, 0.0],
        ]
    )
    return a, b


def phi(x, u, p: MachineParams) -> np.ndarray:
    """Nonlinear remainder of the drift decomposition; first entry is -omega0."""
    delta, _, eq, ed = _as_state(x)
    _, _, _, _, i_d, i_q, _, _, t_e, _, _ = _chain(float(delta), float(eq), float(ed), p)
    out = np.array(
        [
            -p.omega0,
            (p.omega0 / (2.0 * p.h)) * (-t_e + p.kd),
            -((p.xd - p.xd_prime) / p.td0_prime) * i_d,
            ((p.xq - p.xq_prime) / p.tq0_prime) * i_q,
        ]
    )
    if not np.all(np.isfinite(out)):
        raise NonFiniteState("phi overflowed")
    return out


def output_nonlinear(x, p: MachineParams) -> np.ndarray:
    """PMU output vector y = (e_R, e_I, i_R, i_I) at state x."""
    blk = algebraic_outputs(x, p)
    return np.array([blk.e_r_out, blk.e_i_out, blk.i_r, blk.i_i])


def output_matrix(p: MachineParams, x_op) -> np.ndarray:
    """Output Jacobian C at the operating state, by central differences.

    C is evaluated once at the post-contingency operating point and frozen;
    the affine offset that makes the linear map exact there is
    output_offset(p, x_op, C).
    """
    x_op = _as_state(x_op)
    return fd_jacobian(lambda z: output_nonlinear(z, p), x_op, step=1e-6)


def output_offset(p: MachineParams, x_op, c_matrix: np.ndarray) -> np.ndarray:
    """Offset c0 with y(x_op) = C x_op + c0 exactly at the operating point."""
    x_op = _as_state(x_op)
    return output_nonlinear(x_op, p) - np.asarray(c_matrix) @ x_op


def linearized_output(p: MachineParams, x_op) -> tuple[np.ndarray, np.ndarray]:
    """(C, c0) pair of the frozen linear measurement model y = C x + c0."""
    c = output_matrix(p, x_op)
    return c, output_offset(p, x_op, c)


def find_equilibrium(
    p: MachineParams,
    u,
    x_guess,
    *,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> np.ndarray:
    """Solve drift(x, u) = 0 by damped Newton iteration from x_guess."""
    u = _as_input(u)
    x = _as_state(x_guess).copy()
    for _ in range(max_iter):
        r = drift(x, u, p)
        if np.max(np.abs(r)) < tol:
            return x
        jac = fd_jacobian(lambda z: drift(z, u, p), x)
        step = np.linalg.solve(jac, -r)
        lam = 1.0
        base = np.linalg.norm(r)
        while lam > 1e-6:
            cand = x + lam * step
            if np.linalg.norm(drift(cand, u, p)) < base:
                x = cand
                break
            lam *= 0.5
        else:
            x = x + 1e-6 * step
    r = drift(x, u, p)
    if np.max(np.abs(r)) < tol:
        return x
    raise RuntimeError(f"equilibrium search stalled, residual {np.max(np.abs(r)):.3e}")


def simulate_open_loop(p: MachineParams, u, x0, t_end: float, dt: float) -> np.ndarray:
    """Integrate the deterministic machine; rows are states at k*dt."""
    u = _as_input(u)
    x = _as_state(x0).copy()
    steps = int(round(t_end / dt))
    out = np.empty((steps + 1, 4))
    out[0] = x
    field = lambda t, z: drift(z, u, p)
    for k in range(1, steps + 1):
        x = rk4_step(field, x, (k - 1) * dt, dt)
        out[k] = x
    return out


def lipschitz_probe(
    p: MachineParams,
    u,
    center,
    half_widths,
    *,
    n_pairs: int = 10_000,
    seed: int = 0,
) -> float:
    """Monte-Carlo estimate of the Lipschitz ratio of phi over an operating box.

    Samples pairs (x, z) uniformly in the box center +/- half_widths and
    returns max ||phi(x,u) - phi(z,u)|| / ||x - z||. This is a sanity probe
    for the synthesis constants, reported rather than enforced.
    """
    u = _as_input(u)
    center = _as_state(center)
    half = np.asarray(half_widths, dtype=float)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        x = center + half * rng.uniform(-1.0, 1.0, size=4)
        z = center + half * rng.uniform(-1.0, 1.0, size=4)
        dx = np.linalg.norm(x - z)
        if dx < 1e-12:
            continue
        ratio = np.linalg.norm(phi(x, u, p) - phi(z, u, p)) / dx
        worst = max(worst, ratio)
    return worst
