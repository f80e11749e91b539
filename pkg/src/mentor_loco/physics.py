"""Planar (x-z) five-link quadruped with penalty ground contact.

Generalized coordinates are ``[x, z, pitch, q_fh, q_fk, q_rh, q_rk]``: torso
center position, torso pitch (nose up positive) and the four relative joint
angles (front hip, front knee, rear hip, rear knee). With every joint at zero
both legs hang straight down from hips placed on the torso axis at
``+-body_length/2``. A positive knee angle swings the calf forward, so the knee
points backward as on most small quadrupeds.

Dynamics are assembled Lagrange-style from per-link Jacobians and integrated
with semi-implicit Euler at a fixed 1 ms step. The hot loops are compiled with
numba; the functions at the bottom of this module are the public wrappers.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from numba import njit

from .actuator import _actuator
from .errors import ConfigurationError, SimulationDiverged
from .terrain import CourseSpec

GRAVITY = 9.81
DT = 1e-3
NQ = 7
N_CONTACT = 6  # front foot, rear foot, front knee, rear knee, torso front, torso rear


@dataclass(frozen=True)
class Link:
    name: str
    mass: float
    inertia: float
    length: float


@dataclass(frozen=True)
class Joint:
    name: str
    parent: str
    child: str
    offset: float  # attachment point along the parent's axis, m
    lower: float
    upper: float


def _default_links():
    total, torso_frac = 12.0, 0.8
    body_len, seg = 0.37, 0.20
    m_torso = total * torso_frac
    m_seg = total * (1 - torso_frac) / 4
    i_torso = m_torso * (body_len**2 + 0.1**2) / 12.0
    i_seg = m_seg * seg**2 / 12.0
    return (
        Link("torso", m_torso, i_torso, body_len),
        Link("front_thigh", m_seg, i_seg, seg),
        Link("front_calf", m_seg, i_seg, seg),
        Link("rear_thigh", m_seg, i_seg, seg),
        Link("rear_calf", m_seg, i_seg, seg),
    )


def _default_joints():
    return (
        Joint("front_hip", "torso", "front_thigh", 0.185, -1.6, 1.6),
        Joint("front_knee", "front_thigh", "front_calf", 0.20, -0.2, 2.7),
        Joint("rear_hip", "torso", "rear_thigh", -0.185, -1.6, 1.6),
        Joint("rear_knee", "rear_thigh", "rear_calf", 0.20, -0.2, 2.7),
    )


@dataclass(frozen=True)
class RobotModel:
    links: tuple = field(default_factory=_default_links)
    joints: tuple = field(default_factory=_default_joints)
    foot_radius: float = 0.02
    limit_stiffness: float = 500.0
    limit_damping: float = 5.0
    # each sagittal joint stands for a left/right pair of motors
    motors_per_joint: int = 2

    def __post_init__(self):
        links = tuple(l if isinstance(l, Link) else Link(**l) for l in self.links)
        joints = tuple(j if isinstance(j, Joint) else Joint(**j) for j in self.joints)
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "joints", joints)
        self.validate()

    def validate(self):
        names = [l.name for l in self.links]
        expected = ["torso", "front_thigh", "front_calf", "rear_thigh", "rear_calf"]
        if sorted(names) != sorted(expected):
            raise ConfigurationError(f"links must be {expected}, got {names}")
        for l in self.links:
            if not (l.mass > 0 and l.inertia > 0 and l.length > 0):
                raise ConfigurationError(f"link {l.name}: mass, inertia, length must be > 0")
        if len(self.joints) != 4:
            raise ConfigurationError("exactly 4 actuated joints required")
        chain = [(j.parent, j.child) for j in self.joints]
        want = [("torso", "front_thigh"), ("front_thigh", "front_calf"),
                ("torso", "rear_thigh"), ("rear_thigh", "rear_calf")]
        if chain != want:
            raise ConfigurationError(f"joint order/topology must be {want}, got {chain}")
        for j in self.joints:
            if not j.lower < j.upper:
                raise ConfigurationError(f"joint {j.name}: lower limit must be < upper")
        if self.foot_radius < 0:
            raise ConfigurationError("foot_radius must be >= 0")
        if self.motors_per_joint < 1:
            raise ConfigurationError("motors_per_joint must be >= 1")

    def link(self, name: str) -> Link:
        return next(l for l in self.links if l.name == name)

    @property
    def total_mass(self) -> float:
        return sum(l.mass for l in self.links)

    @property
    def joint_limits(self) -> np.ndarray:
        return np.array([[j.lower, j.upper] for j in self.joints])

    def leg_lengths(self, leg: int) -> tuple[float, float]:
        side = ("front", "rear")[leg]
        return self.link(f"{side}_thigh").length, self.link(f"{side}_calf").length

    def pack(self) -> np.ndarray:
        p = np.zeros(30)
        p[0] = self.joints[0].offset
        p[1] = self.joints[2].offset
        p[2], p[3] = self.leg_lengths(0)
        p[4], p[5] = self.leg_lengths(1)
        order = ["torso", "front_thigh", "front_calf", "rear_thigh", "rear_calf"]
        p[6:11] = [self.link(n).mass for n in order]
        p[11:16] = [self.link(n).inertia for n in order]
        p[16] = self.foot_radius
        p[17] = GRAVITY
        p[18:26] = self.joint_limits.ravel()
        p[26] = self.limit_stiffness
        p[27] = self.limit_damping
        p[28] = 0.5 * self.link("torso").length
        p[29] = self.motors_per_joint
        return p

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RobotModel":
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "RobotModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class ContactParams:
    stiffness: float = 1.0e5
    damping: float = 1.0e3
    friction: float = 0.8
    tangential_damping: float = 1.0e3
    enabled: bool = True

    def __post_init__(self):
        if not self.stiffness > 0 or self.damping < 0 or self.friction < 0 \
                or self.tangential_damping < 0:
            raise ConfigurationError(f"invalid contact params {self}")

    def pack(self) -> np.ndarray:
        return np.array([self.stiffness, self.damping, self.friction,
                         self.tangential_damping, 1.0 if self.enabled else 0.0])


@dataclass(frozen=True)
class RobotState:
    q: np.ndarray
    qd: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=np.float64).reshape(NQ)
        qd = np.array(self.qd, dtype=np.float64).reshape(NQ)
        q.flags.writeable = False
        qd.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qd", qd)

    @classmethod
    def make(cls, x=0.0, z=0.32, pitch=0.0, joints=(0, 0, 0, 0), xd=0.0, zd=0.0,
             pitch_rate=0.0, joint_vel=(0, 0, 0, 0)) -> "RobotState":
        return cls(np.r_[x, z, pitch, joints], np.r_[xd, zd, pitch_rate, joint_vel])

    @property
    def x(self) -> float:
        return float(self.q[0])

    @property
    def z(self) -> float:
        return float(self.q[1])

    @property
    def pitch(self) -> float:
        return float(self.q[2])

    @property
    def pitch_rate(self) -> float:
        return float(self.qd[2])

    @property
    def joints(self) -> np.ndarray:
        return self.q[3:]

    @property
    def joint_vel(self) -> np.ndarray:
        return self.qd[3:]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qd)))

    def translated(self, dx: float) -> "RobotState":
        q = self.q.copy()
        q[0] += dx
        return RobotState(q, self.qd)


# ---------------------------------------------------------------------------
# compiled kernels


@njit(cache=True)
def _height(x, edges, heights):
    i = 0
    n = edges.shape[0]
    while i < n and x >= edges[i]:
        i += 1
    return heights[i], i


@njit(cache=True)
def _point(q, qd, leg, hip_off, c1l1, c2l2, J):
    """Position, Jacobian (into J) and Jdot*qd of a point on the torso/leg."""
    ih = 3 + 2 * leg
    ik = ih + 1
    th = q[2]
    a = th + q[ih]
    b = a + q[ik]
    thd = qd[2]
    ad = thd + qd[ih]
    bd = ad + qd[ik]
    ct = math.cos(th)
    st = math.sin(th)
    ca = math.cos(a)
    sa = math.sin(a)
    cb = math.cos(b)
    sb = math.sin(b)
    px = q[0] + hip_off * ct + c1l1 * sa + c2l2 * sb
    pz = q[1] + hip_off * st - c1l1 * ca - c2l2 * cb
    for r in range(2):
        for c in range(NQ):
            J[r, c] = 0.0
    J[0, 0] = 1.0
    J[1, 1] = 1.0
    kx = c2l2 * cb
    kz = c2l2 * sb
    hx = c1l1 * ca + kx
    hz = c1l1 * sa + kz
    J[0, 2] = -hip_off * st + hx
    J[1, 2] = hip_off * ct + hz
    J[0, ih] += hx
    J[1, ih] += hz
    J[0, ik] += kx
    J[1, ik] += kz
    ax = -hip_off * ct * thd * thd - c1l1 * sa * ad * ad - c2l2 * sb * bd * bd
    az = -hip_off * st * thd * thd + c1l1 * ca * ad * ad + c2l2 * cb * bd * bd
    return px, pz, ax, az


@njit(cache=True)
def _link_point(q, qd, P, link, J):
    # link 0 torso, 1/2 front thigh/calf, 3/4 rear thigh/calf (CoM points)
    if link == 0:
        return _point(q, qd, 0, 0.0, 0.0, 0.0, J)
    leg = (link - 1) // 2
    l1 = P[2 + 2 * leg]
    l2 = P[3 + 2 * leg]
    if (link - 1) % 2 == 0:
        return _point(q, qd, leg, P[leg], 0.5 * l1, 0.0, J)
    return _point(q, qd, leg, P[leg], l1, 0.5 * l2, J)


@njit(cache=True)
def _contact_point(q, qd, P, k, J):
    # returns position, radius
    if k < 2:
        px, pz, _, _ = _point(q, qd, k, P[k], P[2 + 2 * k], P[3 + 2 * k], J)
        return px, pz, P[16]
    if k < 4:
        leg = k - 2
        px, pz, _, _ = _point(q, qd, leg, P[leg], P[2 + 2 * leg], 0.0, J)
        return px, pz, 0.0
    sgn = 1.0 if k == 4 else -1.0
    px, pz, _, _ = _point(q, qd, 0, sgn * P[28], 0.0, 0.0, J)
    return px, pz, 0.0


@njit(cache=True)
def _penetration(px, pz, radius, edges, heights):
    """Minimum-translation penetration depth and outward normal."""
    h, seg = _height(px, edges, heights)
    n = edges.shape[0]
    bottom = pz - radius
    pen_v = h - bottom
    best = 0.0
    nx = 0.0
    nz = 1.0
    if pen_v > 0.0:
        best = pen_v
        # sideways exits into a lower neighbouring segment
        if seg < n:
            h_next = heights[seg + 1]
            if h_next <= bottom:
                d = edges[seg] - px + radius
                if d < best:
                    best = d
                    nx = 1.0
                    nz = 0.0
        if seg > 0:
            h_prev = heights[seg - 1]
            if h_prev <= bottom:
                d = px - edges[seg - 1] + radius
                if d < best:
                    best = d
                    nx = -1.0
                    nz = 0.0
        return best, nx, nz
    # beside a wall of a higher neighbour
    if radius > 0.0:
        if seg < n and heights[seg + 1] > pz:
            d = radius - (edges[seg] - px)
            if d > best:
                best = d
                nx = -1.0
                nz = 0.0
        if seg > 0 and heights[seg - 1] > pz:
            d = radius - (px - edges[seg - 1])
            if d > best:
                best = d
                nx = 1.0
                nz = 0.0
    return best, nx, nz


@njit(cache=True)
def _contact_force(pen, nx, nz, vx, vz, C):
    if pen <= 0.0:
        return 0.0, 0.0
    rate = -(vx * nx + vz * nz)
    fn = C[0] * pen + C[1] * rate
    if fn <= 0.0:
        return 0.0, 0.0
    tx = nz
    tz = -nx
    vt = vx * tx + vz * tz
    ft = -C[3] * vt
    lim = C[2] * fn
    if ft > lim:
        ft = lim
    elif ft < -lim:
        ft = -lim
    return fn * nx + ft * tx, fn * nz + ft * tz


@njit(cache=True)
def _mass_and_bias(q, qd, P, M, h):
    J = np.empty((2, NQ))
    for i in range(NQ):
        h[i] = 0.0
        for j in range(NQ):
            M[i, j] = 0.0
    g = P[17]
    for link in range(5):
        m = P[6 + link]
        inertia = P[11 + link]
        px, pz, ax, az = _link_point(q, qd, P, link, J)
        for i in range(NQ):
            ji0 = J[0, i]
            ji1 = J[1, i]
            h[i] += m * (ji0 * ax + ji1 * (az + g))
            for j in range(NQ):
                M[i, j] += m * (ji0 * J[0, j] + ji1 * J[1, j])
        # angular velocity = pitch rate plus the relative angles up the chain
        if link == 0:
            M[2, 2] += inertia
        else:
            ih = 3 + 2 * ((link - 1) // 2)
            cnt = 3 if (link - 1) % 2 == 1 else 2
            for a in range(cnt):
                ia = 2 if a == 0 else ih + a - 1
                for b in range(cnt):
                    ib = 2 if b == 0 else ih + b - 1
                    M[ia, ib] += inertia


@njit(cache=True)
def _joint_torques(q, qd, tau, P, out):
    for j in range(4):
        t = tau[j]
        qj = q[3 + j]
        lo = P[18 + 2 * j]
        hi = P[19 + 2 * j]
        if qj < lo:
            tl = P[26] * (lo - qj) - P[27] * qd[3 + j]
            if tl > 0.0:
                t += tl
        elif qj > hi:
            tl = P[26] * (hi - qj) - P[27] * qd[3 + j]
            if tl < 0.0:
                t += tl
        out[3 + j] = t


@njit(cache=True)
def _step(q, qd, tau, P, C, edges, heights, dt, forces):
    """Semi-implicit Euler with the contact damping taken at the new velocity.

    Spring terms, gravity, Coriolis and joint torques are explicit. The normal
    and (sticking) tangential damping of active contacts are linear in the
    end-of-step velocity and are folded into the system matrix, which keeps
    light feet stable under stiff contact at 1 ms. Contacts whose resulting
    normal force would be adhesive are dropped, and sticking contacts that
    would leave the friction cone switch to sliding; at most a few passes.
    """
    M = np.empty((NQ, NQ))
    h = np.empty(NQ)
    _mass_and_bias(q, qd, P, M, h)
    base = np.zeros(NQ)
    _joint_torques(q, qd, tau, P, base)
    for i in range(NQ):
        base[i] = _mdot(M, qd, i) + dt * (base[i] - h[i])

    Jn = np.zeros((N_CONTACT, NQ))
    Jt = np.zeros((N_CONTACT, NQ))
    spring = np.zeros(N_CONTACT)
    # mode: 0 inactive, 1 sticking, 2 sliding (+), 3 sliding (-)
    mode = np.zeros(N_CONTACT, dtype=np.int64)
    J = np.empty((2, NQ))
    nvec = np.zeros((N_CONTACT, 2))
    for k in range(N_CONTACT):
        forces[k, 0] = 0.0
        forces[k, 1] = 0.0
        if C[4] == 0.0:
            continue
        px, pz, rad = _contact_point(q, qd, P, k, J)
        pen, nx, nz = _penetration(px, pz, rad, edges, heights)
        if pen <= 0.0:
            continue
        vn = 0.0
        vt = 0.0
        for i in range(NQ):
            Jn[k, i] = nx * J[0, i] + nz * J[1, i]
            Jt[k, i] = nz * J[0, i] - nx * J[1, i]
            vn += Jn[k, i] * qd[i]
            vt += Jt[k, i] * qd[i]
        nvec[k, 0] = nx
        nvec[k, 1] = nz
        spring[k] = C[0] * pen
        fn = spring[k] - C[1] * vn
        if fn <= 0.0:
            continue
        ft = -C[3] * vt
        if abs(ft) <= C[2] * fn:
            mode[k] = 1
        elif ft > 0.0:
            mode[k] = 2
        else:
            mode[k] = 3

    qd2 = np.empty(NQ)
    A = np.empty((NQ, NQ))
    rhs = np.empty(NQ)
    fn_k = np.zeros(N_CONTACT)
    ft_k = np.zeros(N_CONTACT)
    for _ in range(4):
        for i in range(NQ):
            rhs[i] = base[i]
            for j in range(NQ):
                A[i, j] = M[i, j]
        for k in range(N_CONTACT):
            if mode[k] == 0:
                continue
            # normal: spring explicit, damping implicit
            for i in range(NQ):
                rhs[i] += dt * Jn[k, i] * spring[k]
                for j in range(NQ):
                    A[i, j] += dt * C[1] * Jn[k, i] * Jn[k, j]
            if mode[k] == 1:
                for i in range(NQ):
                    for j in range(NQ):
                        A[i, j] += dt * C[3] * Jt[k, i] * Jt[k, j]
            else:
                # sliding friction mu*fn with fn = spring - c*Jn qd2, implicit in fn
                sgn = 1.0 if mode[k] == 2 else -1.0
                for i in range(NQ):
                    rhs[i] += dt * sgn * C[2] * Jt[k, i] * spring[k]
                    for j in range(NQ):
                        A[i, j] += dt * sgn * C[2] * C[1] * Jt[k, i] * Jn[k, j]
        _solve_lu(A, rhs, qd2)
        changed = False
        for k in range(N_CONTACT):
            if mode[k] == 0:
                continue
            vn = 0.0
            vt = 0.0
            for i in range(NQ):
                vn += Jn[k, i] * qd2[i]
                vt += Jt[k, i] * qd2[i]
            fn = spring[k] - C[1] * vn
            if fn < 0.0:
                mode[k] = 0
                changed = True
                continue
            lim = C[2] * fn
            if mode[k] == 1:
                ft = -C[3] * vt
                if ft > lim:
                    mode[k] = 2
                    changed = True
                elif ft < -lim:
                    mode[k] = 3
                    changed = True
            else:
                ft = lim if mode[k] == 2 else -lim
            fn_k[k] = fn
            ft_k[k] = ft
        if not changed:
            break

    q2 = np.empty(NQ)
    for i in range(NQ):
        q2[i] = q[i] + dt * qd2[i]
    for k in range(N_CONTACT):
        if mode[k] == 0:
            continue
        nx = nvec[k, 0]
        nz = nvec[k, 1]
        forces[k, 0] = fn_k[k] * nx + ft_k[k] * nz
        forces[k, 1] = fn_k[k] * nz - ft_k[k] * nx
    return q2, qd2


@njit(cache=True)
def _mdot(M, v, i):
    s = 0.0
    for j in range(v.shape[0]):
        s += M[i, j] * v[j]
    return s


@njit(cache=True)
def _solve_lu(A, b, out):
    """Gaussian elimination with partial pivoting (A is small and dense)."""
    n = A.shape[0]
    a = A.copy()
    x = b.copy()
    for c in range(n):
        p = c
        best = abs(a[c, c])
        for r in range(c + 1, n):
            if abs(a[r, c]) > best:
                best = abs(a[r, c])
                p = r
        if p != c:
            for j in range(n):
                tmp = a[c, j]
                a[c, j] = a[p, j]
                a[p, j] = tmp
            tmp = x[c]
            x[c] = x[p]
            x[p] = tmp
        piv = a[c, c]
        for r in range(c + 1, n):
            f = a[r, c] / piv
            if f != 0.0:
                for j in range(c, n):
                    a[r, j] -= f * a[c, j]
                x[r] -= f * x[c]
    for r in range(n - 1, -1, -1):
        s = x[r]
        for j in range(r + 1, n):
            s -= a[r, j] * out[j]
        out[r] = s / a[r, r]


@njit(cache=True)
def _finite(v):
    for i in range(v.shape[0]):
        if not math.isfinite(v[i]):
            return False
    return True


@njit(cache=True)
def _energy(q, qd, P):
    M = np.empty((NQ, NQ))
    h = np.empty(NQ)
    zero = np.zeros(NQ)
    _mass_and_bias(q, zero, P, M, h)
    ke = 0.0
    for i in range(NQ):
        for j in range(NQ):
            ke += 0.5 * qd[i] * M[i, j] * qd[j]
    J = np.empty((2, NQ))
    pe = 0.0
    for link in range(5):
        _, pz, _, _ = _link_point(q, qd, P, link, J)
        pe += P[6 + link] * P[17] * pz
    return ke + pe


@njit(cache=True)
def _com(q, P):
    J = np.empty((2, NQ))
    zero = np.zeros(NQ)
    mx = 0.0
    mz = 0.0
    mt = 0.0
    for link in range(5):
        px, pz, _, _ = _link_point(q, zero, P, link, J)
        m = P[6 + link]
        mx += m * px
        mz += m * pz
        mt += m
    return mx / mt, mz / mt


@njit(cache=True)
def _com_vel(q, qd, P):
    J = np.empty((2, NQ))
    vx = 0.0
    vz = 0.0
    mt = 0.0
    for link in range(5):
        _link_point(q, qd, P, link, J)
        m = P[6 + link]
        for i in range(NQ):
            vx += m * J[0, i] * qd[i]
            vz += m * J[1, i] * qd[i]
        mt += m
    return vx / mt, vz / mt


@njit(cache=True)
def _feet(q, P, out):
    J = np.empty((2, NQ))
    zero = np.zeros(NQ)
    for leg in range(2):
        px, pz, _, _ = _point(q, zero, leg, P[leg], P[2 + 2 * leg], P[3 + 2 * leg], J)
        out[leg, 0] = px
        out[leg, 1] = pz


@njit(cache=True)
def _control_step(q, qd, q_des, gains, motor, n_repeat, P, C, edges, heights, dt,
                  tau_mean, foot_force, torso_force_max):
    """PD -> actuator -> physics, repeated ``n_repeat`` times.

    ``tau_mean`` receives the per-motor torque averaged over the repeats; the
    joint sees ``motors_per_joint`` times that.

    Returns (q, qd, status) with status = -1 on success or the index of the
    sub-step that produced a non-finite state.
    """
    forces = np.zeros((N_CONTACT, 2))
    tau = np.empty(4)
    for j in range(4):
        tau_mean[j] = 0.0
    torso_force_max[0] = 0.0
    for s in range(n_repeat):
        for j in range(4):
            cmd = gains[0] * (q_des[j] - q[3 + j]) - gains[1] * qd[3 + j]
            t = _actuator(cmd, qd[3 + j], 0.0, 10, 1e-4, motor[0], motor[1], motor[2])
            tau_mean[j] += t / n_repeat
            tau[j] = P[29] * t
        q, qd = _step(q, qd, tau, P, C, edges, heights, dt, forces)
        if not (_finite(q) and _finite(qd)):
            return q, qd, s
        for k in range(4, N_CONTACT):
            f = math.hypot(forces[k, 0], forces[k, 1])
            if f > torso_force_max[0]:
                torso_force_max[0] = f
    for leg in range(2):
        foot_force[leg] = math.hypot(forces[leg, 0], forces[leg, 1])
    return q, qd, -1


# ---------------------------------------------------------------------------
# public API

DEFAULT_MODEL = RobotModel()
DEFAULT_CONTACT = ContactParams()


class Terrain:
    """Packed course profile for the compiled kernels."""

    __slots__ = ("course", "edges", "heights")

    def __init__(self, course: Optional[CourseSpec]):
        self.course = course
        if course is None:
            self.edges = np.zeros(0)
            self.heights = np.zeros(1)
        else:
            self.edges, self.heights = course.profile()


def _terrain(terrain) -> Terrain:
    return terrain if isinstance(terrain, Terrain) else Terrain(terrain)


def step(
    state: RobotState,
    joint_torques,
    terrain: Optional[CourseSpec],
    dt: float = DT,
    model: RobotModel = DEFAULT_MODEL,
    contact: ContactParams = DEFAULT_CONTACT,
    step_index: int = 0,
) -> RobotState:
    """Advance one semi-implicit Euler step. ``terrain=None`` is flat ground."""
    if abs(dt - DT) > 1e-12:
        raise ValueError(f"physics runs at a fixed dt of {DT} s, got {dt}")
    tau = np.asarray(joint_torques, dtype=np.float64).reshape(4)
    if not (state.is_finite() and np.all(np.isfinite(tau))):
        raise SimulationDiverged(step_index)
    t = _terrain(terrain)
    forces = np.zeros((N_CONTACT, 2))
    q, qd = _step(np.array(state.q), np.array(state.qd), tau, model.pack(), contact.pack(),
                  t.edges, t.heights, dt, forces)
    nxt = RobotState(q, qd)
    if not nxt.is_finite():
        raise SimulationDiverged(step_index)
    return nxt


def contact_force(foot_pos, foot_vel, terrain: Optional[CourseSpec],
                  params: ContactParams = DEFAULT_CONTACT, radius: float = 0.0):
    """Penalty force (fx, fz) on a contact point of the given radius."""
    t = _terrain(terrain)
    pen, nx, nz = _penetration(float(foot_pos[0]), float(foot_pos[1]), float(radius),
                               t.edges, t.heights)
    fx, fz = _contact_force(pen, nx, nz, float(foot_vel[0]), float(foot_vel[1]), params.pack())
    return float(fx), float(fz)


def mechanical_energy(state: RobotState, model: RobotModel = DEFAULT_MODEL) -> float:
    """Kinetic plus gravitational potential energy (datum z = 0)."""
    return float(_energy(np.array(state.q), np.array(state.qd), model.pack()))


def foot_positions(state: RobotState, model: RobotModel = DEFAULT_MODEL) -> np.ndarray:
    """Front and rear foot centers as a (2, 2) array of (x, z)."""
    out = np.empty((2, 2))
    _feet(np.array(state.q), model.pack(), out)
    return out


def center_of_mass(state: RobotState, model: RobotModel = DEFAULT_MODEL) -> np.ndarray:
    return np.array(_com(np.array(state.q), model.pack()))


def center_of_mass_velocity(state: RobotState, model: RobotModel = DEFAULT_MODEL) -> np.ndarray:
    return np.array(_com_vel(np.array(state.q), np.array(state.qd), model.pack()))


def mass_matrix(state: RobotState, model: RobotModel = DEFAULT_MODEL) -> np.ndarray:
    M = np.empty((NQ, NQ))
    h = np.empty(NQ)
    _mass_and_bias(np.array(state.q), np.array(state.qd), model.pack(), M, h)
    return M


def simulate(state: RobotState, torques, terrain, n_steps: int,
             model: RobotModel = DEFAULT_MODEL, contact: ContactParams = DEFAULT_CONTACT):
    """Run ``n_steps`` with constant joint torques; returns the state trajectory."""
    t = _terrain(terrain)
    P = model.pack()
    C = contact.pack()
    tau = np.asarray(torques, dtype=np.float64).reshape(4)
    q, qd = np.array(state.q), np.array(state.qd)
    forces = np.zeros((N_CONTACT, 2))
    out = [state]
    for i in range(n_steps):
        q, qd = _step(q, qd, tau, P, C, t.edges, t.heights, DT, forces)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qd))):
            raise SimulationDiverged(i)
        out.append(RobotState(q, qd))
    return out
