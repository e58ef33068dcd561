"""Brute-force dense reference for tiny mode counts.

Everything here is built from an explicit real orthonormal basis

    1,  sqrt(2) cos(k.x),  sqrt(2) sin(k.x)          (k in a half space)

for the order parameter, and the same trigonometric factors times unit
vectors orthogonal to ``k`` for the velocity.  Matrices and load vectors
are summed directly over an oversampled uniform grid (volume-averaged
inner product), so the fast spectral path can be checked entry by entry.
Only meant for ``m_cut <= 3``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import constitutive as cst
from .density import advect_density
from .galerkin import (
    MassOperator,
    PreconditionError,
    convection_term,
    coupling_apply,
    potential_force,
    potential_load,
    stiffness,
    stress_term,
    transport_apply,
)
from .spectral import SpectralLayout, resample
from .state import Params, SimState

MAX_M = 3
CERTIFY_TOL = 1e-10


class OracleError(ValueError):
    """The dense reference cannot be built for this input."""


def _half_space(dim, m):
    out = []
    for k in itertools.product(range(-m, m + 1), repeat=dim):
        nz = [v for v in k if v != 0]
        if nz and nz[0] > 0:
            out.append(np.array(k))
    return out


def _perp(k):
    kh = k / np.linalg.norm(k)
    if len(k) == 2:
        return [np.array([-kh[1], kh[0]])]
    ref = np.eye(3)[int(np.argmin(np.abs(kh)))]
    e1 = np.cross(kh, ref)
    e1 /= np.linalg.norm(e1)
    return [e1, np.cross(kh, e1)]


class RealBasis:
    """Real orthonormal bases of the scalar and solenoidal spaces at ``m``."""

    def __init__(self, layout: SpectralLayout):
        m = layout.m_cut
        if m > MAX_M:
            raise OracleError(f"dense oracle supports m_cut <= {MAX_M}, got {m}")
        self.layout = layout
        self.dim = layout.dim
        self.scale = np.array([2 * np.pi / L for L in layout.extent])
        half = _half_space(self.dim, m)
        self.scalar_modes = [(np.zeros(self.dim, int), 0)]
        for k in half:
            self.scalar_modes += [(k, 1), (k, 2)]
        self.vector_modes = []
        for k in half:
            for e in _perp(k * self.scale):
                self.vector_modes += [(k, 1, e), (k, 2, e)]

    @property
    def n_scalar(self):
        return len(self.scalar_modes)

    @property
    def n_vector(self):
        return len(self.vector_modes)

    def _index(self, k):
        n = self.layout.n_grid
        return tuple(int(v) % n for v in k)

    # -- conversions to and from the fast coefficient arrays -----------
    def scalar_to_real(self, c):
        x = np.empty(self.n_scalar)
        for j, (k, kind) in enumerate(self.scalar_modes):
            v = c[self._index(k)]
            x[j] = v.real if kind == 0 else (np.sqrt(2) * v.real if kind == 1 else -np.sqrt(2) * v.imag)
        return x

    def scalar_from_real(self, x):
        c = np.zeros(self.layout.shape, dtype=complex)
        for j, (k, kind) in enumerate(self.scalar_modes):
            if kind == 0:
                c[self._index(k)] += x[j]
                continue
            v = x[j] / np.sqrt(2) * (1 if kind == 1 else -1j)
            c[self._index(k)] += v
            c[self._index(-k)] += np.conj(v)
        return c

    def vector_to_real(self, a):
        x = np.empty(self.n_vector)
        for j, (k, kind, e) in enumerate(self.vector_modes):
            v = np.dot(e, a[(slice(None),) + self._index(k)])
            x[j] = np.sqrt(2) * v.real if kind == 1 else -np.sqrt(2) * v.imag
        return x

    def vector_from_real(self, x):
        a = np.zeros((self.dim,) + self.layout.shape, dtype=complex)
        for j, (k, kind, e) in enumerate(self.vector_modes):
            v = x[j] / np.sqrt(2) * (1 if kind == 1 else -1j)
            a[(slice(None),) + self._index(k)] += e * v
            a[(slice(None),) + self._index(-k)] += e * np.conj(v)
        return a

    # -- point values on an oversampled grid ---------------------------
    def points(self, n_q):
        coords = [np.arange(n_q) * L / n_q for L in self.layout.extent]
        return np.array(np.meshgrid(*coords, indexing="ij")).reshape(self.dim, -1)

    def _trig(self, k, kind, X):
        kp = k * self.scale
        arg = kp @ X
        if kind == 0:
            return np.ones(X.shape[1]), np.zeros((self.dim, X.shape[1]))
        s2 = np.sqrt(2)
        if kind == 1:
            return s2 * np.cos(arg), -s2 * kp[:, None] * np.sin(arg)
        return s2 * np.sin(arg), s2 * kp[:, None] * np.cos(arg)

    def scalar_values(self, n_q):
        """``(W, dW)``: values ``(N, P)`` and gradients ``(N, dim, P)``."""
        X = self.points(n_q)
        vals = [self._trig(k, kind, X) for k, kind in self.scalar_modes]
        return np.array([v for v, _ in vals]), np.array([g for _, g in vals])

    def vector_values(self, n_q):
        """``(V, G)``: values ``(N, dim, P)`` and ``G[j, i, l] = d_l v_j,i``."""
        X = self.points(n_q)
        V, G = [], []
        for k, kind, e in self.vector_modes:
            f, g = self._trig(k, kind, X)
            V.append(e[:, None] * f)
            G.append(e[:, None, None] * g[None])
        return np.array(V), np.array(G)


@dataclass
class DenseSystem:
    """Explicit matrices and load vectors at one snapshot (real basis).

    ``C`` is the convection load and ``S`` the stress pairing
    ``-(T(Du), Dw_l)``; ``stress_quad_n`` is the grid at which the adaptive
    stress quadrature settled.
    """

    M1: np.ndarray
    M2: np.ndarray
    L2: np.ndarray
    L3: np.ndarray
    L4: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    C: np.ndarray
    S: np.ndarray
    quad_n: int
    stress_quad_n: int
    basis: RealBasis = field(repr=False)


def band_of(layout, f, rel=1e-14):
    """Largest ``|k_i|`` carrying a non-negligible coefficient of grid field ``f``."""
    c = np.abs(np.fft.fftn(f))
    thresh = rel * max(float(np.max(c)), 1e-300)
    kint = np.abs(layout.kint)
    live = c > thresh
    return int(np.max(np.max(kint, axis=0)[live])) if np.any(live) else 0


def min_quad_n(layout, rho):
    """Smallest grid making the polynomial integrands exact for this ``rho``."""
    return band_of(layout, rho) + 8 * layout.m_cut + 2


def _fields(basis, W, dW, V, G, xa, xb):
    u = np.einsum("j,jip->ip", xa, V)
    grad_u = np.einsum("j,jilp->ilp", xa, G)
    phi = xb @ W
    grad_phi = np.einsum("j,jip->ip", xb, dW)
    return u, grad_u, phi, grad_phi


def _stress_pairing(basis, rho_unused, xa, xb, params, n_q):
    W, dW = basis.scalar_values(n_q)
    V, G = basis.vector_values(n_q)
    _, grad_u, phi, _ = _fields(basis, W, dW, V, G, xa, xb)
    Du = 0.5 * (grad_u + np.swapaxes(grad_u, 0, 1))
    T = cst.stress_tensor(Du, phi, params.p, params.law)
    DV = 0.5 * (G + np.swapaxes(G, 1, 2))
    return -np.einsum("ilp,jilp->j", T, DV) / W.shape[1]


def adaptive_stress(basis, xa, xb, params, n_start, tol=1e-12, n_max=512):
    """Stress pairing on refined grids until two successive values agree."""
    prev = _stress_pairing(basis, None, xa, xb, params, n_start)
    n = n_start
    while True:
        n_next = int(np.ceil(1.5 * n / 2)) * 2
        if n_next > n_max:
            raise OracleError(f"stress quadrature did not settle by quad_n={n_max}")
        cur = _stress_pairing(basis, None, xa, xb, params, n_next)
        scale = max(float(np.max(np.abs(cur))), 1e-300)
        if np.max(np.abs(cur - prev)) <= tol * scale:
            return cur, n_next
        prev, n = cur, n_next


def dense_assemble(state: SimState, params: Params, quad_n: int | None = None,
                   stress_tol: float = 1e-12) -> DenseSystem:
    """Assemble every Galerkin object by direct quadrature."""
    lay = state.layout
    basis = RealBasis(lay)
    m = lay.m_cut
    need = min_quad_n(lay, state.rho)
    if quad_n is None:
        quad_n = need + (need % 2)
    elif quad_n < 4 * m + 2:
        raise PreconditionError(f"quad_n={quad_n} too small: need >= {4 * m + 2}")
    elif quad_n < need:
        raise PreconditionError(
            f"quad_n={quad_n} too small for exact quadrature: need >= {need} "
            f"(density band plus 8*m_cut + 2)")
    if not np.all(state.rho > 0):
        raise PreconditionError("dense mass matrices need a strictly positive density")
    rho = resample(lay, state.rho, quad_n).reshape(-1)
    P = rho.size
    W, dW = basis.scalar_values(quad_n)
    V, G = basis.vector_values(quad_n)
    xa = basis.vector_to_real(state.a)
    xb = basis.scalar_to_real(state.b)
    u, grad_u, phi, grad_phi = _fields(basis, W, dW, V, G, xa, xb)

    M1 = np.einsum("jip,lip->jl", V * rho, V) / P
    M2 = (W * rho) @ W.T / P
    L4 = np.einsum("jip,lip->jl", dW, dW) / P
    # (L2)_{j,l} = (rho w_l grad phi, v_j),  (L3)_{j,l} = -(rho v_l . grad phi, w_j)
    vg = np.einsum("jip,ip->jp", V, grad_phi)
    L2 = (vg * rho) @ W.T / P
    L3 = -(W * rho) @ vg.T / P
    psi_p = cst.landau_prime(phi) if params.potential else np.zeros_like(phi)
    F2 = W @ (rho * psi_p) / P
    F1 = vg @ (rho * psi_p) / P
    conv = np.einsum("ilp,lp->ip", grad_u, u)
    C = np.einsum("jip,ip->j", V, rho * conv) / P
    if params.stress:
        S, s_n = adaptive_stress(basis, xa, xb, params, quad_n, stress_tol)
    else:
        S, s_n = np.zeros(basis.n_vector), quad_n

    for name, A in (("M1", M1), ("M2", M2)):
        if not np.allclose(A, A.T, rtol=0, atol=1e-13 * np.max(np.abs(A))):
            raise OracleError(f"{name} is not symmetric")
    off = L4 - np.diag(np.diag(L4))
    if np.max(np.abs(off)) > 1e-12 * max(1.0, np.max(np.abs(L4))):
        raise OracleError("stiffness matrix is not diagonal")
    return DenseSystem(M1, M2, L2, L3, L4, F1, F2, C, S, quad_n, s_n, basis)


def dense_rates(state: SimState, params: Params, quad_n: int | None = None):
    """``(c, da, db)`` in the real basis from dense solves."""
    if params.forcing is not None:
        raise OracleError("the dense oracle does not support body forcing")
    D = dense_assemble(state, params, quad_n)
    try:
        c = sla.solve(D.M2, D.L4 @ D.basis.scalar_to_real(state.b) + D.F2, assume_a="pos")
        rhs_a = -D.C + D.S + D.L2 @ c - D.F1
        da = sla.solve(D.M1, rhs_a, assume_a="pos")
        db = sla.solve(D.M2, D.L3 @ D.basis.vector_to_real(state.a) - D.L4 @ c, assume_a="pos")
    except sla.LinAlgError as exc:
        raise PreconditionError(f"singular dense mass matrix: {exc}") from exc
    return c, da, db


def dense_step(state: SimState, dt: float, params: Params, quad_n: int | None = None) -> SimState:
    """Classical RK4 on ``(a, b)`` with dense solves.

    Stage densities are transported from ``t`` to each stage time with the
    density module, using the stage's own velocity as the end point.
    """
    lay = state.layout
    basis = RealBasis(lay)
    ya = basis.vector_to_real(state.a)
    yb = basis.scalar_to_real(state.b)
    u0 = state.a

    def at(xa, xb, h):
        a = basis.vector_from_real(xa)
        rho = advect_density(lay, state.rho, u0, a, h) if h > 0 else state.rho
        s = state.replace(rho=rho, a=a, b=basis.scalar_from_real(xb), t=state.t + h)
        _, da, db = dense_rates(s, params, quad_n)
        return da, db

    k1 = at(ya, yb, 0.0)
    k2 = at(ya + 0.5 * dt * k1[0], yb + 0.5 * dt * k1[1], 0.5 * dt)
    k3 = at(ya + 0.5 * dt * k2[0], yb + 0.5 * dt * k2[1], 0.5 * dt)
    k4 = at(ya + dt * k3[0], yb + dt * k3[1], dt)
    xa = ya + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    xb = yb + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    a = basis.vector_from_real(xa)
    rho = advect_density(lay, state.rho, u0, a, dt)
    new = state.replace(rho=rho, a=a, b=basis.scalar_from_real(xb), t=state.t + dt)
    c, _, _ = dense_rates(new, params, quad_n)
    return new.replace(c=basis.scalar_from_real(c))


# -- the same objects from the fast path ---------------------------------

def fast_objects(state: SimState, params: Params, basis: RealBasis | None = None) -> dict:
    """Fast-path versions of the dense objects, expressed in the real basis."""
    lay = state.layout
    basis = basis or RealBasis(lay)
    rho = state.rho
    ops = MassOperator(lay, rho, "scalar")
    opv = MassOperator(lay, rho, "vector")
    ns, nv = basis.n_scalar, basis.n_vector
    M1 = np.empty((nv, nv))
    L3 = np.empty((ns, nv))
    for l in range(nv):
        e = np.zeros(nv)
        e[l] = 1.0
        col = basis.vector_from_real(e)
        M1[:, l] = basis.vector_to_real(opv.apply(col))
        L3[:, l] = basis.scalar_to_real(transport_apply(lay, rho, state.b, col))
    M2 = np.empty((ns, ns))
    L2 = np.empty((nv, ns))
    L4 = np.empty((ns, ns))
    for l in range(ns):
        e = np.zeros(ns)
        e[l] = 1.0
        col = basis.scalar_from_real(e)
        M2[:, l] = basis.scalar_to_real(ops.apply(col))
        L2[:, l] = basis.vector_to_real(coupling_apply(lay, rho, state.b, col))
        L4[:, l] = basis.scalar_to_real(stiffness(lay) * col)
    return {
        "M1": M1, "M2": M2, "L2": L2, "L3": L3, "L4": L4,
        "F1": basis.vector_to_real(potential_force(lay, rho, state.b, params)),
        "F2": basis.scalar_to_real(potential_load(lay, rho, state.b, params)),
        "C": -basis.vector_to_real(convection_term(lay, rho, state.a)),
        "S": basis.vector_to_real(stress_term(lay, state.a, state.b, params)),
    }


def dense_objects(system: DenseSystem) -> dict:
    return {k: getattr(system, k) for k in ("M1", "M2", "L2", "L3", "L4", "F1", "F2", "C", "S")}


@dataclass
class Comparison:
    discrepancy: dict
    tol: float = CERTIFY_TOL

    @property
    def worst(self) -> float:
        return max(self.discrepancy.values()) if self.discrepancy else 0.0

    @property
    def ok(self) -> bool:
        return self.worst <= self.tol

    def lines(self):
        for k, v in self.discrepancy.items():
            yield f"{k:>3s}  {v:.3e}  {'ok' if v <= self.tol else 'FAIL'}"


def compare(fast: dict, dense: dict, tol: float = CERTIFY_TOL) -> Comparison:
    """Relative Frobenius discrepancy per object present in both dicts."""
    out = {}
    for k in fast:
        if k not in dense:
            continue
        f = np.asarray(fast[k], dtype=float)
        d = np.asarray(dense[k], dtype=float)
        if f.shape != d.shape:
            raise OracleError(f"{k}: shape {f.shape} vs {d.shape}")
        scale = np.linalg.norm(d)
        diff = np.linalg.norm(f - d)
        out[k] = float(diff / scale) if scale > 0 else float(diff)
    return Comparison(out, tol)


def certify(state: SimState, params: Params, quad_n: int | None = None) -> Comparison:
    system = dense_assemble(state, params, quad_n)
    return compare(fast_objects(state, params, system.basis), dense_objects(system))
