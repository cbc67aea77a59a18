"""Poisson kernel construction for elliptic systems in the half-space.

Symbol route.  For a fixed tangential frequency xi' the vertical profile
v(t) = Khat(xi', t) f of a null solution satisfies the matrix ODE

    M2 v'' + i M1(xi') v' - M0(xi') v = 0,

whose decaying-at-infinity solution with v(0) = I is assembled from the
upper-half-plane characteristic roots as

    Khat(xi', t) = A(xi', t) A(xi', 0)^{-1},
    A(xi', t)    = (2 pi i)^{-1} oint exp(i tau t) sym(xi', tau)^{-1} dtau,

the contour enclosing exactly the roots with Im tau > 0.  The contour is
one circle (or a small union of circles) evaluated by the trapezoid rule,
which converges geometrically and is insensitive to root multiplicity.
Two exact identities make the evaluation cheap and stable everywhere:

* homogeneity: Khat(xi', t) = Khat(omega, t |xi'|) for omega = xi'/|xi'|,
  so only unit directions need contours;
* the semigroup law Khat(., s0 + s1) = Khat(., s0) Khat(., s1), used to
  reach large s by repeated squaring of a directly computed small-s value
  (a direct quadrature at large s would lose all accuracy to cancellation).

Fourier conventions: fhat(xi) = int f exp(-i x.xi) dx with inverse carrying
(2 pi)^{1-n}; then Phat(0) = I expresses the unit-mass normalisation and
the spatial kernel is synthesised with :func:`halfspace.grids.grid_ifft`.
The spatial synthesis runs on an `oversample`-times finer frequency grid
than the delivered table so that periodisation images land far outside the
delivered window; the delivered grid is the central crop.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, interpolate

from .errors import (ContourFailure, ImproperSplit, InsufficientDecay,
                     OutOfDomain, RealAxisRoot, SingularBoundaryMatrix)
from .grids import Grid, grid_ifft
from .report import VerificationReport, make_metric
from .systems import (EllipticSystem, characteristic_roots, real_axis_tolerance,
                      symbol_pencil)

__all__ = [
    "PoissonSymbolTable",
    "PoissonKernelGrid",
    "poisson_symbol_at",
    "poisson_symbol_dt_at",
    "symbol_batch",
    "kernel_derivative_spectrum",
    "synthesize_kernel_levels",
    "build_poisson_kernel",
    "kernel_at",
    "interior_pde_residual",
    "verify_kernel_properties",
]

QUAD_NODES = 256          # trapezoid nodes per contour circle
S_DIRECT = 5.0            # largest rescaled height evaluated without squaring
_EXP_BUDGET = 14.0        # cap on log of contour-integrand growth


def _stacked_inv(a: np.ndarray) -> np.ndarray:
    """Inverse of a (..., M, M) stack; closed-form adjugates for M <= 3
    (an order of magnitude faster than the LAPACK gufunc on tiny blocks)."""
    m = a.shape[-1]
    if m == 1:
        return 1.0 / a
    if m == 2:
        det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
        out = np.empty_like(a)
        out[..., 0, 0] = a[..., 1, 1]
        out[..., 1, 1] = a[..., 0, 0]
        out[..., 0, 1] = -a[..., 0, 1]
        out[..., 1, 0] = -a[..., 1, 0]
        return out / det[..., None, None]
    if m == 3:
        c00 = a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1]
        c01 = a[..., 1, 2] * a[..., 2, 0] - a[..., 1, 0] * a[..., 2, 2]
        c02 = a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0]
        det = (a[..., 0, 0] * c00 + a[..., 0, 1] * c01 + a[..., 0, 2] * c02)
        out = np.empty_like(a)
        out[..., 0, 0] = c00
        out[..., 1, 0] = c01
        out[..., 2, 0] = c02
        out[..., 0, 1] = a[..., 0, 2] * a[..., 2, 1] - a[..., 0, 1] * a[..., 2, 2]
        out[..., 1, 1] = a[..., 0, 0] * a[..., 2, 2] - a[..., 0, 2] * a[..., 2, 0]
        out[..., 2, 1] = a[..., 0, 1] * a[..., 2, 0] - a[..., 0, 0] * a[..., 2, 1]
        out[..., 0, 2] = a[..., 0, 1] * a[..., 1, 2] - a[..., 0, 2] * a[..., 1, 1]
        out[..., 1, 2] = a[..., 0, 2] * a[..., 1, 0] - a[..., 0, 0] * a[..., 1, 2]
        out[..., 2, 2] = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
        return out / det[..., None, None]
    return np.linalg.inv(a)


def _contour_circles(upper: np.ndarray, lower: np.ndarray) -> list:
    """Circles enclosing all upper roots and excluding all lower roots."""
    c = upper.mean()
    dup = float(np.abs(upper - c).max())
    dlow = float(np.abs(lower - c).min())
    radius = 1.5 * float(np.abs(upper).max())
    if dup <= 0.85 * radius and 1.18 * radius <= dlow:
        return [(c, radius)]
    scale = float(np.abs(upper).max())
    dup_eff = max(dup, 1e-6 * scale)
    radius = np.sqrt(dup_eff * dlow)
    if dup <= 0.85 * radius and 1.18 * radius <= dlow:
        return [(c, radius)]
    # clustered fallback: one circle per group of nearby upper roots
    thr = 0.25 * dlow
    groups: list[list[int]] = []
    for j, tau in enumerate(upper):
        for g in groups:
            if any(abs(tau - upper[i]) <= thr for i in g):
                g.append(j)
                break
        else:
            groups.append([j])
    circles = []
    for g in groups:
        pts = upper[g]
        ck = pts.mean()
        spread = float(np.abs(pts - ck).max())
        others = np.concatenate([np.delete(upper, g), lower])
        gap = float(np.abs(others - ck).min()) if len(others) else 10 * max(spread, scale)
        rk = np.sqrt(max(spread, 1e-3 * gap) * gap)
        if not (spread <= 0.85 * rk and 1.18 * rk <= gap):
            raise ContourFailure(
                "cannot separate root cluster at %s (spread %.3g, gap %.3g)"
                % (ck, spread, gap))
        circles.append((ck, rk))
    return circles


class _DirectionEvaluator:
    """Contour-quadrature evaluator of s -> Khat(omega, s) for unit omega."""

    def __init__(self, system: EllipticSystem, omega, quad_nodes: int = QUAD_NODES):
        self.M = system.M
        pencil = symbol_pencil(system, omega)
        split = characteristic_roots(pencil)
        taus, ws = [], []
        for (c, radius) in _contour_circles(split.upper, split.lower):
            theta = 2.0 * np.pi * np.arange(quad_nodes) / quad_nodes
            ring = np.exp(1j * theta)
            taus.append(c + radius * ring)
            ws.append((radius / quad_nodes) * ring)
        self.taus = np.concatenate(taus)
        self.ws = np.concatenate(ws)
        lhat = (pencil.M2[None] * self.taus[:, None, None] ** 2
                + pencil.M1[None] * self.taus[:, None, None]
                + pencil.M0[None])
        self.inv = np.linalg.inv(lhat)
        a0 = np.einsum("q,qij->ij", self.ws, self.inv)
        if not np.all(np.isfinite(a0)) or np.linalg.cond(a0) > 1e12:
            raise SingularBoundaryMatrix(
                "boundary matching matrix singular at omega=%s" % (omega,))
        self.a0inv = np.linalg.inv(a0)
        growth = max(0.0, -float(self.taus.imag.min()))
        self.s_direct = min(S_DIRECT, _EXP_BUDGET / max(growth, 1e-3))

    def _direct(self, s: np.ndarray, want_dt: bool):
        ews = np.exp(1j * np.outer(s, self.taus)) * self.ws[None, :]
        a = np.einsum("bq,qij->bij", ews, self.inv)
        k = a @ self.a0inv
        if not want_dt:
            return k, None
        da = np.einsum("bq,q,qij->bij", ews, 1j * self.taus, self.inv)
        return k, da @ self.a0inv

    def __call__(self, s: np.ndarray, want_dt: bool = False):
        s = np.asarray(s, dtype=float)
        squarings = np.zeros(s.shape, dtype=int)
        big = s > self.s_direct
        squarings[big] = np.ceil(np.log2(s[big] / self.s_direct)).astype(int)
        seeds = s / 2.0 ** squarings
        k, dk = self._direct(seeds, want_dt)
        for round_ in range(1, int(squarings.max()) + 1 if len(s) else 1):
            m = squarings >= round_
            if not m.any():
                break
            if want_dt:
                dk[m] = 0.5 * (dk[m] @ k[m] + k[m] @ dk[m])
            k[m] = k[m] @ k[m]
        return (k, dk) if want_dt else k


_EVAL_CACHE: dict = {}


def _direction_evaluator(system: EllipticSystem, omega,
                         quad_nodes: int = QUAD_NODES) -> _DirectionEvaluator:
    key = (system.key(), tuple(np.round(np.asarray(omega, float), 12)), quad_nodes)
    ev = _EVAL_CACHE.get(key)
    if ev is None:
        ev = _DirectionEvaluator(system, omega, quad_nodes)
        if len(_EVAL_CACHE) > 256:
            _EVAL_CACHE.clear()
        _EVAL_CACHE[key] = ev
    return ev


def poisson_symbol_at(system: EllipticSystem, xi_prime, t: float) -> np.ndarray:
    """Khat(xi', t) through the generic contour construction.

    Returns the identity for t = 0 or xi' = 0.
    """
    xi_prime = np.atleast_1d(np.asarray(xi_prime, dtype=float))
    r = float(np.linalg.norm(xi_prime))
    if t < 0:
        raise ValueError("t must be nonnegative")
    if r == 0.0 or t == 0.0:
        return np.eye(system.M, dtype=complex)
    ev = _direction_evaluator(system, xi_prime / r)
    return ev(np.array([t * r]))[0]


def poisson_symbol_dt_at(system: EllipticSystem, xi_prime, t: float):
    """Pair (Khat, d/dt Khat) at (xi', t); derivative is exact in t."""
    xi_prime = np.atleast_1d(np.asarray(xi_prime, dtype=float))
    r = float(np.linalg.norm(xi_prime))
    if r == 0.0:
        return np.eye(system.M, dtype=complex), np.zeros((system.M,) * 2, complex)
    ev = _direction_evaluator(system, xi_prime / r)
    k, dk = ev(np.array([t * r]), want_dt=True)
    return k[0], dk[0] * r


def _scalar_batch(system: EllipticSystem, xi: np.ndarray, t: float,
                  want_dt: bool):
    """Closed residue form for M = 1: Khat = exp(i tau_plus(xi) t).

    The single upper root of the scalar quadratic is always simple, so the
    contour integral collapses to one residue; this is the vectorised limit
    of the generic construction, cross-checked against it in the tests.
    """
    a = system.coeffs[0, 0]
    d = system.n - 1
    ann = a[-1, -1]
    lin = a[:d, -1] + a[-1, :d]
    b = xi @ lin
    c0 = np.einsum("br,rs,bs->b", xi, a[:d, :d], xi)
    disc = np.sqrt(b * b - 4.0 * ann * c0)
    # cancellation-free quadratic roots: qq keeps the large magnitude
    sign = np.where((np.conj(b) * disc).real >= 0.0, 1.0, -1.0)
    qq = -0.5 * (b + sign * disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = qq / ann
        r2 = np.where(qq != 0, c0 / np.where(qq != 0, qq, 1.0), 0.0)
    tau = np.where(r1.imag > 0.0, r1, r2)
    other = np.where(r1.imag > 0.0, r2, r1)
    norms = np.linalg.norm(xi, axis=1)
    nz = norms > 0.0
    tol = real_axis_tolerance(norms[nz])
    if np.any(tau[nz].imag < tol):
        raise RealAxisRoot("scalar characteristic root too close to real axis")
    if np.any(other[nz].imag > -tol):
        raise ImproperSplit("scalar roots do not split across the real axis")
    k = np.ones(len(xi), dtype=complex)
    k[nz] = np.exp(1j * tau[nz] * t)
    out = k[:, None, None]
    if not want_dt:
        return out, None
    dk = np.zeros(len(xi), dtype=complex)
    dk[nz] = 1j * tau[nz] * k[nz]
    return out, dk[:, None, None]


def _collinear_batch(system: EllipticSystem, xi: np.ndarray, t: float,
                     want_dt: bool, quad_nodes: int):
    """n = 2: all frequencies lie on a line, two direction profiles suffice."""
    M = system.M
    k = np.tile(np.eye(M, dtype=complex), (len(xi), 1, 1))
    dk = np.zeros_like(k) if want_dt else None
    x = xi[:, 0]
    for sign in (1.0, -1.0):
        m = sign * x > 0.0
        if not m.any():
            continue
        ev = _direction_evaluator(system, [sign], quad_nodes)
        got = ev(np.abs(x[m]) * t, want_dt=want_dt)
        if want_dt:
            k[m] = got[0]
            dk[m] = got[1] * np.abs(x[m])[:, None, None]
        else:
            k[m] = got
    return k, dk


def _contour_stacks(system: EllipticSystem, omega: np.ndarray,
                    quad_nodes: int) -> dict:
    """Per-direction contour data for a stack of unit directions (B, d):
    quadrature nodes, weights, inverse symbols, boundary matrices."""
    M = system.M
    d = system.n - 1
    a = system.coeffs
    m2 = a[:, :, -1, -1]
    g1 = a[:, :, :d, -1] + a[:, :, -1, :d]
    g0 = a[:, :, :d, :d]
    theta = 2.0 * np.pi * np.arange(quad_nodes) / quad_nodes
    ring = np.exp(1j * theta)

    m1b = np.einsum("xyr,br->bxy", g1, omega)
    m0b = np.einsum("xyrs,br,bs->bxy", g0, omega, omega)
    comp = np.zeros((len(omega), 2 * M, 2 * M), dtype=complex)
    comp[:, :M, M:] = np.eye(M)
    m2inv = np.linalg.inv(m2)
    comp[:, M:, :M] = -np.einsum("xy,byz->bxz", m2inv, m0b)
    comp[:, M:, M:] = -np.einsum("xy,byz->bxz", m2inv, m1b)
    roots = np.linalg.eigvals(comp)
    tol = real_axis_tolerance(1.0)
    if np.any(np.abs(roots.imag) < tol):
        raise RealAxisRoot("characteristic root too close to the real axis")
    if np.any((roots.imag > 0.0).sum(axis=1) != M):
        raise ImproperSplit("root split differs from M/M in batch")
    order = np.argsort(-roots.imag, axis=1)
    sorted_roots = np.take_along_axis(roots, order, axis=1)
    upper = sorted_roots[:, :M]
    lower = sorted_roots[:, M:]
    centers = upper.mean(axis=1)
    dup = np.abs(upper - centers[:, None]).max(axis=1)
    dlow = np.abs(lower - centers[:, None]).min(axis=1)
    radius = 1.5 * np.abs(upper).max(axis=1)
    ok = (dup <= 0.85 * radius) & (1.18 * radius <= dlow)
    alt = np.sqrt(np.maximum(dup, 1e-6 * np.abs(upper).max(axis=1)) * dlow)
    radius = np.where(ok, radius, alt)
    ok2 = (dup <= 0.85 * radius) & (1.18 * radius <= dlow)

    taus = centers[:, None] + radius[:, None] * ring[None, :]
    ws = (radius[:, None] / quad_nodes) * ring[None, :]
    lhat = (m2[None, None] * taus[:, :, None, None] ** 2
            + m1b[:, None] * taus[:, :, None, None]
            + m0b[:, None])
    inv = _stacked_inv(lhat)
    a0 = np.einsum("bq,bqij->bij", ws, inv)
    a0inv = _stacked_inv(a0)
    growth = np.maximum(0.0, -(taus.imag.min(axis=1)))
    s_direct = np.minimum(S_DIRECT, _EXP_BUDGET / np.maximum(growth, 1e-3))
    return {"taus": taus, "ws": ws, "inv": inv, "a0inv": a0inv,
            "s_direct": s_direct, "omega": omega,
            "hard": np.flatnonzero(~ok2), "quad_nodes": quad_nodes}


def _eval_from_stacks(system: EllipticSystem, stacks: dict, s: np.ndarray,
                      want_dt: bool):
    """Khat(omega_b, s_b) (and d/ds) from prepared contour stacks."""
    taus, ws, inv, a0inv = (stacks["taus"], stacks["ws"], stacks["inv"],
                            stacks["a0inv"])
    squarings = np.zeros(len(s), dtype=int)
    big = s > stacks["s_direct"]
    squarings[big] = np.ceil(
        np.log2(s[big] / stacks["s_direct"][big])).astype(int)
    seeds = s / 2.0 ** squarings
    ews = np.exp(1j * taus * seeds[:, None]) * ws
    kq = np.einsum("bq,bqij->bij", ews, inv) @ a0inv
    dkq = None
    if want_dt:
        dkq = np.einsum("bq,bq,bqij->bij", ews, 1j * taus, inv) @ a0inv
    for round_ in range(1, int(squarings.max(initial=0)) + 1):
        mm = squarings >= round_
        if not mm.any():
            break
        if want_dt:
            dkq[mm] = 0.5 * (dkq[mm] @ kq[mm] + kq[mm] @ dkq[mm])
        kq[mm] = kq[mm] @ kq[mm]
    # per-node fallback where the vectorised contour failed to separate
    for j in stacks["hard"]:
        ev = _DirectionEvaluator(system, stacks["omega"][j],
                                 stacks["quad_nodes"])
        if want_dt:
            kj, dkj = ev(np.array([s[j]]), want_dt=True)
            kq[j], dkq[j] = kj[0], dkj[0]
        else:
            kq[j] = ev(np.array([s[j]]))[0]
    return kq, dkq


def _general_batch(system: EllipticSystem, xi: np.ndarray, t: float,
                   want_dt: bool, quad_nodes: int, chunk: int = 8192):
    """Per-node contours, vectorised in chunks; any n and M."""
    M = system.M
    out_k = np.tile(np.eye(M, dtype=complex), (len(xi), 1, 1))
    out_dk = np.zeros_like(out_k) if want_dt else None
    norms = np.linalg.norm(xi, axis=1)
    nz_idx = np.flatnonzero(norms > 0.0)
    for start in range(0, len(nz_idx), chunk):
        idx = nz_idx[start:start + chunk]
        stacks = _contour_stacks(system, xi[idx] / norms[idx, None], quad_nodes)
        kq, dkq = _eval_from_stacks(system, stacks, t * norms[idx], want_dt)
        out_k[idx] = kq
        if want_dt:
            out_dk[idx] = dkq * norms[idx, None, None]
    return out_k, out_dk


class PreparedSymbol:
    """Reusable symbol evaluator for a fixed frequency set.

    Multi-level solves hit the same frequencies once per height; preparing
    the per-node contour data once turns each level into an exponential
    plus a contraction.  Falls back to per-call evaluation when the stacks
    would not fit the memory budget.
    """

    def __init__(self, system: EllipticSystem, xi_nodes: np.ndarray,
                 quad_nodes: int = QUAD_NODES, memory_cap: float = 1e9):
        self.system = system
        self.xi = np.asarray(xi_nodes, dtype=float)
        self.quad_nodes = quad_nodes
        self.norms = np.linalg.norm(self.xi, axis=1)
        self.nz = np.flatnonzero(self.norms > 0.0)
        self.stacks = None
        self._results: dict = {}
        if system.M > 1 and system.n > 2:
            need = len(self.nz) * quad_nodes * system.M ** 2 * 16.0
            if need <= memory_cap:
                self.stacks = _contour_stacks(
                    system, self.xi[self.nz] / self.norms[self.nz, None],
                    quad_nodes)

    def at(self, t: float, want_dt: bool = False):
        if self.stacks is None:
            return symbol_batch(self.system, self.xi, t, want_dt=want_dt,
                                quad_nodes=self.quad_nodes)
        key = (float(t), want_dt)
        hit = self._results.get(key)
        if hit is not None:
            return hit
        M = self.system.M
        k = np.tile(np.eye(M, dtype=complex), (len(self.xi), 1, 1))
        dk = np.zeros_like(k) if want_dt else None
        kq, dkq = _eval_from_stacks(self.system, self.stacks,
                                    t * self.norms[self.nz], want_dt)
        k[self.nz] = kq
        if want_dt:
            dk[self.nz] = dkq * self.norms[self.nz, None, None]
            out = (k, dk)
        else:
            out = k
        if len(self._results) < 256:
            self._results[key] = out
        return out


_PREPARED_CACHE: dict = {}


def prepared_symbol(system: EllipticSystem, xi_nodes: np.ndarray,
                    quad_nodes: int = QUAD_NODES) -> PreparedSymbol:
    """Cached PreparedSymbol per (system, frequency set): repeated solves
    on one grid reuse the contour data and the per-height symbols."""
    xi_nodes = np.ascontiguousarray(xi_nodes, dtype=float)
    key = (system.key(), quad_nodes, hash(xi_nodes.tobytes()))
    prep = _PREPARED_CACHE.get(key)
    if prep is None:
        prep = PreparedSymbol(system, xi_nodes, quad_nodes)
        if len(_PREPARED_CACHE) > 16:
            _PREPARED_CACHE.clear()
        _PREPARED_CACHE[key] = prep
    return prep


def symbol_batch(system: EllipticSystem, xi_nodes: np.ndarray, t: float,
                 want_dt: bool = False, quad_nodes: int = QUAD_NODES):
    """Khat(xi', t) for a stack of frequencies (B, n-1); t a scalar >= 0.

    Returns (B, M, M), or a pair with the exact t-derivative when
    ``want_dt`` is set.
    """
    xi_nodes = np.asarray(xi_nodes, dtype=float)
    if xi_nodes.ndim != 2 or xi_nodes.shape[1] != system.n - 1:
        raise ValueError("xi_nodes must have shape (B, n-1)")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if system.M == 1:
        k, dk = _scalar_batch(system, xi_nodes, t, want_dt)
    elif system.n == 2:
        k, dk = _collinear_batch(system, xi_nodes, t, want_dt, quad_nodes)
    else:
        k, dk = _general_batch(system, xi_nodes, t, want_dt, quad_nodes)
    return (k, dk) if want_dt else k


def kernel_derivative_spectrum(system: EllipticSystem, xi_nodes: np.ndarray,
                               t: float, alpha) -> np.ndarray:
    """Spectrum of d^alpha K(., t): tangential factors (i xi)^alpha',
    vertical derivatives analytic from the symbol (order <= 2).

    ``alpha`` is a length-n multi-index, the last entry vertical.
    """
    alpha = tuple(int(x) for x in alpha)
    if len(alpha) != system.n:
        raise ValueError("alpha must have length n")
    an = alpha[-1]
    if an > 2:
        raise ValueError("vertical derivative order limited to 2")
    if an == 0:
        base = symbol_batch(system, xi_nodes, t)
    else:
        k, dk = symbol_batch(system, xi_nodes, t, want_dt=True)
        if an == 1:
            base = dk
        else:
            # from the vertical ODE: M2 K'' = M0 K - i M1 K'
            d = system.n - 1
            a = system.coeffs
            m2inv = np.linalg.inv(a[:, :, -1, -1])
            g1 = a[:, :, :d, -1] + a[:, :, -1, :d]
            m1b = np.einsum("xyr,br->bxy", g1, xi_nodes)
            m0b = np.einsum("xyrs,br,bs->bxy", a[:, :, :d, :d],
                            xi_nodes, xi_nodes)
            rhs = np.einsum("bxy,byz->bxz", m0b, k) \
                - 1j * np.einsum("bxy,byz->bxz", m1b, dk)
            base = np.einsum("xy,byz->bxz", m2inv, rhs)
    factor = np.ones(len(xi_nodes), dtype=complex)
    for r in range(system.n - 1):
        if alpha[r]:
            factor = factor * (1j * xi_nodes[:, r]) ** alpha[r]
    return base * factor[:, None, None]


def synthesize_kernel_levels(system: EllipticSystem, grid: Grid, heights,
                             alpha=None, chunk: int = 1 << 16) -> np.ndarray:
    """Sample d^alpha K(., t) on ``grid`` for each height t.

    Returns an array of shape (len(heights), *grid.shape, M, M), natural
    spatial order.  alpha = None means the kernel itself.
    """
    if alpha is None:
        alpha = (0,) * system.n
    nodes = grid.freq_nodes_fftorder()
    M = system.M
    out = np.empty((len(heights),) + grid.shape + (M, M), dtype=complex)
    for li, t in enumerate(heights):
        spec = np.empty((len(nodes), M, M), dtype=complex)
        for start in range(0, len(nodes), chunk):
            sl = slice(start, start + chunk)
            spec[sl] = kernel_derivative_spectrum(system, nodes[sl], float(t), alpha)
        spec = spec.reshape(grid.shape + (M, M))
        out[li] = grid_ifft(spec, grid)
    return out


# ---------------------------------------------------------------------------
# table and grid containers


@dataclass
class PoissonSymbolTable:
    """Phat = Khat(., 1) tabulated on a uniform frequency grid."""

    system: EllipticSystem
    freq_extent: float
    N: int
    values: np.ndarray        # (*freq_shape, M, M), natural order
    decay_rate: float

    def freq_axis(self) -> np.ndarray:
        step = 2.0 * self.freq_extent / self.N
        return (np.arange(self.N) - self.N // 2) * step


@dataclass
class PoissonKernelGrid:
    """Spatial samples of the Poisson kernel P on [-R, R)^{n-1}."""

    system: EllipticSystem
    grid: Grid
    values: np.ndarray        # (*shape, M, M), natural order
    tail_constant: float
    normalization_residual: float
    normalization_residual_full: float
    meta: dict = field(default_factory=dict)
    _interp: dict = field(default_factory=dict, repr=False)

    def entry_interpolator(self, i: int, j: int, part: str):
        key = (i, j, part)
        fn = self._interp.get(key)
        if fn is None:
            axes = (self.grid.axis(),) * self.grid.d
            vals = self.values[..., i, j]
            vals = vals.real if part == "re" else vals.imag
            fn = interpolate.RegularGridInterpolator(
                axes, vals, method="cubic", bounds_error=True)
            self._interp[key] = fn
        return fn


def _tail_shape(r2: np.ndarray, n: int) -> np.ndarray:
    return (1.0 + r2) ** (-0.5 * n)


def _tail_mass_outside_box(half_width: float, n: int) -> float:
    """Integral of (1+|x|^2)^(-n/2) over the complement of a centred box."""
    d = n - 1
    if d == 1:
        val, _ = integrate.quad(lambda x: (1.0 + x * x) ** (-0.5 * n),
                                half_width, np.inf)
        return 2.0 * val

    def inner(x):
        a = 1.0 + x * x
        return 2.0 * half_width / (a * np.sqrt(a + half_width * half_width))

    # n == 3 closed-form inner integral of (1+x^2+y^2)^(-3/2) in y
    total = 2.0 * np.pi
    box, _ = integrate.quad(inner, -half_width, half_width, limit=200)
    return total - box


def _probe_extent(system: EllipticSystem, boundary_tol: float,
                  xi_cap: float, start: float = 8.0, seed: int = 7) -> float:
    """Double the frequency half-width until the symbol is below tolerance."""
    d = system.n - 1
    dirs = [np.eye(d)[r] * s for r in range(d) for s in (1.0, -1.0)]
    dirs.append(np.ones(d) / np.sqrt(d))
    rng = np.random.default_rng(seed)
    for _ in range(4):
        v = rng.standard_normal(d)
        dirs.append(v / np.linalg.norm(v))
    xi = start
    while xi <= xi_cap:
        worst = max(float(np.abs(poisson_symbol_at(system, w * xi, 1.0)).max())
                    for w in dirs)
        if worst < boundary_tol:
            return xi
        xi *= 2.0
    raise InsufficientDecay(
        "symbol magnitude stays above %.1e out to |xi'| = %g" % (boundary_tol, xi_cap))


def build_poisson_kernel(system: EllipticSystem, freq_extent: float | None = None,
                         N: int = 1024, *, oversample: int | None = None,
                         quad_nodes: int = QUAD_NODES,
                         boundary_tol: float = 1e-12,
                         normalization_tol: float | None = 1e-3,
                         xi_cap: float = 4096.0):
    """Tabulate Phat on a frequency grid and synthesise P on the dual grid.

    Returns (PoissonSymbolTable, PoissonKernelGrid).  N must be a power of
    two; the frequency half-width is doubled adaptively until the boundary
    symbol magnitude drops below ``boundary_tol`` unless given explicitly.
    """
    if N & (N - 1):
        raise ValueError("N must be a power of two")
    d = system.n - 1
    if oversample is None:
        oversample = 16 if d == 1 else 5
    if freq_extent is None:
        freq_extent = _probe_extent(system, boundary_tol, xi_cap)
    grid_h = np.pi / freq_extent
    syn = Grid(n=system.n, N=oversample * N, h=grid_h)
    out_grid = Grid(n=system.n, N=N, h=grid_h)

    nodes = syn.freq_nodes_fftorder()
    M = system.M
    spec = np.empty((len(nodes), M, M), dtype=complex)
    for start in range(0, len(nodes), 1 << 16):
        sl = slice(start, start + (1 << 16))
        spec[sl] = symbol_batch(system, nodes[sl], 1.0, quad_nodes=quad_nodes)
    boundary = float(np.abs(spec[np.linalg.norm(nodes, axis=1)
                                 >= 0.98 * freq_extent]).max())
    if boundary >= boundary_tol:
        raise InsufficientDecay(
            "boundary symbol magnitude %.2e >= %.1e; enlarge the frequency extent"
            % (boundary, boundary_tol))
    spec = spec.reshape(syn.shape + (M, M))

    p_syn = grid_ifft(spec, syn)
    full_sum = p_syn.reshape(-1, M, M).sum(axis=0) * syn.cell_volume
    res_full = float(np.abs(full_sum - np.eye(M)).max())

    lo = (syn.N - N) // 2
    sel = (slice(lo, lo + N),) * d
    values = np.ascontiguousarray(p_syn[sel])

    # delivered symbol table: every oversample-th synthesis frequency
    spec_nat = np.fft.fftshift(spec, axes=tuple(range(d)))
    sub = (slice(syn.N // 2 - (N // 2) * oversample,
                 syn.N // 2 + (N // 2) * oversample, oversample),) * d
    table_values = np.ascontiguousarray(spec_nat[sub])
    center = (N // 2,) * d
    table_values[center] = np.eye(M)   # exact unit mass at zero frequency

    # exponential decay rate of the tabulated symbol
    fr = np.sqrt(sum(m * m for m in np.meshgrid(
        *([np.asarray((np.arange(N) - N // 2) * (2 * freq_extent / N))] * d),
        indexing="ij")))
    mag = np.abs(table_values).max(axis=(-2, -1))
    band = (fr >= 0.25 * freq_extent) & (fr <= 0.75 * freq_extent) & (mag > 0)
    slope = np.polyfit(fr[band].ravel(), np.log(mag[band]).ravel(), 1)[0]
    decay_rate = float(-slope)

    table = PoissonSymbolTable(system=system, freq_extent=float(freq_extent),
                               N=N, values=table_values, decay_rate=decay_rate)
    if decay_rate <= 0:
        raise InsufficientDecay("fitted symbol decay rate is not positive")

    # spatial tail constant sup |P| (1+|x|^2)^(n/2) over the delivered grid
    r2 = sum(m * m for m in out_grid.meshes())
    magp = np.abs(values).max(axis=(-2, -1))
    tail_constant = float((magp * (1.0 + r2) ** (0.5 * system.n)).max())

    # tail-corrected normalisation over the delivered window: the missing
    # mass beyond the crop box is modelled by the fitted decay profile
    # c (1+|x|^2)^(-n/2), the fit taken on the clean outer annulus of the crop
    crop_sum = values.reshape(-1, M, M).sum(axis=0) * syn.cell_volume
    rad_crop = out_grid.radii()
    fit = (rad_crop >= 0.5 * out_grid.R) & (rad_crop <= 0.9 * out_grid.R)
    gshape = _tail_shape(rad_crop[fit] ** 2, system.n)
    denom = float((gshape * gshape).sum())
    coeff = np.einsum("k,kij->ij", gshape, values[fit]) / denom
    tail_out = _tail_mass_outside_box(out_grid.R, system.n)
    corrected = crop_sum + coeff * tail_out
    res_corr = float(np.abs(corrected - np.eye(M)).max())
    if normalization_tol is not None and res_corr > normalization_tol:
        raise InsufficientDecay(
            "tail-corrected normalisation residual %.2e exceeds %.1e"
            % (res_corr, normalization_tol))

    kernel = PoissonKernelGrid(
        system=system, grid=out_grid, values=values,
        tail_constant=tail_constant,
        normalization_residual=res_corr,
        normalization_residual_full=res_full,
        meta={"freq_extent": float(freq_extent), "oversample": oversample,
              "boundary_symbol": boundary, "tail_coeff": coeff,
              "synthesis_R": syn.R})
    return table, kernel


def kernel_at(kernel: PoissonKernelGrid, x_prime, t: float) -> np.ndarray:
    """K(x', t) = t^{1-n} P(x'/t) by bicubic interpolation on the grid."""
    if not t > 0:
        raise OutOfDomain("kernel_at requires t > 0")
    x_prime = np.atleast_1d(np.asarray(x_prime, dtype=float))
    y = x_prime / t
    g = kernel.grid
    lim = g.R - 2.5 * g.h
    if np.any(np.abs(y) > lim):
        raise OutOfDomain(
            "|x'/t| = %s beyond the tabulated window %.3g" % (y, lim))
    M = kernel.system.M
    out = np.empty((M, M), dtype=complex)
    pt = y[None, :]
    for i in range(M):
        for j in range(M):
            re = kernel.entry_interpolator(i, j, "re")(pt)[0]
            im = kernel.entry_interpolator(i, j, "im")(pt)[0]
            out[i, j] = re + 1j * im
    return t ** (1 - kernel.system.n) * out


def discrete_operator(values: np.ndarray, spacings, coeffs: np.ndarray) -> np.ndarray:
    """Second-order centered-difference realisation of the system on a stack.

    ``values`` has shape (T, *spatial, M), axis 0 being the vertical
    direction; ``spacings`` gives the step per coefficient axis in the
    order (x_1 .. x_{n-1}, t).  Returns the result on the interior (every
    differenced axis loses one boundary layer per side).
    """
    n = coeffs.shape[-1]
    arr_axis = [1 + r for r in range(n - 1)] + [0]   # coefficient -> array axis
    out = np.zeros(values.shape[:-1] + (coeffs.shape[0],), dtype=complex)
    for r in range(n):
        for s in range(n):
            c = coeffs[:, :, r, s]
            if not np.any(c):
                continue
            ar, as_ = arr_axis[r], arr_axis[s]
            if r == s:
                d2 = (np.roll(values, -1, ar) + np.roll(values, 1, ar)
                      - 2.0 * values) / spacings[r] ** 2
            else:
                d2 = (np.roll(values, (-1, -1), (ar, as_))
                      - np.roll(values, (-1, 1), (ar, as_))
                      - np.roll(values, (1, -1), (ar, as_))
                      + np.roll(values, (1, 1), (ar, as_))) \
                    / (4.0 * spacings[r] * spacings[s])
            out += np.einsum("ab,...b->...a", c, d2)
    return out[tuple(slice(1, -1) for _ in range(n))]


def interior_pde_residual(system: EllipticSystem, h: float = 1.0 / 16,
                          N: int = 256, t0: float = 1.0,
                          box: float = 2.0) -> float:
    """Max-norm residual of the discrete operator on kernel columns.

    Kernel columns are synthesised spectrally on a stack of uniformly spaced
    heights around ``t0`` and hit with second-order centered differences, so
    the result isolates the O(h^2) truncation of the stencil.
    """
    grid = Grid(n=system.n, N=N, h=h)
    levels = t0 + h * np.arange(-4, 5)
    stack = synthesize_kernel_levels(system, grid, levels)
    M = system.M
    mask = grid.radii() <= box
    mask = mask[tuple(slice(1, -1) for _ in range(grid.d))]
    res = 0.0
    for col in range(M):
        vals = stack[..., :, col]          # (T, *spatial, M)
        out = discrete_operator(vals, [h] * system.n, system.coeffs)
        interior = np.abs(out).max(axis=-1)[:, mask]
        res = max(res, float(interior.max()))
    return res


def classical_oracle_residual(kernel: PoissonKernelGrid) -> float | None:
    """Relative error against the closed-form harmonic kernel on |x'| <= 5.

    Only meaningful when the system is the flat Laplacian (n = 2 or 3);
    returns None otherwise.
    """
    system = kernel.system
    flat = np.eye(system.n).reshape(1, 1, system.n, system.n)
    if system.M != 1 or system.n not in (2, 3) \
            or not np.array_equal(system.coeffs, flat):
        return None
    r2 = sum(m * m for m in kernel.grid.meshes())
    sel = r2 <= 25.0
    if system.n == 2:
        exact = (1.0 / np.pi) / (1.0 + r2)
    else:
        exact = (1.0 / (2.0 * np.pi)) * (1.0 + r2) ** -1.5
    got = kernel.values[..., 0, 0]
    return float((np.abs(got[sel] - exact[sel]) / exact[sel]).max())


def verify_kernel_properties(system: EllipticSystem, kernel: PoissonKernelGrid,
                             symbol: PoissonSymbolTable, *, seed: int = 0,
                             pde_check: bool = True) -> VerificationReport:
    """Quantitative report on the defining kernel identities."""
    metrics = []
    M = system.M
    eye = np.eye(M)

    oracle = classical_oracle_residual(kernel)
    if oracle is not None:
        # periodisation images scale with the delivered window; the tight
        # tolerance applies from the full production sizes upward
        full_size = kernel.grid.N >= (2048 if system.n == 2 else 512)
        metrics.append(make_metric(
            "classical_oracle_rel_error", oracle,
            1e-4 if full_size else 1e-3, "le",
            "tabulated kernel matches the closed-form harmonic kernel"))

    metrics.append(make_metric(
        "normalization_residual_tail_corrected", kernel.normalization_residual,
        2e-3, "le", "unit kernel mass over the delivered window plus fitted tail"))
    metrics.append(make_metric(
        "normalization_residual_full_grid", kernel.normalization_residual_full,
        1e-6, "le", "unit kernel mass as the synthesis-grid quadrature identity"))
    centre = (symbol.N // 2,) * (system.n - 1)
    metrics.append(make_metric(
        "symbol_at_zero_identity", float(np.abs(symbol.values[centre] - eye).max()),
        0.0, "le", "Phat(0) equals the identity exactly"))

    metrics.append(make_metric(
        "tail_constant_spatial", kernel.tail_constant, None, "finite",
        "sup |P|(1+|x'|^2)^(n/2) finite"))
    metrics.append(make_metric(
        "tail_constant_spacetime", kernel.tail_constant, None, "finite",
        "sup |K|(t^2+|x|^2)^(n/2)/t finite (equals the spatial constant "
        "by homogeneity)"))

    # far-field decay slope of |P|
    g = kernel.grid
    rad = g.radii()
    mag = np.abs(kernel.values).max(axis=(-2, -1))
    band = (rad >= 10.0) & (rad <= 0.9 * g.R) & (mag > 0)
    slope = float(np.polyfit(np.log(rad[band]), np.log(mag[band]), 1)[0])
    metrics.append(make_metric(
        "far_field_slope_deviation", abs(slope + system.n), 0.1, "le",
        "log-log decay slope of |P| equals -n"))

    # derivative bounds |d^a K| <= C |x|^{1-n-|a|} at t = 1, |a| <= 2
    d = system.n - 1
    alphas = []
    for r in range(system.n):
        a1 = [0] * system.n
        a1[r] = 1
        alphas.append(tuple(a1))
        a2 = [0] * system.n
        a2[r] = 2
        alphas.append(tuple(a2))
    probe_grid = Grid(n=system.n, N=min(g.N, 512), h=g.h * max(1, g.N // 512))
    for alpha in alphas:
        stack = synthesize_kernel_levels(system, probe_grid, [1.0], alpha=alpha)[0]
        amag = np.abs(stack).max(axis=(-2, -1))
        r2 = sum(m * m for m in probe_grid.meshes()) + 1.0
        order = system.n - 1 + sum(alpha)
        c_alpha = float((amag * r2 ** (0.5 * order)).max())
        metrics.append(make_metric(
            "derivative_constant_%s" % (("".join(map(str, alpha))),),
            c_alpha, None, "finite",
            "sup |d^a K| |x|^{n-1+|a|} finite for a=%s" % (alpha,)))

    # interior PDE residual and its convergence order
    if pde_check:
        res_h = interior_pde_residual(system, h=1.0 / 8, N=128)
        res_h2 = interior_pde_residual(system, h=1.0 / 16, N=256)
        order = float(np.log2(res_h / res_h2)) if res_h2 > 0 else np.inf
        metrics.append(make_metric(
            "pde_residual", res_h2, None, "finite",
            "centered-difference operator residual on kernel columns"))
        metrics.append(make_metric(
            "pde_residual_order", order, 1.8, "ge",
            "stencil residual decays at second order under grid halving"))

    # semigroup identity at seeded frequencies
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((100, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = np.exp(rng.uniform(np.log(0.1), np.log(20.0), 100))
    worst = 0.0
    for w, r in zip(dirs, radii):
        xi = w * r
        k1 = poisson_symbol_at(system, xi, 1.0)
        k2 = poisson_symbol_at(system, xi, 0.3) @ poisson_symbol_at(system, xi, 0.7)
        worst = max(worst, float(np.abs(k1 - k2).max()))
    metrics.append(make_metric(
        "semigroup_residual", worst, 1e-8, "le",
        "Khat(xi,1) = Khat(xi,0.3) Khat(xi,0.7) at 100 seeded frequencies"))

    # non-degeneracy probe: spherical means of |P(lambda w) a| per basis vector
    lam_hi = min(100.0, 0.9 * g.R)
    lams = np.logspace(-2, np.log10(lam_hi), 41)
    if d == 1:
        sphere = np.array([[1.0], [-1.0]])
    else:
        ang = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
        sphere = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    probe_min = np.inf
    for b in range(M):
        basis = np.zeros(M)
        basis[b] = 1.0
        best = 0.0
        for lam in lams:
            vals = [np.linalg.norm(kernel_at(kernel, lam * w, 1.0) @ basis)
                    for w in sphere]
            best = max(best, float(np.mean(vals)))
        probe_min = min(probe_min, best)
    metrics.append(make_metric(
        "nondegeneracy_probe_min", probe_min, 0.0, "gt",
        "every basis vector sees positive spherical kernel mean at some scale"))

    return VerificationReport(
        experiment="kernel_properties:%s" % system.label,
        metrics=metrics,
        fingerprint={"system": system.label, "N": g.N, "h": g.h,
                     "freq_extent": symbol.freq_extent, "seed": seed})
