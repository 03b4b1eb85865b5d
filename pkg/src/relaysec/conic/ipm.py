"""Dense primal-dual interior-point method for small conic programs.

Solves the pair

    minimize    c'x                 maximize   -h'z
    subject to  G x + s = h         subject to  G'z + c = 0
                s in K                          z in K

where ``K`` is a product of a nonnegative orthant, second-order cones and
real symmetric PSD cones. PSD blocks are stored in ``svec`` form (lower
triangle, column major, off-diagonals scaled by sqrt(2)) so the Euclidean
inner product of vectors matches the trace inner product of matrices.

The iteration is Mehrotra predictor-corrector with Nesterov-Todd scaling,
started from an infeasible point. It assumes the problem has a primal-dual
optimal pair; callers guarantee that by posing phase-I problems that are
strictly feasible and bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, solve_triangular


@dataclass(frozen=True)
class ConeDims:
    l: int = 0
    q: tuple[int, ...] = ()
    s: tuple[int, ...] = ()

    @property
    def size(self) -> int:
        return self.l + sum(self.q) + sum(n * (n + 1) // 2 for n in self.s)

    @property
    def degree(self) -> int:
        return self.l + len(self.q) + sum(self.s)


@dataclass
class ConeResult:
    status: str  # "optimal", "inaccurate", "stopped" or "failure"
    x: np.ndarray
    s: np.ndarray
    z: np.ndarray
    iterations: int
    primal_objective: float
    dual_objective: float
    gap: float
    primal_residual: float
    dual_residual: float
    history: list = field(default_factory=list, repr=False)


# ---------------------------------------------------------------- svec helpers

_TRIL_CACHE: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _tril(n: int):
    if n not in _TRIL_CACHE:
        # column-major lower triangle == row-major upper triangle of the transpose
        cols, rows = np.triu_indices(n)
        scale = np.where(rows == cols, 1.0, math.sqrt(2.0))
        _TRIL_CACHE[n] = (rows, cols, scale)
    return _TRIL_CACHE[n]


def svec(S: np.ndarray) -> np.ndarray:
    n = S.shape[-1]
    rows, cols, scale = _tril(n)
    return S[..., rows, cols] * scale


def smat(v: np.ndarray, n: int) -> np.ndarray:
    rows, cols, scale = _tril(n)
    S = np.zeros(v.shape[:-1] + (n, n))
    vals = v / scale
    S[..., rows, cols] = vals
    S[..., cols, rows] = vals
    return S


# ---------------------------------------------------------------- cone blocks


class _Blocks:
    """Index bookkeeping for the cone product."""

    def __init__(self, dims: ConeDims):
        self.dims = dims
        self.l = slice(0, dims.l)
        self.q = []
        off = dims.l
        for n in dims.q:
            self.q.append(slice(off, off + n))
            off += n
        self.s = []
        for n in dims.s:
            k = n * (n + 1) // 2
            self.s.append((slice(off, off + k), n))
            off += k
        self.size = off

    def identity(self) -> np.ndarray:
        e = np.zeros(self.size)
        e[self.l] = 1.0
        for sl in self.q:
            e[sl.start] = 1.0
        for sl, n in self.s:
            e[sl] = svec(np.eye(n))
        return e

    def max_violation(self, u: np.ndarray) -> float:
        """Smallest alpha with ``u + alpha*e`` in the cone closure (negated min 'eigenvalue')."""
        worst = -np.inf
        if self.dims.l:
            worst = max(worst, float(-np.min(u[self.l])))
        for sl in self.q:
            v = u[sl]
            worst = max(worst, float(np.linalg.norm(v[1:]) - v[0]))
        for sl, n in self.s:
            worst = max(worst, float(-np.linalg.eigvalsh(smat(u[sl], n))[0]))
        return worst


class _Scaling:
    """Nesterov-Todd scaling ``W`` with ``W z = W^{-T} s = lam``."""

    def __init__(self, blocks: _Blocks, s: np.ndarray, z: np.ndarray):
        self.b = blocks
        self.lam = np.zeros(blocks.size)
        d = blocks.dims
        if d.l:
            sl, zl = s[blocks.l], z[blocks.l]
            self.dl = np.sqrt(sl / zl)
            self.lam[blocks.l] = np.sqrt(sl * zl)
        self.soc = []
        for sl in blocks.q:
            ss, zz = s[sl], z[sl]
            s_det = ss[0] ** 2 - ss[1:] @ ss[1:]
            z_det = zz[0] ** 2 - zz[1:] @ zz[1:]
            if s_det <= 0 or z_det <= 0:
                raise LinAlgError("iterate left the second-order cone")
            sn = math.sqrt(s_det)
            zn = math.sqrt(z_det)
            sbar = ss / sn
            zbar = zz / zn
            gamma = math.sqrt(max((1.0 + sbar @ zbar) / 2.0, 1e-300))
            wbar = np.empty_like(ss)
            wbar[0] = (sbar[0] + zbar[0]) / (2 * gamma)
            wbar[1:] = (sbar[1:] - zbar[1:]) / (2 * gamma)
            beta = math.sqrt(sn / zn)
            n = ss.size
            H = np.empty((n, n))
            H[0, 0] = wbar[0]
            H[0, 1:] = wbar[1:]
            H[1:, 0] = wbar[1:]
            H[1:, 1:] = np.eye(n - 1) + np.outer(wbar[1:], wbar[1:]) / (1.0 + wbar[0])
            Hinv = H.copy()
            Hinv[0, 1:] *= -1
            Hinv[1:, 0] *= -1
            W = beta * H
            Winv = Hinv / beta
            self.soc.append((W, Winv))
            self.lam[sl] = W @ zz
        self.psd = []
        for sl, n in blocks.s:
            S = smat(s[sl], n)
            Z = smat(z[sl], n)
            L1 = np.linalg.cholesky(S)
            L2 = np.linalg.cholesky(Z)
            U, lam, Vt = np.linalg.svd(L2.T @ L1)
            R = L1 @ Vt.T / np.sqrt(lam)
            Rinv = (np.sqrt(lam)[:, None] * Vt) @ np.linalg.inv(L1)
            self.psd.append((R, Rinv, lam))
            self.lam[sl] = svec(np.diag(lam))

    # W^{-T} applied to the columns of ``V`` (shape size x k) or a vector
    def apply_inv_T(self, V: np.ndarray) -> np.ndarray:
        out = np.empty_like(V)
        b = self.b
        if b.dims.l:
            out[b.l] = (V[b.l].T / self.dl).T
        for sl, (W, Winv) in zip(b.q, self.soc):
            out[sl] = Winv @ V[sl]
        for (sl, n), (R, Rinv, _) in zip(b.s, self.psd):
            M = smat(V[sl].T, n)
            out[sl] = svec(Rinv @ M @ Rinv.T).T
        return out

    def apply_T(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        b = self.b
        if b.dims.l:
            out[b.l] = v[b.l] * self.dl
        for sl, (W, _) in zip(b.q, self.soc):
            out[sl] = W @ v[sl]
        for (sl, n), (R, _, _) in zip(b.s, self.psd):
            out[sl] = svec(R @ smat(v[sl], n) @ R.T)
        return out

    def apply_inv(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        b = self.b
        if b.dims.l:
            out[b.l] = v[b.l] / self.dl
        for sl, (_, Winv) in zip(b.q, self.soc):
            out[sl] = Winv @ v[sl]
        for (sl, n), (_, Rinv, _) in zip(b.s, self.psd):
            out[sl] = svec(Rinv.T @ smat(v[sl], n) @ Rinv)
        return out


# ---------------------------------------------------------------- Jordan algebra


def _jprod(b: _Blocks, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    if b.dims.l:
        out[b.l] = u[b.l] * v[b.l]
    for sl in b.q:
        uu, vv = u[sl], v[sl]
        out[sl.start] = uu @ vv
        out[sl.start + 1 : sl.stop] = uu[0] * vv[1:] + vv[0] * uu[1:]
    for sl, n in b.s:
        U = smat(u[sl], n)
        V = smat(v[sl], n)
        P = U @ V
        out[sl] = svec(0.5 * (P + P.T))
    return out


def _jdiv(b: _Blocks, scaling: _Scaling, r: np.ndarray) -> np.ndarray:
    """Solve ``lam o x = r`` for the scaled point ``lam``."""
    lam = scaling.lam
    out = np.empty_like(r)
    if b.dims.l:
        out[b.l] = r[b.l] / lam[b.l]
    for sl in b.q:
        la, rr = lam[sl], r[sl]
        det = la[0] ** 2 - la[1:] @ la[1:]
        x0 = (la[0] * rr[0] - la[1:] @ rr[1:]) / det
        out[sl.start] = x0
        out[sl.start + 1 : sl.stop] = (rr[1:] - la[1:] * x0) / la[0]
    for (sl, n), (_, _, d) in zip(b.s, scaling.psd):
        Rm = smat(r[sl], n)
        out[sl] = svec(2.0 * Rm / (d[:, None] + d[None, :]))
    return out


def _max_step(b: _Blocks, scaling: _Scaling, d: np.ndarray) -> float:
    """Largest alpha with ``lam + alpha*d`` in the cone (inf if unbounded)."""
    lam = scaling.lam
    alpha = np.inf
    if b.dims.l:
        dl = d[b.l]
        neg = dl < 0
        if np.any(neg):
            alpha = min(alpha, float(np.min(-lam[b.l][neg] / dl[neg])))
    for sl in b.q:
        la, dd = lam[sl], d[sl]
        a = dd[0] ** 2 - dd[1:] @ dd[1:]
        bb = la[0] * dd[0] - la[1:] @ dd[1:]
        c = la[0] ** 2 - la[1:] @ la[1:]
        alpha = min(alpha, _first_root(a, bb, c, la[0], dd[0]))
    for (sl, n), (_, _, lamd) in zip(b.s, scaling.psd):
        D = smat(d[sl], n)
        isq = 1.0 / np.sqrt(lamd)
        ev = np.linalg.eigvalsh(isq[:, None] * D * isq[None, :])[0]
        if ev < 0:
            alpha = min(alpha, -1.0 / ev)
    return alpha


def _first_root(a: float, b: float, c: float, x0: float, d0: float) -> float:
    """First alpha > 0 where ``a alpha^2 + 2 b alpha + c`` hits zero on the positive nappe."""
    roots = []
    if abs(a) < 1e-300:
        if b < 0:
            roots.append(-c / (2 * b))
    else:
        disc = b * b - a * c
        if disc >= 0:
            sq = math.sqrt(disc)
            # numerically stable pair
            q = -(b + math.copysign(sq, b))
            for r in (q / a, c / q if q != 0 else np.inf):
                if r > 0:
                    roots.append(r)
    # leaving through the apex cone x0 < 0 only happens past a determinant root
    if d0 < 0:
        roots.append(-x0 / d0)
    return min(roots) if roots else np.inf


# ---------------------------------------------------------------- solver


def conelp(
    c: np.ndarray,
    G: np.ndarray,
    h: np.ndarray,
    dims: ConeDims,
    *,
    max_iter: int = 200,
    abstol: float = 1e-10,
    reltol: float = 1e-10,
    feastol: float = 1e-9,
    stop=None,
) -> ConeResult:
    """Solve the conic pair; ``stop(x, z, rx)`` may end the run early (status ``"stopped"``)."""
    c = np.asarray(c, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    b = _Blocks(dims)
    if G.shape != (b.size, c.size) or h.shape != (b.size,):
        raise ValueError(f"shape mismatch: G {G.shape}, h {h.shape}, c {c.shape}, cone size {b.size}")
    m = dims.degree
    e = b.identity()

    # least-squares starting points
    x, *_ = np.linalg.lstsq(G, h, rcond=None)
    s = h - G @ x
    GtG = G.T @ G
    z = -G @ np.linalg.solve(GtG + 1e-14 * np.eye(c.size) * max(1.0, np.trace(GtG)), c)
    for v in (s, z):
        alpha = b.max_violation(v)
        if alpha >= -1e-8:
            v += (1.0 + max(alpha, 0.0)) * e

    resx0 = max(1.0, np.linalg.norm(c))
    resz0 = max(1.0, np.linalg.norm(h))
    history = []
    status = "failure"
    it = 0
    pcost = dcost = gap = pres = dres = np.nan
    best = None
    for it in range(max_iter + 1):
        rx = G.T @ z + c
        rz = G @ x + s - h
        gap = float(s @ z)
        pcost = float(c @ x)
        dcost = float(-h @ z)
        pres = float(np.linalg.norm(rz) / resz0)
        dres = float(np.linalg.norm(rx) / resx0)
        if pcost < 0:
            relgap = gap / -pcost
        elif dcost > 0:
            relgap = gap / dcost
        else:
            relgap = np.inf
        history.append((pcost, dcost, gap, pres, dres))
        if stop is not None and stop(x, z, rx):
            status = "stopped"
            break
        merit = max(pres, dres, min(gap, relgap))
        if best is None or merit < best[0]:
            best = (merit, x.copy(), s.copy(), z.copy(), it)
        if pres <= feastol and dres <= feastol and (gap <= abstol or relgap <= reltol):
            status = "optimal"
            break
        if it == max_iter:
            break
        try:
            W = _Scaling(b, s, z)
            Gs = W.apply_inv_T(G)
            # QR of the scaled G avoids squaring its condition number
            Rq = np.linalg.qr(Gs, mode="r")
            if not np.all(np.isfinite(Rq)) or np.min(np.abs(np.diag(Rq))) == 0.0:
                break
        except (LinAlgError, np.linalg.LinAlgError, FloatingPointError):
            break
        lam = W.lam
        rz_s = W.apply_inv_T(rz)
        mu = gap / m

        Rinv = solve_triangular(Rq, np.eye(Rq.shape[0]), check_finite=False)

        def normal_solve(rhs):
            return Rinv @ (Rinv.T @ rhs)

        def solve(rc):
            q = _jdiv(b, W, rc)
            rhs = -rx - Gs.T @ (q + rz_s)
            dx = normal_solve(rhs)
            dx += normal_solve(rhs - Gs.T @ (Gs @ dx))
            dz = Gs @ dx + rz_s + q
            ds = q - dz
            return dx, ds, dz

        # a degenerate scaling shows up as non-finite directions; stop and keep the best iterate
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            # predictor
            rc = -_jprod(b, lam, lam)
            dxa, dsa, dza = solve(rc)
            if not (np.all(np.isfinite(dsa)) and np.all(np.isfinite(dza))):
                break
            alpha_a = min(1.0, _max_step(b, W, dsa), _max_step(b, W, dza))
            sigma = (1.0 - alpha_a) ** 3
            # corrector
            rc = rc - _jprod(b, dsa, dza) + sigma * mu * e
            dx, ds, dz = solve(rc)
            if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(ds)) and np.all(np.isfinite(dz))):
                break
            alpha = min(1.0, 0.99 * min(_max_step(b, W, ds), _max_step(b, W, dz)))
        if not np.isfinite(alpha) or alpha <= 1e-14:
            break
        x = x + alpha * dx
        s = s + alpha * W.apply_T(ds)
        z = z + alpha * W.apply_inv(dz)

    if status not in ("optimal", "stopped") and best is not None:
        merit, x, s, z, _ = best
        if merit <= 1e-7:
            status = "inaccurate"
        rx = G.T @ z + c
        rz = G @ x + s - h
        gap = float(s @ z)
        pcost = float(c @ x)
        dcost = float(-h @ z)
        pres = float(np.linalg.norm(rz) / resz0)
        dres = float(np.linalg.norm(rx) / resx0)
    return ConeResult(
        status=status,
        x=x,
        s=s,
        z=z,
        iterations=it,
        primal_objective=pcost,
        dual_objective=dcost,
        gap=gap,
        primal_residual=pres,
        dual_residual=dres,
        history=history,
    )
