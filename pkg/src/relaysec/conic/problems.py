"""Hermitian SDP and beamforming SOCP front ends over the interior-point core.

Feasibility is decided with a phase-I program that maximizes the smallest
normalized constraint margin. That program is always strictly feasible and
bounded (the power constraints cap ``X``), so the infeasible-start method in
:mod:`.ipm` applies and no separate infeasibility certificate is needed: the
problem is infeasible exactly when the optimal margin is below
``-feasibility_tol``. Phase-I stops early once an iterate passes the
independent constraint check at half the tolerance, or once its dual bound
proves the margin negative.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..numerics import as_hermitian, as_vector, project_psd
from ..settings import NumericSettings, resolve
from . import hermitian as herm
from .ipm import ConeDims, ConeResult, conelp


class Status(str, enum.Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    OPTIMAL = "Optimal"
    NUMERICAL_FAILURE = "NumericalFailure"


class Objective(str, enum.Enum):
    FEASIBILITY = "FeasibilityOnly"
    MIN_TRACE = "MinimizeTrace"
    MIN_POWER = "MinimizeTotalPower"


@dataclass
class SolveReport:
    status: Status
    X: np.ndarray | None = None
    w: np.ndarray | None = None
    iterations: int = 0
    max_violation: float = math.inf
    # phase-I optimum: smallest normalized slack (negative when infeasible)
    margin: float = -math.inf
    objective_value: float = math.nan
    # False when infeasibility rests on a stalled but primal-converged phase-I run
    certified: bool = True

    @property
    def ok(self) -> bool:
        return self.status in (Status.FEASIBLE, Status.OPTIMAL)


# ------------------------------------------------------------------ SDP


@dataclass
class SdpProblem:
    """``find / min tr(X)`` over Hermitian ``X >= 0``.

    ``trace_constraints`` holds pairs ``(A, b)`` meaning ``tr(A X) >= b``.
    ``norm_constraints`` holds triples ``(Q, d, kappa)`` meaning
    ``kappa * ||X||_F <= tr(Q X) - d``.
    """

    dim: int
    trace_constraints: list = field(default_factory=list)
    diag_bounds: np.ndarray | None = None
    trace_bound: float | None = None
    objective: Objective = Objective.FEASIBILITY
    norm_constraints: list = field(default_factory=list)

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("dim must be >= 1")
        if self.diag_bounds is None and self.trace_bound is None:
            raise ValidationError("SdpProblem needs diag_bounds and/or trace_bound")
        if self.diag_bounds is not None:
            p = np.asarray(self.diag_bounds, dtype=float).reshape(-1)
            if p.size != self.dim or np.any(p <= 0) or not np.all(np.isfinite(p)):
                raise ValidationError("diag_bounds must hold dim positive finite entries")
            self.diag_bounds = p
        if self.trace_bound is not None and not self.trace_bound > 0:
            raise ValidationError("trace_bound must be positive")
        self.trace_constraints = [
            (as_hermitian(A, "A_k"), float(b)) for A, b in self.trace_constraints
        ]
        self.norm_constraints = [
            (as_hermitian(Q, "Q_k"), float(d), float(kappa)) for Q, d, kappa in self.norm_constraints
        ]
        for A, _ in self.trace_constraints:
            if A.shape != (self.dim, self.dim):
                raise ValidationError("trace constraint matrix has the wrong size")
        for Q, _, kappa in self.norm_constraints:
            if Q.shape != (self.dim, self.dim) or kappa < 0:
                raise ValidationError("norm constraint needs a dim x dim matrix and kappa >= 0")
        self.objective = Objective(self.objective)
        if self.objective not in (Objective.FEASIBILITY, Objective.MIN_TRACE):
            raise ValidationError(f"objective {self.objective} not valid for an SDP")

    @property
    def power_scale(self) -> float:
        cands = []
        if self.diag_bounds is not None:
            cands.append(float(np.max(self.diag_bounds)))
        if self.trace_bound is not None:
            cands.append(float(self.trace_bound))
        return min(cands)


def _row_scale(b: float) -> float:
    return max(1.0, abs(b))


def sdp_violation(prob: SdpProblem, X: np.ndarray) -> dict:
    """Independent constraint evaluator for an SDP point.

    Trace and norm constraint violations are normalized by ``max(1, |rhs|)``;
    bound violations are absolute.
    """
    X = 0.5 * (X + X.conj().T)
    out = {"trace": 0.0, "bounds": 0.0, "psd": 0.0}
    for A, b in prob.trace_constraints:
        val = float(np.real(np.trace(A @ X)))
        out["trace"] = max(out["trace"], (b - val) / _row_scale(b))
    for Q, d, kappa in prob.norm_constraints:
        val = float(np.real(np.trace(Q @ X))) - d - kappa * np.linalg.norm(X)
        out["trace"] = max(out["trace"], -val / _row_scale(d))
    if prob.diag_bounds is not None:
        out["bounds"] = max(out["bounds"], float(np.max(np.real(np.diag(X)) - prob.diag_bounds)))
    if prob.trace_bound is not None:
        out["bounds"] = max(out["bounds"], float(np.real(np.trace(X))) - prob.trace_bound)
    ev = np.linalg.eigvalsh(X)
    out["psd"] = max(0.0, -float(ev[0]) / max(1.0, float(abs(ev[-1]))))
    return out


def _sdp_program(prob: SdpProblem, *, phase1: bool, relax: float):
    """Assemble ``(c, G, h, dims)`` for the scaled variable ``Y = X / sigma``."""
    M = prob.dim
    n = herm.nparams(M)
    sigma = prob.power_scale
    nv = n + 1 if phase1 else n
    lin_G, lin_h = [], []
    soc_blocks = []

    def pad(row, m_coef):
        return np.concatenate([row, [m_coef]]) if phase1 else row

    for A, b in prob.trace_constraints:
        sc = _row_scale(b)
        a = herm.trace_coeffs(sigma * A) / sc
        # slack = a.x - b/sc - m + relax
        lin_G.append(pad(-a, 1.0))
        lin_h.append(-b / sc + relax)
    for Q, d, kappa in prob.norm_constraints:
        sc = _row_scale(d)
        q = herm.trace_coeffs(sigma * Q) / sc
        k = kappa * sigma / sc
        if k == 0.0:
            lin_G.append(pad(-q, 1.0))
            lin_h.append(-d / sc + relax)
            continue
        f = herm.frobenius_weights(M)
        blk_G = np.zeros((1 + n, nv))
        blk_h = np.zeros(1 + n)
        blk_G[0, :n] = -q
        if phase1:
            blk_G[0, n] = 1.0
        blk_h[0] = -d / sc + relax
        blk_G[1:, :n] = -k * np.diag(f)
        soc_blocks.append((blk_G, blk_h))
    if prob.diag_bounds is not None:
        for m in range(M):
            row = np.zeros(n)
            row[m] = 1.0
            lin_G.append(pad(row, 0.0))
            lin_h.append(prob.diag_bounds[m] / sigma)
    if prob.trace_bound is not None:
        lin_G.append(pad(herm.identity_coeffs(M), 0.0))
        lin_h.append(prob.trace_bound / sigma)

    E = herm.embedding_matrix(M)
    psd_G = np.zeros((E.shape[0], nv))
    psd_G[:, :n] = -E
    G = np.vstack([np.array(lin_G).reshape(-1, nv)] + [g for g, _ in soc_blocks] + [psd_G])
    h = np.concatenate([np.array(lin_h, dtype=float)] + [hh for _, hh in soc_blocks] + [np.zeros(E.shape[0])])
    dims = ConeDims(l=len(lin_G), q=tuple(g.shape[0] for g, _ in soc_blocks), s=(2 * M,))
    if phase1:
        c = np.zeros(nv)
        c[n] = -1.0
    else:
        c = herm.identity_coeffs(M).astype(float)
    return c, G, h, dims, sigma


def _run(c, G, h, dims, s: NumericSettings, stop=None) -> ConeResult:
    return conelp(
        c, G, h, dims,
        max_iter=s.ipm_max_iter,
        abstol=s.ipm_gap_tol,
        reltol=s.ipm_gap_tol,
        feastol=s.ipm_feas_tol,
        stop=stop,
    )


def _phase1_stop(h: np.ndarray, accept, tol: float):
    """Early exit for phase-I: a primal iterate that already passes the
    independent check, or a dual iterate whose bound on the best margin,
    ``h'z`` plus a residual allowance, is clearly negative."""

    def stop(x, z, rx):
        if accept(x):
            return True
        allowance = 10.0 * np.linalg.norm(rx) * (1.0 + np.linalg.norm(x))
        return float(h @ z) + allowance < -2.0 * tol

    return stop


def _infeasible_verdict(res: ConeResult, tol: float) -> bool | None:
    """Classify a phase-I run that found no witness within ``tol``.

    Returns True when infeasibility is certified (clean finish, or a dual
    iterate accurate enough to bound the margin), False when the run stalled
    after the primal converged (degenerate problems whose feasible set has no
    interior stall this way), and None when the iterates are meaningless.
    """
    if res.status != "failure":
        return True
    if res.dual_residual < 1e-7 and res.dual_objective > tol:
        return True
    if res.primal_residual <= 1e-6 and np.isfinite(res.primal_objective):
        return False
    return None


def _sdp_x(x: np.ndarray, M: int, sigma: float) -> np.ndarray:
    return sigma * herm.to_matrix(x[: herm.nparams(M)], M)


def _sdp_point(res: ConeResult, M: int, sigma: float) -> np.ndarray:
    return _sdp_x(res.x, M, sigma)


def _into_bounds(prob: SdpProblem, X: np.ndarray) -> np.ndarray:
    """Clip an interior-point iterate onto the PSD cone and shrink it inside the power bounds.

    Iterates may overshoot the bounds by the primal residual; trace rows with
    large coefficients would otherwise profit from that overshoot.
    """
    X = project_psd(X)
    scale = 1.0
    d = np.real(np.diag(X))
    if prob.diag_bounds is not None:
        over = d > prob.diag_bounds
        if np.any(over):
            scale = min(scale, float(np.min(prob.diag_bounds[over] / d[over])))
    if prob.trace_bound is not None and d.sum() > prob.trace_bound:
        scale = min(scale, prob.trace_bound / float(d.sum()))
    return X * scale


def solve_sdp(prob: SdpProblem, settings: NumericSettings | None = None) -> SolveReport:
    s = resolve(settings)
    tol = s.feasibility_tol
    M = prob.dim
    if not prob.trace_constraints and not prob.norm_constraints:
        X = np.zeros((M, M), dtype=complex)
        status = Status.OPTIMAL if prob.objective is Objective.MIN_TRACE else Status.FEASIBLE
        return SolveReport(status, X=X, max_violation=0.0, margin=math.inf, objective_value=0.0)

    bound_tol = 1e-9 * max(1.0, prob.power_scale)

    def passes(v, slack=tol):
        return v["trace"] <= slack and v["bounds"] <= bound_tol and v["psd"] <= s.psd_rtol

    c, G, h, dims, sigma = _sdp_program(prob, phase1=True, relax=0.0)
    # the least-violating iterate, kept in case the run stalls on a degenerate problem
    best = {"trace": math.inf, "X": None, "viol": None}

    def accept(x):
        Xi = _into_bounds(prob, _sdp_x(x, M, sigma))
        v = sdp_violation(prob, Xi)
        if v["bounds"] <= bound_tol and v["psd"] <= s.psd_rtol and v["trace"] < best["trace"]:
            best.update(trace=v["trace"], X=Xi, viol=v)
        # early acceptance uses half the tolerance so a witness's certified
        # level stays decidable as feasible by a full phase-I solve
        return passes(v, 0.5 * tol)

    res = _run(c, G, h, dims, s, _phase1_stop(h, accept, tol))
    X = _into_bounds(prob, _sdp_point(res, M, sigma))
    viol = sdp_violation(prob, X)
    if not passes(viol) and best["X"] is not None and passes(best["viol"]):
        X, viol = best["X"], best["viol"]
    worst = viol["trace"]
    margin = float(res.x[-1]) if res.status != "failure" else -worst
    iters = res.iterations
    feasible = passes(viol)
    if not feasible:
        verdict = _infeasible_verdict(res, tol)
        if verdict is None:
            return SolveReport(Status.NUMERICAL_FAILURE, iterations=iters, max_violation=worst, margin=margin)
        return SolveReport(
            Status.INFEASIBLE, iterations=iters, max_violation=worst, margin=margin, certified=verdict,
        )
    if prob.objective is Objective.FEASIBILITY:
        return SolveReport(Status.FEASIBLE, X=X, iterations=iters, max_violation=max(worst, 0.0), margin=margin)

    c2, G2, h2, dims2, _ = _sdp_program(prob, phase1=False, relax=tol)
    res2 = _run(c2, G2, h2, dims2, s)
    iters += res2.iterations
    if res2.status != "failure":
        X2 = _into_bounds(prob, _sdp_point(res2, M, sigma))
        v2 = sdp_violation(prob, X2)
        if v2["trace"] <= tol * (1 + 1e-6) and v2["bounds"] <= bound_tol and v2["psd"] <= s.psd_rtol:
            return SolveReport(
                Status.OPTIMAL, X=X2, iterations=iters, max_violation=max(v2["trace"], 0.0),
                margin=margin, objective_value=float(np.real(np.trace(X2))),
            )
    # min-trace stalled: the phase-I point is still a valid feasible answer
    return SolveReport(
        Status.FEASIBLE, X=X, iterations=iters, max_violation=max(worst, 0.0), margin=margin,
        objective_value=float(np.real(np.trace(X))),
    )


# ------------------------------------------------------------------ SOCP


@dataclass
class SocpProblem:
    """Secrecy cone ``sqrt(1/t) h^H w >= ||(z^H w, sqrt((1-1/t) N0))||``.

    Per-relay bounds ``|w_m|^2 <= p_m`` and an optional total bound
    ``||w||^2 <= total_bound`` close the feasible set.
    """

    h: np.ndarray
    z: np.ndarray
    N0: float
    t: float
    p: np.ndarray | None = None
    total_bound: float | None = None
    objective: Objective = Objective.FEASIBILITY

    def __post_init__(self):
        self.h = as_vector(self.h, "h")
        self.z = as_vector(self.z, "z")
        if self.h.size != self.z.size:
            raise ValidationError("h and z must have the same length")
        if not self.N0 > 0:
            raise ValidationError("N0 must be positive")
        if not self.t >= 1.0:
            raise ValidationError(f"t must be >= 1, got {self.t}")
        if self.p is None and self.total_bound is None:
            raise ValidationError("SocpProblem needs p and/or total_bound")
        if self.p is not None:
            p = np.asarray(self.p, dtype=float).reshape(-1)
            if p.size != self.h.size or np.any(p <= 0):
                raise ValidationError("p must hold M positive entries")
            self.p = p
        if self.total_bound is not None and not self.total_bound > 0:
            raise ValidationError("total_bound must be positive")
        self.objective = Objective(self.objective)
        if self.objective not in (Objective.FEASIBILITY, Objective.MIN_POWER):
            raise ValidationError(f"objective {self.objective} not valid for the SOCP")

    @property
    def dim(self) -> int:
        return self.h.size

    @property
    def noise_term(self) -> float:
        return math.sqrt(max(0.0, (1.0 - 1.0 / self.t) * self.N0))

    @property
    def amplitude_scale(self) -> float:
        cands = []
        if self.p is not None:
            cands.append(float(np.max(self.p)))
        if self.total_bound is not None:
            cands.append(float(self.total_bound))
        return math.sqrt(min(cands))


def socp_violation(prob: SocpProblem, w: np.ndarray) -> dict:
    """Independent evaluator: cone violation (normalized by ``max(1, noise term)``) and bound violations."""
    c = prob.noise_term
    lhs = math.sqrt(1.0 / prob.t) * float(np.real(np.vdot(prob.h, w)))
    rhs = math.hypot(abs(np.vdot(prob.z, w)), c)
    out = {"cone": (rhs - lhs) / max(1.0, c), "bounds": 0.0}
    if prob.p is not None:
        out["bounds"] = max(out["bounds"], float(np.max(np.abs(w) ** 2 - prob.p)))
    if prob.total_bound is not None:
        out["bounds"] = max(out["bounds"], float(np.vdot(w, w).real) - prob.total_bound)
    return out


def _socp_program(prob: SocpProblem, *, phase1: bool, relax: float):
    M = prob.dim
    sigma = prob.amplitude_scale
    c_noise = prob.noise_term
    norm = max(1.0, c_noise) / sigma
    nv = 2 * M + 1
    hr, hi = prob.h.real, prob.h.imag
    zr, zi = prob.z.real, prob.z.imag
    rt = math.sqrt(1.0 / prob.t)
    # x = [Re v, Im v, m-or-tau], w = sigma * v
    head = np.concatenate([hr, hi]) * rt / norm
    z_re = np.concatenate([zr, zi]) / norm
    z_im = np.concatenate([-zi, zr]) / norm
    blocks = []

    G = np.zeros((4, nv))
    G[0, : 2 * M] = -head
    G[1, : 2 * M] = -z_re
    G[2, : 2 * M] = -z_im
    hh = np.array([relax, 0.0, 0.0, c_noise / sigma / norm])
    if phase1:
        G[0, -1] = 1.0
    blocks.append((G, hh))
    if prob.p is not None:
        for m in range(M):
            Gm = np.zeros((3, nv))
            Gm[1, m] = -1.0
            Gm[2, M + m] = -1.0
            blocks.append((Gm, np.array([math.sqrt(prob.p[m]) / sigma, 0.0, 0.0])))
    if prob.total_bound is not None:
        Gt = np.zeros((1 + 2 * M, nv))
        Gt[1:, : 2 * M] = -np.eye(2 * M)
        ht = np.zeros(1 + 2 * M)
        ht[0] = math.sqrt(prob.total_bound) / sigma
        blocks.append((Gt, ht))
    c = np.zeros(nv)
    if phase1:
        c[-1] = -1.0
    else:
        Gp = np.zeros((1 + 2 * M, nv))
        Gp[0, -1] = -1.0
        Gp[1:, : 2 * M] = -np.eye(2 * M)
        blocks.append((Gp, np.zeros(1 + 2 * M)))
        c[-1] = 1.0
    G = np.vstack([g for g, _ in blocks])
    h = np.concatenate([v for _, v in blocks])
    dims = ConeDims(q=tuple(g.shape[0] for g, _ in blocks))
    return c, G, h, dims, sigma


def _socp_point(res: ConeResult, prob: SocpProblem, sigma: float) -> np.ndarray:
    return _socp_w(res.x, prob, sigma)


def _socp_w(x: np.ndarray, prob: SocpProblem, sigma: float) -> np.ndarray:
    M = prob.dim
    w = sigma * (x[:M] + 1j * x[M : 2 * M])
    # shrink iterates that overshoot a power bound by the primal residual
    pw = np.abs(w) ** 2
    scale = 1.0
    if prob.p is not None:
        over = pw > prob.p
        if np.any(over):
            scale = min(scale, float(np.min(np.sqrt(prob.p[over] / pw[over]))))
    if prob.total_bound is not None and pw.sum() > prob.total_bound:
        scale = min(scale, math.sqrt(prob.total_bound / pw.sum()))
    w = w * scale
    # rotate so h^H w is real and nonnegative; never hurts the cone
    hw = np.vdot(prob.h, w)
    if abs(hw) > 0:
        w = w * (abs(hw) / hw)
    return w


def solve_socp(prob: SocpProblem, settings: NumericSettings | None = None) -> SolveReport:
    s = resolve(settings)
    tol = s.feasibility_tol
    bound_tol = 1e-9 * max(1.0, prob.amplitude_scale ** 2)
    c, G, h, dims, sigma = _socp_program(prob, phase1=True, relax=0.0)

    best = {"cone": math.inf, "w": None, "viol": None}

    def accept(x):
        wi = _socp_w(x, prob, sigma)
        v = socp_violation(prob, wi)
        if v["bounds"] <= bound_tol and v["cone"] < best["cone"]:
            best.update(cone=v["cone"], w=wi, viol=v)
        return v["cone"] <= 0.5 * tol and v["bounds"] <= bound_tol

    res = _run(c, G, h, dims, s, _phase1_stop(h, accept, tol))
    w = _socp_point(res, prob, sigma)
    viol = socp_violation(prob, w)
    if not (viol["cone"] <= tol and viol["bounds"] <= bound_tol) and best["w"] is not None \
            and best["cone"] <= tol:
        w, viol = best["w"], best["viol"]
    margin = float(res.x[-1]) if res.status != "failure" else -viol["cone"]
    iters = res.iterations
    if not (viol["cone"] <= tol and viol["bounds"] <= bound_tol):
        verdict = _infeasible_verdict(res, tol)
        if verdict is None:
            return SolveReport(Status.NUMERICAL_FAILURE, iterations=iters, max_violation=viol["cone"], margin=margin)
        return SolveReport(
            Status.INFEASIBLE, iterations=iters, max_violation=viol["cone"], margin=margin, certified=verdict,
        )
    if prob.objective is Objective.FEASIBILITY:
        return SolveReport(Status.FEASIBLE, w=w, iterations=iters, max_violation=max(viol["cone"], 0.0), margin=margin)

    c2, G2, h2, dims2, _ = _socp_program(prob, phase1=False, relax=tol)
    res2 = _run(c2, G2, h2, dims2, s)
    iters += res2.iterations
    if res2.status != "failure":
        w2 = _socp_point(res2, prob, sigma)
        v2 = socp_violation(prob, w2)
        if v2["cone"] <= tol * (1 + 1e-6) and v2["bounds"] <= bound_tol:
            return SolveReport(
                Status.OPTIMAL, w=w2, iterations=iters, max_violation=max(v2["cone"], 0.0),
                margin=margin, objective_value=float(np.vdot(w2, w2).real),
            )
    return SolveReport(
        Status.FEASIBLE, w=w, iterations=iters, max_violation=max(viol["cone"], 0.0), margin=margin,
        objective_value=float(np.vdot(w, w).real),
    )
