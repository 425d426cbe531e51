"""Primal log-barrier interior-point solver for smooth programs.

A program maximizes a linear objective c^T x subject to

  * finite box bounds lb <= x <= ub,
  * smooth inequality rows g_i(x) <= 0 grouped into constraint blocks
    that expose value / gradient / Hessian oracles on the few variables
    each row touches,
  * optionally an affine equality system E x = d (removed up front by a
    null-space change of variables).

The solve minimizes F_mu(x) = -c^T x + mu * phi(x) with phi the log
barrier over all rows and box sides, using damped Newton steps (Jacobi
scaling, Cholesky with a Tikhonov retry ladder so locally nonconvex rows
cannot derail the factorization) and Armijo backtracking that rejects any
step leaving the strict interior.  The line search also enforces a
fraction-to-boundary rule -- no slack may shrink by more than 100x in a
single step -- which keeps iterates near the central path; without it a
slack can collapse to machine epsilon and the barrier Hessian becomes
pure rounding noise.  mu follows the fixed schedule mu -> mu/10 until
mu * m_total <= tol.  No randomness anywhere: identical programs produce
bit-identical iterate sequences.

An infeasible starting point triggers a phase-1 program minimizing the
largest scaled violation; if even that cannot reach the interior the
program is reported infeasible.
"""

from __future__ import annotations

import numpy as np
from dataclasses import dataclass, field

STATUS_OPTIMAL = "optimal"
STATUS_MAX_ITERATIONS = "max-iterations"
STATUS_INFEASIBLE = "infeasible"
STATUS_NUMERICAL_FAILURE = "numerical-failure"

_ARMIJO_SLOPE = 0.25
_BACKTRACK = 0.5
_MIN_STEP = 1e-14
_BOUNDARY_FRACTION = 0.01
_TIKHONOV_LADDER = (0.0, 1e-11, 1e-9, 1e-7, 1e-5, 1e-3, 1e-1, 10.0)


class ConstraintBlock:
    """A family of smooth rows g(x) <= 0 sharing one sparsity pattern.

    ``idx`` has shape (m, w): row i reads/writes only x[idx[i]].  The
    oracles receive the gathered slice xw = x[idx] of shape (m, w).
    ``scale`` gives each row's natural magnitude, used for interiority
    checks and KKT reporting (barrier derivatives are scale-invariant).
    """

    name: str = "rows"

    def __init__(self, idx: np.ndarray, scale=1.0, name: str | None = None):
        self.idx = np.asarray(idx, dtype=np.intp)
        if self.idx.ndim != 2:
            raise ValueError("idx must be (m, w)")
        m = self.idx.shape[0]
        self.scale = np.broadcast_to(np.asarray(scale, dtype=float), (m,)).copy()
        if name is not None:
            self.name = name

    @property
    def m(self) -> int:
        return self.idx.shape[0]

    def values(self, xw: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grads(self, xw: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessians(self, xw: np.ndarray):
        """(m, w, w) array, or None for affine rows."""
        return None


class AffineBlock(ConstraintBlock):
    """Rows coeff . xw - rhs <= 0."""

    def __init__(self, idx, coeff, rhs, scale=1.0, name="affine"):
        super().__init__(idx, scale=scale, name=name)
        self.coeff = np.asarray(coeff, dtype=float)
        self.rhs = np.asarray(rhs, dtype=float)
        if self.coeff.shape != self.idx.shape or self.rhs.shape != (self.m,):
            raise ValueError("affine block shape mismatch")

    def values(self, xw):
        return np.einsum("mw,mw->m", self.coeff, xw) - self.rhs

    def grads(self, xw):
        return self.coeff


@dataclass
class SmoothProgram:
    """Declarative program handed to solve(): maximize c^T x."""

    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    x0: np.ndarray
    blocks: list = field(default_factory=list)
    eq_coeff: np.ndarray | None = None   # (p, n)
    eq_rhs: np.ndarray | None = None     # (p,)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        self.x0 = np.asarray(self.x0, dtype=float)
        n = self.c.shape[0]
        if not (self.lb.shape == self.ub.shape == self.x0.shape == (n,)):
            raise ValueError("c, lb, ub, x0 must share one length")
        if not (np.all(np.isfinite(self.lb)) and np.all(np.isfinite(self.ub))):
            raise ValueError("box bounds must be finite")
        if np.any(self.lb >= self.ub):
            raise ValueError("need lb < ub elementwise")

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def m_total(self) -> int:
        return 2 * self.n + sum(b.m for b in self.blocks)

    def row_values(self, x: np.ndarray) -> np.ndarray:
        if not self.blocks:
            return np.empty(0)
        return np.concatenate([b.values(x[b.idx]) for b in self.blocks])

    def row_scales(self) -> np.ndarray:
        if not self.blocks:
            return np.empty(0)
        return np.concatenate([b.scale for b in self.blocks])


@dataclass(frozen=True)
class SolveStatus:
    status: str
    kkt_residual: float
    iterations: int
    objective: float
    gap: float = 0.0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OPTIMAL


# ---------------------------------------------------------------------------
# Equality elimination
# ---------------------------------------------------------------------------


class _EliminatedBlock(ConstraintBlock):
    """Wraps a block of the original program under x = x_base + Z y."""

    def __init__(self, inner: ConstraintBlock, basis: np.ndarray, x_base: np.ndarray):
        k = basis.shape[1]
        idx = np.tile(np.arange(k, dtype=np.intp), (inner.m, 1))
        super().__init__(idx, scale=inner.scale, name=inner.name)
        self._inner = inner
        self._zsub = basis[inner.idx]          # (m, w, k)
        self._base = x_base[inner.idx]         # (m, w)

    def _lift(self, yw):
        # yw rows are identical copies of y; reconstruct inner slice
        return self._base + np.einsum("mwk,mk->mw", self._zsub, yw)

    def values(self, yw):
        return self._inner.values(self._lift(yw))

    def grads(self, yw):
        g = self._inner.grads(self._lift(yw))
        return np.einsum("mw,mwk->mk", g, self._zsub)

    def hessians(self, yw):
        h = self._inner.hessians(self._lift(yw))
        if h is None:
            return None
        return np.einsum("mvk,mvw,mwl->mkl", self._zsub, h, self._zsub)


def _eliminate_equalities(prog: SmoothProgram):
    """Return (reduced program in y, lift) with x = x_part + Z y."""
    e = np.atleast_2d(np.asarray(prog.eq_coeff, dtype=float))
    d = np.atleast_1d(np.asarray(prog.eq_rhs, dtype=float))
    resid = e @ prog.x0 - d
    if np.linalg.norm(resid, ord=np.inf) > 1e-8:
        raise ValueError("x0 violates the affine equalities beyond 1e-8")
    _, sv, vt = np.linalg.svd(e, full_matrices=True)
    rank = int(np.sum(sv > max(1e-12, 1e-10 * (sv[0] if sv.size else 0.0))))
    basis = vt[rank:].T                       # (n, k)
    k = basis.shape[1]
    if k == 0:
        raise ValueError("equalities fix every variable; nothing to solve")
    x_base = prog.x0.copy()

    span = float(np.linalg.norm(prog.ub - prog.lb)) + 1.0
    blocks = [_EliminatedBlock(b, basis, x_base) for b in prog.blocks]
    # original boxes become affine rows in y
    all_idx = np.tile(np.arange(k, dtype=np.intp), (prog.n, 1))
    box_scale = np.maximum(prog.ub - prog.lb, 1.0)
    blocks.append(AffineBlock(all_idx, basis, prog.ub - x_base,
                              scale=box_scale, name="box-upper"))
    blocks.append(AffineBlock(all_idx, -basis, x_base - prog.lb,
                              scale=box_scale, name="box-lower"))
    red = SmoothProgram(
        c=basis.T @ prog.c,
        lb=np.full(k, -2.0 * span),
        ub=np.full(k, 2.0 * span),
        x0=np.zeros(k),
        blocks=blocks,
    )

    def lift(y):
        return x_base + basis @ y

    return red, lift, float(prog.c @ x_base)


# ---------------------------------------------------------------------------
# Barrier machinery
# ---------------------------------------------------------------------------


class _Workspace:
    def __init__(self, prog: SmoothProgram):
        self.prog = prog
        n = prog.n
        self.flat = []
        for b in prog.blocks:
            idx = b.idx
            self.flat.append((idx[:, :, None] * n + idx[:, None, :]).ravel())

    def interior(self, x) -> bool:
        p = self.prog
        if np.any(x <= p.lb) or np.any(x >= p.ub):
            return False
        for b in p.blocks:
            if np.any(b.values(x[b.idx]) >= 0.0):
                return False
        return True

    def barrier_value(self, x, mu) -> float:
        """F_mu(x); +inf outside the strict interior."""
        return self.barrier_and_slacks(x, mu)[0]

    def barrier_and_slacks(self, x, mu):
        """(F_mu(x), concatenated slack vector); (+inf, None) outside."""
        p = self.prog
        lo = x - p.lb
        hi = p.ub - x
        if np.any(lo <= 0.0) or np.any(hi <= 0.0):
            return np.inf, None
        phi = -np.sum(np.log(lo)) - np.sum(np.log(hi))
        parts = [lo, hi]
        for b in p.blocks:
            g = b.values(x[b.idx])
            if np.any(g >= 0.0):
                return np.inf, None
            phi -= np.sum(np.log(-g / b.scale))
            parts.append(-g)
        return float(-(p.c @ x) + mu * phi), np.concatenate(parts)

    def grad_hess(self, x, mu):
        p = self.prog
        n = p.n
        grad = -p.c.copy()
        hess = np.zeros((n, n))
        lo = x - p.lb
        hi = p.ub - x
        grad += mu * (1.0 / hi - 1.0 / lo)
        diag = mu * (1.0 / (lo * lo) + 1.0 / (hi * hi))
        hess[np.arange(n), np.arange(n)] += diag
        for b, flat in zip(p.blocks, self.flat):
            xw = x[b.idx]
            g = b.values(xw)
            gr = b.grads(xw)
            r = -1.0 / g                       # positive in the interior
            np.add.at(grad, b.idx.ravel(), (gr * (mu * r)[:, None]).ravel())
            contrib = (mu * r * r)[:, None, None] * (gr[:, :, None] * gr[:, None, :])
            hi_blk = b.hessians(xw)
            if hi_blk is not None:
                contrib = contrib + (mu * r)[:, None, None] * hi_blk
            np.add.at(hess.ravel(), flat, contrib.ravel())
        return grad, hess


def _newton_direction(hess, grad, scaling):
    """Scaled Cholesky solve with a Tikhonov retry ladder."""
    hs = hess * scaling[:, None] * scaling[None, :]
    gs = grad * scaling
    eye = np.arange(hs.shape[0])
    base = float(np.max(np.abs(np.diag(hs)))) or 1.0
    for tau in _TIKHONOV_LADDER:
        try:
            reg = hs if tau == 0.0 else hs + np.diag(np.full(hs.shape[0], tau * base))
            chol = np.linalg.cholesky(reg)
        except np.linalg.LinAlgError:
            continue
        ps = -np.linalg.solve(chol.T, np.linalg.solve(chol, gs))
        decrement = float(-gs @ ps)
        return ps * scaling, decrement
    return None, 0.0


def solve(prog: SmoothProgram, tol: float = 1e-8, *, mu0: float = 1e-2,
          mu_factor: float = 10.0, max_newton: int = 60, max_stages: int = 40,
          trace=None, _phase1_depth: int = 0):
    """Minimize the barrier family; returns (x, SolveStatus).

    ``trace`` may be a file-like object or a path; one CSV line
    (iteration, mu, objective, residual) is written per Newton step.
    """
    if isinstance(trace, (str, bytes)) or hasattr(trace, "__fspath__"):
        with open(trace, "w", encoding="utf-8") as fh:
            fh.write("# schema=1\n")
            fh.write("newton_iter,mu,objective,decrement\n")
            return solve(prog, tol, mu0=mu0, mu_factor=mu_factor,
                         max_newton=max_newton, max_stages=max_stages,
                         trace=fh, _phase1_depth=_phase1_depth)
    if prog.eq_coeff is not None:
        red, lift, obj_shift = _eliminate_equalities(prog)
        y, st = solve(red, tol, mu0=mu0, mu_factor=mu_factor,
                      max_newton=max_newton, max_stages=max_stages, trace=trace)
        x = lift(y)
        return x, SolveStatus(st.status, st.kkt_residual, st.iterations,
                              float(prog.c @ x), st.gap, st.message)

    ws = _Workspace(prog)
    x = np.clip(prog.x0, prog.lb + 1e-12 * (prog.ub - prog.lb),
                prog.ub - 1e-12 * (prog.ub - prog.lb))
    if not ws.interior(x):
        if _phase1_depth > 0:
            return x, SolveStatus(STATUS_INFEASIBLE, np.inf, 0,
                                  float(prog.c @ x), np.inf,
                                  "phase-1 start infeasible")
        x, ok = _phase1(prog, x, tol)
        if not ok:
            return x, SolveStatus(STATUS_INFEASIBLE, np.inf, 0,
                                  float(prog.c @ x), np.inf,
                                  "no strictly feasible point found")

    scaling = 1.0 / np.maximum(np.abs(x), 1.0)
    m_total = prog.m_total
    mu = mu0
    total_newton = 0
    status = STATUS_OPTIMAL
    message = ""
    stages = max(1, int(np.ceil(np.log(mu0 * m_total / tol) / np.log(mu_factor))) + 1)
    if stages > max_stages:
        stages = max_stages
        status = STATUS_MAX_ITERATIONS
        message = "barrier schedule truncated"

    stalled = False
    for _stage in range(stages):
        f_cur, s_cur = ws.barrier_and_slacks(x, mu)
        converged = False
        for _it in range(max_newton):
            grad, hess = ws.grad_hess(x, mu)
            step, decrement = _newton_direction(hess, grad, scaling)
            if step is None:
                return x, SolveStatus(STATUS_NUMERICAL_FAILURE, np.inf, total_newton,
                                      float(prog.c @ x), mu * m_total,
                                      "factorization failed at every regularization")
            total_newton += 1
            if trace is not None:
                trace.write(f"{total_newton},{mu:.6e},{float(prog.c @ x):.12g},"
                            f"{decrement:.6e}\n")
            if decrement / 2.0 <= max(5e-3 * mu, 1e-13 * max(1.0, abs(f_cur)), 1e-15):
                converged = True
                break
            slope = float(grad @ step)
            # fraction-to-boundary guard: no slack may collapse by more
            # than 100x in one step, else the iterate leaves the central
            # path and the barrier Hessian turns to numerical noise
            guard = _BOUNDARY_FRACTION * s_cur
            t = 1.0
            while t >= _MIN_STEP:
                f_new, s_new = ws.barrier_and_slacks(x + t * step, mu)
                if (f_new <= f_cur + _ARMIJO_SLOPE * t * slope
                        and np.all(s_new >= guard)):
                    break
                t *= _BACKTRACK
            if t < _MIN_STEP:
                return x, SolveStatus(STATUS_NUMERICAL_FAILURE, np.inf, total_newton,
                                      float(prog.c @ x), mu * m_total,
                                      "line search stalled")
            x = x + t * step
            f_cur, s_cur = f_new, s_new
        if not converged:
            stalled = True
        mu /= mu_factor
    mu_final = mu * mu_factor
    gap = mu_final * m_total
    res = kkt_residual(prog, x)
    if status == STATUS_OPTIMAL and stalled and res > max(1e-5, 10.0 * tol):
        status = STATUS_MAX_ITERATIONS
        message = "newton budget exhausted before stage convergence"
    return x, SolveStatus(status, res, total_newton, float(prog.c @ x), gap, message)


def _phase1(prog: SmoothProgram, x_start, tol):
    """Minimize the largest scaled violation; returns (interior x, ok)."""
    n = prog.n

    class _Shifted(ConstraintBlock):
        def __init__(self, inner):
            idx = np.concatenate([inner.idx, np.full((inner.m, 1), n, dtype=np.intp)],
                                 axis=1)
            super().__init__(idx, scale=inner.scale, name=inner.name)
            self._inner = inner

        def values(self, xw):
            return self._inner.values(xw[:, :-1]) - xw[:, -1] * self.scale

        def grads(self, xw):
            g = self._inner.grads(xw[:, :-1])
            return np.concatenate([g, -self.scale[:, None]], axis=1)

        def hessians(self, xw):
            h = self._inner.hessians(xw[:, :-1])
            if h is None:
                return None
            out = np.zeros(h.shape[:1] + (h.shape[1] + 1, h.shape[2] + 1))
            out[:, :-1, :-1] = h
            return out

    worst = 0.0
    for b in prog.blocks:
        g = b.values(x_start[b.idx]) / b.scale
        worst = max(worst, float(np.max(g)) if g.size else 0.0)
    s0 = worst * 1.5 + 0.1
    aug = SmoothProgram(
        c=np.concatenate([np.zeros(n), [-1.0]]),
        lb=np.concatenate([prog.lb, [-1.0]]),
        ub=np.concatenate([prog.ub, [s0 + 1.0]]),
        x0=np.concatenate([x_start, [s0]]),
        blocks=[_Shifted(b) for b in prog.blocks],
    )
    y, st = solve(aug, max(tol, 1e-10), _phase1_depth=1)
    x = y[:-1]
    ws = _Workspace(prog)
    return x, bool(y[-1] < 0.0 and ws.interior(x))


# ---------------------------------------------------------------------------
# KKT residual
# ---------------------------------------------------------------------------


def _nnls(a: np.ndarray, b: np.ndarray, iters: int = 200) -> np.ndarray:
    """Lawson-Hanson nonnegative least squares: min ||a @ lam - b||, lam >= 0."""
    m = a.shape[1]
    lam = np.zeros(m)
    passive: list[int] = []
    w = a.T @ (b - a @ lam)
    for _ in range(iters):
        candidates = [j for j in range(m) if j not in passive and w[j] > 1e-12]
        if not candidates:
            break
        passive.append(max(candidates, key=lambda j: w[j]))
        while True:
            sub = a[:, passive]
            z, *_ = np.linalg.lstsq(sub, b, rcond=None)
            if np.all(z > 0.0):
                lam[:] = 0.0
                lam[passive] = z
                break
            cur = lam[passive]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(z <= 0.0, cur / (cur - z), np.inf)
            alpha = float(np.min(ratios))
            cur = cur + alpha * (z - cur)
            lam[:] = 0.0
            lam[passive] = np.maximum(cur, 0.0)
            passive = [j for j, v in zip(passive, cur) if v > 1e-12]
            if not passive:
                break
        w = a.T @ (b - a @ lam)
    return lam


def kkt_residual(prog: SmoothProgram, x: np.ndarray,
                 active_width: float = 1e-5) -> float:
    """Stationarity + complementarity + feasibility at ``x``.

    Multipliers for near-active rows are fitted by nonnegative least
    squares; zero at an exact KKT point of a convex program.
    """
    x = np.asarray(x, dtype=float)
    n = prog.n
    cols = []
    slacks = []
    feas = 0.0
    for b in prog.blocks:
        xw = x[b.idx]
        g = b.values(xw) / b.scale
        feas = max(feas, float(np.max(g)) if g.size else 0.0)
        near = np.nonzero(g >= -active_width)[0]
        if near.size:
            gr = b.grads(xw)[near]
            full = np.zeros((near.size, n))
            rows = np.repeat(np.arange(near.size), b.idx.shape[1])
            full[rows, b.idx[near].ravel()] = gr.ravel()
            cols.append(full)
            slacks.append(np.abs(g[near]))
    span = np.maximum(prog.ub - prog.lb, 1e-12)
    hi = (x - prog.ub) / span
    lo = (prog.lb - x) / span
    feas = max(feas, float(np.max(hi)), float(np.max(lo)))
    for sgn, vals in ((1.0, hi), (-1.0, lo)):
        near = np.nonzero(vals >= -active_width)[0]
        if near.size:
            full = np.zeros((near.size, n))
            full[np.arange(near.size), near] = sgn / span[near]
            cols.append(full)
            slacks.append(np.abs(vals[near]))
    c_norm = max(1.0, float(np.linalg.norm(prog.c, ord=np.inf)))
    if cols:
        a = np.vstack(cols).T                  # (n, k)
        lam = _nnls(a, prog.c)
        stationarity = float(np.linalg.norm(prog.c - a @ lam, ord=np.inf)) / c_norm
        complementarity = float(lam @ np.concatenate(slacks)) / c_norm
    else:
        stationarity = float(np.linalg.norm(prog.c, ord=np.inf)) / c_norm if n else 0.0
        complementarity = 0.0
    return stationarity + complementarity + max(0.0, feas)
