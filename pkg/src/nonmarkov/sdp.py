"""Self-contained dense semidefinite-program solver for Hermitian
block-diagonal programs.

Standard form (sense "min"):

    minimize   <C, X>
    subject to <A_i, X> = b_i   (i = 1..m),   X >= 0 (block diagonal)

with Hermitian C, A_i and <A, B> = Tr(A B).  "max" negates the objective
internally.  The solver embeds every Hermitian block into a real symmetric
block of doubled dimension and runs a primal-dual path-following iteration
(HKM direction, Mehrotra predictor-corrector, fraction-to-boundary 0.98).
Identity-scaled start; Cholesky failures retry with escalating
regularization.  Everything is deterministic: identical problems produce
identical iterate sequences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import linalg

DEFAULT_MAX_ITER = 200
FRACTION_TO_BOUNDARY = 0.98

# Exit thresholds aimed below the advertised solution guarantees
# (feasibility 1e-8 * max(1, |b_i|), gap 1e-8 * (1 + |primal|)).
TOL_GAP = 1e-9
TOL_FEAS = 1e-10

# Residual stagnation/divergence window for infeasibility reporting.
DIVERGE_WINDOW = 30


class SdpError(RuntimeError):
    """Solve aborted: returned status was not usable by the caller."""


@dataclass(frozen=True)
class SdpProblem:
    """Hermitian block-diagonal SDP in standard form."""

    blocks: list
    C: list
    constraints: list  # [(list_of_blocks, b_i), ...]
    sense: str = "min"

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        if not self.blocks or any(n < 1 for n in self.blocks):
            raise ValueError("block dimensions must be positive")
        if len(self.C) != len(self.blocks):
            raise ValueError("objective must provide one block per block dimension")
        cs = [_check_herm_block(c, n) for c, n in zip(self.C, self.blocks)]
        object.__setattr__(self, "C", cs)
        checked = []
        for a_blocks, b in self.constraints:
            if len(a_blocks) != len(self.blocks):
                raise ValueError("constraint must provide one block per block dimension")
            checked.append(
                (
                    [_check_herm_block(a, n) for a, n in zip(a_blocks, self.blocks)],
                    float(b),
                )
            )
        object.__setattr__(self, "constraints", checked)

    @property
    def m(self) -> int:
        return len(self.constraints)

    def to_json(self) -> str:
        def enc(mat):
            return {"re": mat.real.tolist(), "im": mat.imag.tolist()}

        return json.dumps(
            {
                "blocks": [int(n) for n in self.blocks],
                "C": [enc(c) for c in self.C],
                "A": [[enc(a) for a in ab] for ab, _ in self.constraints],
                "b": [b for _, b in self.constraints],
                "sense": self.sense,
            }
        )

    @staticmethod
    def from_json(text: str) -> "SdpProblem":
        doc = json.loads(text)

        def dec(obj):
            return np.array(obj["re"], dtype=np.float64) + 1j * np.array(
                obj["im"], dtype=np.float64
            )

        return SdpProblem(
            blocks=[int(n) for n in doc["blocks"]],
            C=[dec(c) for c in doc["C"]],
            constraints=[
                (list(map(dec, ab)), b) for ab, b in zip(doc["A"], doc["b"])
            ],
            sense=doc.get("sense", "min"),
        )


def _check_herm_block(mat, n: int) -> np.ndarray:
    a = linalg.as_matrix(mat)
    if a.shape != (n, n):
        raise ValueError(f"block shape {a.shape} does not match declared dim {n}")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if float(np.abs(a - a.conj().T).max(initial=0.0)) > 1e-12 * scale:
        raise ValueError("SDP data blocks must be Hermitian within 1e-12")
    return (a + a.conj().T) / 2


@dataclass(frozen=True)
class SdpSolution:
    X: list
    y: np.ndarray
    Z: list
    primal_value: float
    dual_value: float
    gap: float
    status: str
    iterations: int
    primal_residual: float = 0.0
    dual_residual: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def hermitian_basis(dim: int) -> list:
    """Orthogonal (unnormalized) basis of dim x dim Hermitian matrices.

    dim^2 elements: diagonal units, symmetric pairs, antisymmetric pairs.
    Used to turn a Hermitian operator equality into real scalar constraints.
    """
    out = []
    for i in range(dim):
        e = np.zeros((dim, dim), dtype=np.complex128)
        e[i, i] = 1.0
        out.append(e)
    for i in range(dim):
        for j in range(i + 1, dim):
            e = np.zeros((dim, dim), dtype=np.complex128)
            e[i, j] = 1.0
            e[j, i] = 1.0
            out.append(e)
            f = np.zeros((dim, dim), dtype=np.complex128)
            f[i, j] = 1j
            f[j, i] = -1j
            out.append(f)
    return out


def embed_hermitian(h) -> np.ndarray:
    """[[Re h, -Im h], [Im h, Re h]]: eigenvalues duplicate, inner products
    of embedded pairs scale by exactly 2 (accounted for during assembly)."""
    a = linalg.as_matrix(h)
    re, im = a.real, a.imag
    top = np.hstack([re, -im])
    bot = np.hstack([im, re])
    return np.vstack([top, bot])


def _unembed(y: np.ndarray) -> np.ndarray:
    """Project a symmetric doubled matrix back to the Hermitian block."""
    n = y.shape[0] // 2
    re = (y[:n, :n] + y[n:, n:]) / 2
    im = (y[n:, :n] - y[n:, :n].T) / 2
    return re + 1j * im


def _inner(xs, ys) -> float:
    return float(sum(np.tensordot(a, b, axes=2) for a, b in zip(xs, ys)))


def _frob(xs) -> float:
    return float(np.sqrt(sum(np.sum(a * a) for a in xs)))


def solve(problem: SdpProblem, max_iter: int = DEFAULT_MAX_ITER,
          tol_gap: float = TOL_GAP, tol_feas: float = TOL_FEAS) -> SdpSolution:
    """Run the interior-point iteration; see the module docstring."""
    sign = 1.0 if problem.sense == "min" else -1.0
    dims = [2 * n for n in problem.blocks]
    n_total = sum(dims)
    c_blocks = [sign * embed_hermitian(c) for c in problem.C]
    a_rows = [[embed_hermitian(a) for a in ab] for ab, _ in problem.constraints]
    b = np.array([2.0 * bi for _, bi in problem.constraints])
    m = len(a_rows)
    if m == 0:
        raise ValueError("the solver requires at least one constraint")

    # Constraint independence check (rank-deficiency is an input error).
    gram = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            gram[i, j] = gram[j, i] = _inner(a_rows[i], a_rows[j])
    gw = np.linalg.eigvalsh(gram)
    if gw[0] <= 1e-12 * max(1.0, gw[-1]):
        raise ValueError(
            f"constraints are linearly dependent (Gram eigenvalue {gw[0]:.3e})"
        )

    def a_op(xs):
        return np.array([_inner(row, xs) for row in a_rows])

    def at_op(y):
        return [
            sum(y[i] * a_rows[i][bi] for i in range(m))
            for bi in range(len(dims))
        ]

    # Identity-scaled start from problem norms.
    a_norms = [max(_frob(row), 1e-12) for row in a_rows]
    xi = max(10.0, np.sqrt(n_total), float(np.max(np.abs(b) / (1.0 + np.array(a_norms)))) * n_total)
    eta = max(10.0, np.sqrt(n_total), _frob(c_blocks), max(a_norms))
    x = [xi * np.eye(d) for d in dims]
    z = [eta * np.eye(d) for d in dims]
    y = np.zeros(m)

    def values():
        pv = sign * _inner(c_blocks, x) / 2.0
        dv = sign * float(b @ y) / 2.0
        return pv, dv

    def residuals():
        rp = b - a_op(x)
        aty = at_op(y)
        rd = [c_blocks[i] - z[i] - aty[i] for i in range(len(dims))]
        return rp, rd

    def herm_feas(rp):
        # per-constraint residual on the Hermitian (non-doubled) scale
        return max(
            abs(rp[i]) / 2.0 / max(1.0, abs(b[i]) / 2.0) for i in range(m)
        )

    status = "max_iter"
    it = 0
    res_history = []
    for it in range(1, max_iter + 1):
        rp, rd = residuals()
        mu = _inner(x, z) / n_total
        pv, dv = values()
        gap = (pv - dv) if problem.sense == "min" else (dv - pv)
        p_res = herm_feas(rp)
        d_res = max(float(np.abs(r).max(initial=0.0)) for r in rd) / max(1.0, _frob(c_blocks))
        res_history.append(p_res + d_res)

        if (
            p_res <= 1e-8 * 0.1
            and d_res <= 1e-8 * 0.1
            and abs(gap) <= tol_gap * (1.0 + abs(pv))
            and gap >= -1e-10
        ) or (
            p_res <= tol_feas and d_res <= tol_feas and gap <= tol_gap * (1.0 + abs(pv)) and gap >= -1e-10
        ):
            status = "optimal"
            break

        # Infeasibility reporting.  Primary signal: the dual variables run
        # off along a ray with positive objective and (approximately)
        # negative-semidefinite AT(y) -- a Farkas certificate.  Fallback:
        # the normalized residuals diverged over a full window.
        ynorm = float(np.linalg.norm(y))
        if ynorm > 1e6 and float(b @ y) > 1e-8 * ynorm:
            ray = at_op(y / ynorm)
            ray_max = max(float(np.linalg.eigvalsh(r).max()) for r in ray)
            if ray_max <= 1e-7:
                status = "infeasible-detected"
                break
        if it > DIVERGE_WINDOW:
            recent = min(res_history[-DIVERGE_WINDOW:])
            earlier = min(res_history[:-DIVERGE_WINDOW])
            if recent > 10.0 * earlier + 1e-12 and recent > 1e-6:
                status = "infeasible-detected"
                break
        if not (np.isfinite(mu) and np.isfinite(ynorm)):
            status = "numerical-failure"
            break

        try:
            lx = [np.linalg.cholesky(xb) for xb in x]
        except np.linalg.LinAlgError:
            status = "numerical-failure"
            break
        zinv = []
        ok = True
        for zb in z:
            try:
                lz = np.linalg.cholesky(zb)
            except np.linalg.LinAlgError:
                ok = False
                break
            inv_l = np.linalg.inv(lz)
            zinv.append(inv_l.T @ inv_l)
        if not ok:
            status = "numerical-failure"
            break

        # Schur complement M[i, j] = <A_i, X A_j Z^{-1}>
        schur = np.empty((m, m))
        t_cache = []
        for j in range(m):
            t_cache.append([x[bi] @ a_rows[j][bi] @ zinv[bi] for bi in range(len(dims))])
        for i in range(m):
            for j in range(m):
                schur[i, j] = _inner(a_rows[i], t_cache[j])
        schur = (schur + schur.T) / 2

        chol = None
        base = max(float(np.trace(schur)) / m, 1.0)
        reg = 0.0
        for _ in range(4):
            try:
                chol = np.linalg.cholesky(schur + reg * np.eye(m))
                break
            except np.linalg.LinAlgError:
                reg = base * 1e-14 if reg == 0.0 else reg * 1e4
        if chol is None:
            status = "numerical-failure"
            break

        def schur_solve(rhs):
            return np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))

        def newton(sigma_mu, corr):
            """Solve for (dx, dy, dz) given centering target and corrector."""
            rhs = rp.copy()
            for bi in range(len(dims)):
                targ = sigma_mu * zinv[bi] - x[bi]
                if corr is not None:
                    targ = targ - corr[bi] @ zinv[bi]
                targ = targ - x[bi] @ rd[bi] @ zinv[bi]
                rhs -= np.array([np.tensordot(a_rows[i][bi], targ, axes=2) for i in range(m)])
            dy = schur_solve(rhs)
            dz = [rd[bi] - sum(dy[i] * a_rows[i][bi] for i in range(m)) for bi in range(len(dims))]
            dx = []
            for bi in range(len(dims)):
                t = sigma_mu * zinv[bi] - x[bi] - x[bi] @ dz[bi] @ zinv[bi]
                if corr is not None:
                    t = t - corr[bi] @ zinv[bi]
                dx.append((t + t.T) / 2)
            return dx, dy, dz

        def max_step(mats, dmats, chols):
            alpha = 1.0
            for bi in range(len(dims)):
                w = np.linalg.solve(chols[bi], dmats[bi])
                w = np.linalg.solve(chols[bi], w.T).T
                lam = float(np.linalg.eigvalsh((w + w.T) / 2)[0])
                if lam < -1e-14:
                    alpha = min(alpha, -1.0 / lam)
            return alpha

        try:
            lz_chols = [np.linalg.cholesky(zb) for zb in z]

            # Predictor
            dxa, dya, dza = newton(0.0, None)
            ap = max_step(x, dxa, lx)
            ad = max_step(z, dza, lz_chols)
            xa = [x[bi] + min(1.0, ap) * dxa[bi] for bi in range(len(dims))]
            za = [z[bi] + min(1.0, ad) * dza[bi] for bi in range(len(dims))]
            mu_aff = _inner(xa, za) / n_total
            sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))

            # Corrector
            corr = [dxa[bi] @ dza[bi] for bi in range(len(dims))]
            dx, dy, dz = newton(sigma * mu, corr)
            ap = min(1.0, FRACTION_TO_BOUNDARY * max_step(x, dx, lx))
            ad = min(1.0, FRACTION_TO_BOUNDARY * max_step(z, dz, lz_chols))
        except np.linalg.LinAlgError:
            status = "numerical-failure"
            break

        x = [x[bi] + ap * dx[bi] for bi in range(len(dims))]
        z = [z[bi] + ad * dz[bi] for bi in range(len(dims))]
        y = y + ad * dy
        x = [(xb + xb.T) / 2 for xb in x]
        z = [(zb + zb.T) / 2 for zb in z]

    rp, rd = residuals()
    pv, dv = values()
    gap = (pv - dv) if problem.sense == "min" else (dv - pv)
    x_h = [_unembed(xb) for xb in x]
    z_h = [_unembed(zb) for zb in z]
    return SdpSolution(
        X=x_h,
        y=y.copy(),
        Z=z_h,
        primal_value=pv,
        dual_value=dv,
        gap=gap,
        status=status,
        iterations=it,
        primal_residual=herm_feas(rp),
        dual_residual=max(float(np.abs(r).max(initial=0.0)) for r in rd),
    )
