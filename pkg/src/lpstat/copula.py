"""LP copula density models: L2 series, maximum-entropy exponential and canonical (SVD).

All three are built from an :class:`LPComomentMatrix`.  Densities are
evaluated on the unit square through the unit scores ``S_j(u; X)`` and
``S_k(v; Y)``, so discrete margins give checkerboard copulas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._maxent import fit_maxent
from .dist import ContingencyTable
from .errors import DataError
from .moments import LPComomentMatrix, lp_comoments

__all__ = [
    "CopulaModel",
    "CopulaSlice",
    "TwoByTwo",
    "fit_l2_copula",
    "fit_canonical_copula",
    "fit_exponential_copula",
    "copula_slice",
    "copula_grid",
    "two_by_two_identities",
    "canonical_svd",
]

# product supports larger than this are integrated by quadrature
EXACT_CELLS = 40_000


@dataclass(frozen=True, eq=False)
class CopulaModel:
    """Fitted copula density ``cop(u, v)``.

    Attributes
    ----------
    form : {"l2", "exp", "canonical"}
    comoments : LPComomentMatrix
    coef : ndarray, shape (m1, m2)
        L2 form: ``LP[j, k]`` on the selected entries, zero elsewhere.
        Exponential form: interaction parameters ``theta_jk``.
    selected : ndarray of bool, shape (m1, m2)
    singular_values, U, V : ndarray or None
        Canonical form: ``cop = 1 + sum_k lambda_k phi_k(u) psi_k(v)`` with
        ``phi_k = sum_j U[j, k] S_j(u)`` and ``psi_k = sum_l V[l, k] S_l(v)``.
    theta_x, theta_y : ndarray or None
        Exponential form: marginal score parameters.
    K : float
        Exponential form: log normaliser.
    """

    form: str
    comoments: LPComomentMatrix
    coef: np.ndarray
    selected: np.ndarray
    rule: str | None = None
    singular_values: np.ndarray | None = None
    U: np.ndarray | None = None
    V: np.ndarray | None = None
    theta_x: np.ndarray | None = None
    theta_y: np.ndarray | None = None
    K: float = 0.0
    iterations: int = 0

    @property
    def rank(self) -> int:
        return 0 if self.singular_values is None else self.singular_values.size

    def _scores(self, u, v):
        sx = self.comoments.x_basis.unit(np.atleast_1d(np.asarray(u, float)))
        sy = self.comoments.y_basis.unit(np.atleast_1d(np.asarray(v, float)))
        return sx, sy

    def _log_exp(self, sx, sy):
        inter = np.einsum("ja,jk,kb->ab", sx, self.coef, sy)
        return inter + (self.theta_x @ sx)[:, None] + (self.theta_y @ sy)[None, :] - self.K

    def grid(self, u, v) -> np.ndarray:
        """Density on the outer grid ``u x v``, shape ``(len(u), len(v))``."""
        sx, sy = self._scores(u, v)
        if self.form == "exp":
            return np.exp(self._log_exp(sx, sy))
        if self.form == "canonical":
            phi, psi = self.U.T @ sx, self.V.T @ sy
            return 1.0 + np.einsum("ka,k,kb->ab", phi, self.singular_values, psi)
        return 1.0 + sx.T @ self.coef @ sy

    def __call__(self, u, v) -> np.ndarray:
        """Density at paired points ``(u_i, v_i)``."""
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        sx, sy = self._scores(u.ravel(), v.ravel())
        if self.form == "exp":
            inter = np.einsum("ja,jk,ka->a", sx, self.coef, sy)
            out = np.exp(inter + self.theta_x @ sx + self.theta_y @ sy - self.K)
        elif self.form == "canonical":
            out = 1.0 + np.einsum("ka,k,ka->a", self.U.T @ sx, self.singular_values, self.V.T @ sy)
        else:
            out = 1.0 + np.einsum("ja,jk,ka->a", sx, self.coef, sy)
        return out.reshape(u.shape)

    def cell_density(self) -> np.ndarray:
        """Density on the ``kx x ky`` checkerboard cells of the margins."""
        tx, ty = self.comoments.x_basis.table, self.comoments.y_basis.table
        if self.form == "exp":
            return np.exp(self._log_exp(tx, ty))
        if self.form == "canonical":
            return 1.0 + np.einsum("ka,k,kb->ab", self.U.T @ tx, self.singular_values, self.V.T @ ty)
        return 1.0 + tx.T @ self.coef @ ty

    def total_mass(self) -> float:
        """``integral cop`` by exact sums over the checkerboard cells."""
        px, py = self.comoments.x_basis.dist.masses, self.comoments.y_basis.dist.masses
        return float(px @ self.cell_density() @ py)

    def phi(self, u) -> np.ndarray:
        """Canonical row functions ``phi_k(u)``, shape ``(r, len(u))``."""
        self._need_canonical()
        return self.U.T @ self.comoments.x_basis.unit(np.atleast_1d(np.asarray(u, float)))

    def psi(self, v) -> np.ndarray:
        self._need_canonical()
        return self.V.T @ self.comoments.y_basis.unit(np.atleast_1d(np.asarray(v, float)))

    def _need_canonical(self):
        if self.U is None:
            raise DataError(f"{self.form} copula has no canonical functions")

    def to_dict(self) -> dict:
        out = {"form": self.form, "rule": self.rule, "m": list(self.coef.shape)}
        if self.form == "canonical":
            out["singular_values"] = self.singular_values.tolist()
            out["U"] = self.U.tolist()
            out["V"] = self.V.tolist()
        else:
            out["coef"] = self.coef.tolist()
            out["selected"] = self.selected.tolist()
        if self.form == "exp":
            out["theta_x"] = self.theta_x.tolist()
            out["theta_y"] = self.theta_y.tolist()
            out["K"] = self.K
        return out


def _as_comoments(data, m=None) -> LPComomentMatrix:
    if isinstance(data, LPComomentMatrix):
        return data
    return lp_comoments(data, m=4 if m is None else m)


def _mask(cm: LPComomentMatrix, selection, n=None):
    if selection is None:
        selection = "threshold" if cm.n is not None else "all"
    if isinstance(selection, str):
        return cm.select(selection, n), selection
    mask = np.asarray(selection, dtype=bool)
    if mask.shape != cm.shape:
        raise DataError(f"selection mask has shape {mask.shape}, expected {cm.shape}")
    return mask, "mask"


def fit_l2_copula(cm, selection="threshold", m=None) -> CopulaModel:
    """L2 copula ``1 + sum_sel LP[j, k] S_j(u) S_k(v)``.

    Parameters
    ----------
    cm : LPComomentMatrix or table/joint data
    selection : str or boolean mask
        Rule name (see :func:`lpstat.selection.select`) or explicit mask.
        Data without a sample size default to ``"all"``.
    """
    cm = _as_comoments(cm, m)
    mask, rule = _mask(cm, None if isinstance(selection, str) and selection == "threshold" and cm.n is None else selection)
    return CopulaModel("l2", cm, np.where(mask, cm.entries, 0.0), mask, rule)


def canonical_svd(A: np.ndarray, rank: int | None = None):
    """SVD ``A = U diag(s) V^T`` with each column of ``U`` signed so its first
    nonzero entry is positive; truncated to `rank`."""
    U, s, Vt = np.linalg.svd(np.asarray(A, dtype=float), full_matrices=False)
    V = Vt.T
    for k in range(s.size):
        nz = np.flatnonzero(np.abs(U[:, k]) > 1e-12)
        if nz.size and U[nz[0], k] < 0:
            U[:, k] *= -1
            V[:, k] *= -1
    r = s.size if rank is None else rank
    if not 0 <= r <= s.size:
        raise DataError(f"rank {rank} outside 0..{s.size}")
    return U[:, :r], s[:r], V[:, :r]


def fit_canonical_copula(cm, rank: int | None = None, selection="all", m=None) -> CopulaModel:
    """Canonical copula ``1 + sum_k lambda_k phi_k(u) psi_k(v)`` from the SVD of the comoment matrix.

    Parameters
    ----------
    rank : int, optional
        Number of singular triples kept; at most ``min(m1, m2)``.
    selection : str or mask
        Entries entering the SVD; all of them by default.
    """
    cm = _as_comoments(cm, m)
    mask, rule = _mask(cm, selection)
    A = np.where(mask, cm.entries, 0.0)
    U, s, V = canonical_svd(A, rank)
    return CopulaModel("canonical", cm, A, mask, rule, singular_values=s, U=U, V=V)


def _unit_quadrature(cm: LPComomentMatrix, nodes: int = 64):
    x, w = np.polynomial.legendre.leggauss(nodes)
    u, w = (x + 1) / 2, w / 2
    return cm.x_basis.unit(u), cm.y_basis.unit(u), w, w


def fit_exponential_copula(cm, selection="threshold", m=None) -> CopulaModel:
    """Maximum-entropy copula ``exp(sum_sel theta_jk S_j S_k + sum theta_j S_j + sum theta_k S_k - K)``.

    The interaction parameters match the selected comoments and the
    marginal score terms keep every ``E[S_j]`` at 0.  ``K`` is an exact
    cell sum when the margins have at most 40000 joint cells, otherwise a
    64 x 64 Gauss-Legendre rule on the unit square.

    Raises
    ------
    NumericalError
        When Newton's method fails within 200 iterations.
    """
    cm = _as_comoments(cm, m)
    mask, rule = _mask(cm, None if isinstance(selection, str) and selection == "threshold" and cm.n is None else selection)
    bx, by = cm.x_basis, cm.y_basis
    if bx.dist.k * by.dist.k <= EXACT_CELLS:
        tx, ty, wx, wy = bx.table, by.table, bx.dist.masses, by.dist.masses
    else:
        tx, ty, wx, wy = _unit_quadrature(cm)
    m1, m2 = cm.shape
    jj, kk = np.nonzero(mask)
    a, b = tx.shape[1], ty.shape[1]
    # statistics on the product support: marginal scores then selected interactions
    F = np.concatenate(
        [
            np.repeat(tx.T, b, axis=0),
            np.tile(ty.T, (a, 1)),
            (tx[jj][:, :, None] * ty[kk][:, None, :]).reshape(jj.size, -1).T,
        ],
        axis=1,
    )
    w = np.outer(wx, wy).ravel()
    target = np.concatenate([np.zeros(m1 + m2), cm.entries[jj, kk]])
    theta, K, it = fit_maxent(F, w, target)
    coef = np.zeros((m1, m2))
    coef[jj, kk] = theta[m1 + m2 :]
    return CopulaModel(
        "exp", cm, coef, mask, rule, theta_x=theta[:m1], theta_y=theta[m1 : m1 + m2], K=K, iterations=it
    )


@dataclass(frozen=True, eq=False)
class CopulaSlice:
    """Conditional comparison density ``d(v; Y | X = Q(u; X))`` (or with roles swapped).

    ``coeffs[k-1] = LP[k; Y | X = Q(u; X)]`` multiply the unit scores of
    the free margin; for canonical models they are also available on the
    ``psi_k`` basis as ``canonical_coeffs = lambda_k phi_k(u)``.
    """

    u: float
    direction: str
    coeffs: np.ndarray
    model: CopulaModel
    canonical_coeffs: np.ndarray | None = None

    def __call__(self, v) -> np.ndarray:
        v = np.atleast_1d(np.asarray(v, float))
        if self.direction == "v":
            return self.model.grid([self.u], v)[0]
        return self.model.grid(v, [self.u])[:, 0]

    @property
    def lpinfor(self) -> float:
        """Conditional LPINFOR: squared norm of the slice coefficients."""
        return float(np.sum(self.coeffs**2))


def copula_slice(model: CopulaModel, u: float, direction: str = "v") -> CopulaSlice:
    """Slice of the copula at a fixed `u` (``direction="v"``) or fixed `v` (``"u"``)."""
    if direction not in ("u", "v"):
        raise DataError("direction must be 'u' or 'v'")
    cm = model.comoments
    if direction == "v":
        s = cm.x_basis.unit(np.atleast_1d(float(u)))[:, 0]
        A = model.coef if model.form != "canonical" else model.U @ np.diag(model.singular_values) @ model.V.T
        coeffs = s @ A if model.form != "exp" else s @ cm.entries
        canon = model.singular_values * (model.U.T @ s) if model.form == "canonical" else None
    else:
        s = cm.y_basis.unit(np.atleast_1d(float(u)))[:, 0]
        A = model.coef if model.form != "canonical" else model.U @ np.diag(model.singular_values) @ model.V.T
        coeffs = A @ s if model.form != "exp" else cm.entries @ s
        canon = model.singular_values * (model.V.T @ s) if model.form == "canonical" else None
    return CopulaSlice(float(u), direction, coeffs, model, canon)


def copula_grid(model: CopulaModel, size: int = 101):
    """Rows ``(u, v, density)`` on a ``size x size`` uniform grid of [0, 1]^2."""
    g = np.linspace(0.0, 1.0, size)
    dens = model.grid(g, g)
    uu, vv = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([uu.ravel(), vv.ravel(), dens.ravel()])


@dataclass(frozen=True)
class TwoByTwo:
    """Both sides of the 2 x 2 identities.

    ``lambda1 = |phi|`` (singular value vs Pearson phi coefficient) and
    ``gamma1 = |log delta| sqrt(P1+ P+1 P2+ P+2)`` (exponential-model
    singular value vs log odds ratio).  The gamma pair is None when a
    cell is empty, with the reason in `gamma_error`.
    """

    lambda1: float
    phi: float
    gamma1: float | None
    log_odds_term: float | None
    gamma_error: str | None = None


def two_by_two_identities(t) -> TwoByTwo:
    """Evaluate both sides of the 2 x 2 singular value identities."""
    t = t if isinstance(t, ContingencyTable) else ContingencyTable.from_array(t)
    if t.shape != (2, 2):
        raise DataError(f"expected a 2 x 2 table, got {t.shape}")
    P = t.probs
    r, c = P.sum(1), P.sum(0)
    scale = np.sqrt(r[0] * r[1] * c[0] * c[1])
    phi = abs(P[0, 0] * P[1, 1] - P[0, 1] * P[1, 0]) / scale
    cm = lp_comoments(t, m=1)
    lam = float(canonical_svd(cm.entries)[1][0])
    if np.any(P == 0):
        return TwoByTwo(lam, float(phi), None, None, "odds ratio undefined")
    log_delta = np.log(P[0, 0] * P[1, 1] / (P[0, 1] * P[1, 0]))
    exp_model = fit_exponential_copula(cm, selection="all")
    gamma = float(abs(exp_model.coef[0, 0]))
    return TwoByTwo(lam, float(phi), gamma, float(abs(log_delta) * scale))
