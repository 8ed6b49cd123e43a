"""Correspondence analysis of two-way tables through the canonical LP copula."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .copula import canonical_svd, fit_exponential_copula
from .dist import ContingencyTable
from .errors import DataError
from .moments import LPComomentMatrix, lp_comoments

__all__ = ["CorrespondenceResult", "ShapeReport", "correspondence_analysis", "shape_match_report"]


@dataclass(frozen=True, eq=False)
class CorrespondenceResult:
    """Row and column profile coordinates.

    Attributes
    ----------
    row_coords : ndarray, shape (I, r)
        ``lambda_k phi_k(u_i)`` at the row mid-distribution values.
    col_coords : ndarray, shape (J, r)
        ``lambda_k psi_k(v_j)``.
    singular_values : ndarray
        All singular values, ``lambda`` (CA) or ``gamma`` (Goodman).
    inertia_share : ndarray, shape (r,)
        ``lambda_k^2 / sum lambda^2``.
    variant : {"ca", "goodman"}
    """

    row_coords: np.ndarray
    col_coords: np.ndarray
    singular_values: np.ndarray
    inertia_share: np.ndarray
    variant: str
    row_labels: tuple
    col_labels: tuple
    row_masses: np.ndarray
    col_masses: np.ndarray
    row_point_inertia: np.ndarray
    col_point_inertia: np.ndarray
    comoments: LPComomentMatrix
    U: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return self.row_coords.shape[1]

    @property
    def total_inertia(self) -> float:
        return float(np.sum(self.singular_values**2))

    def csv_rows(self):
        """Rows ``(label, kind, dim1..dimr, mass, inertia_share)``."""
        for lab, c, w, s in zip(self.row_labels, self.row_coords, self.row_masses, self.row_point_inertia):
            yield (lab, "row", *map(float, c), float(w), float(s))
        for lab, c, w, s in zip(self.col_labels, self.col_coords, self.col_masses, self.col_point_inertia):
            yield (lab, "col", *map(float, c), float(w), float(s))

    def csv_header(self):
        return ["label", "kind", *[f"dim{k + 1}" for k in range(self.rank)], "mass", "inertia_share"]

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "rank": self.rank,
            "singular_values": self.singular_values.tolist(),
            "inertia_share": self.inertia_share.tolist(),
            "row_coords": {l: c.tolist() for l, c in zip(self.row_labels, self.row_coords)},
            "col_coords": {l: c.tolist() for l, c in zip(self.col_labels, self.col_coords)},
        }


def _table(t) -> ContingencyTable:
    return t if isinstance(t, ContingencyTable) else ContingencyTable.from_array(t)


def correspondence_analysis(t, rank: int = 2, variant: str = "ca") -> CorrespondenceResult:
    """LP correspondence analysis.

    Parameters
    ----------
    t : ContingencyTable or array_like
    rank : int
        Number of map dimensions, at most ``min(I, J) - 1``.
    variant : {"ca", "goodman"}
        ``"ca"`` takes the SVD of the LP comoment matrix; ``"goodman"``
        takes the SVD of the interaction parameters of the saturated
        exponential copula (log-ratio profile coordinates).

    Raises
    ------
    NumericalError
        If the Goodman exponential fit does not converge.
    """
    t = _table(t)
    I, J = t.shape
    if variant not in ("ca", "goodman"):
        raise DataError(f"unknown variant {variant!r}; expected 'ca' or 'goodman'")
    if not 1 <= rank <= min(I, J) - 1:
        raise DataError(f"rank must lie in 1..{min(I, J) - 1}")
    cm = lp_comoments(t, m=(I - 1, J - 1))
    A = cm.entries if variant == "ca" else fit_exponential_copula(cm, selection="all").coef
    U, s, V = canonical_svd(A)
    phi = U.T @ cm.x_basis.table
    psi = V.T @ cm.y_basis.table
    rows_full = (s[:, None] * phi).T
    cols_full = (s[:, None] * psi).T
    total = np.sum(s**2)
    px, py = cm.x_basis.dist.masses, cm.y_basis.dist.masses
    share = lambda coords, w: w * np.sum(coords**2, axis=1) / total if total > 0 else np.zeros(w.size)
    return CorrespondenceResult(
        row_coords=rows_full[:, :rank],
        col_coords=cols_full[:, :rank],
        singular_values=s,
        inertia_share=s[:rank] ** 2 / total if total > 0 else np.zeros(rank),
        variant=variant,
        row_labels=t.row_labels,
        col_labels=t.col_labels,
        row_masses=px,
        col_masses=py,
        row_point_inertia=share(rows_full, px),
        col_point_inertia=share(cols_full, py),
        comoments=cm,
        U=U[:, :rank],
        V=V[:, :rank],
    )


@dataclass(frozen=True, eq=False)
class ShapeReport:
    """Per-category conditional comparison density coefficients.

    ``row_lp[i, k-1] = LP[k; Y | X = x_i]`` on the unit scores of Y, and
    ``row_canonical`` the same vector on the ``psi_k`` basis, which equals
    the profile coordinates.  Columns likewise.
    """

    row_lp: np.ndarray
    col_lp: np.ndarray
    row_canonical: np.ndarray
    col_canonical: np.ndarray
    row_labels: tuple
    col_labels: tuple


def shape_match_report(t, rank: int = 2) -> ShapeReport:
    """Conditional shape coefficients behind each correspondence coordinate."""
    res = correspondence_analysis(t, rank, "ca")
    cm = res.comoments
    tx, ty = cm.x_basis.table, cm.y_basis.table
    row_lp = tx.T @ cm.entries
    col_lp = ty.T @ cm.entries.T
    return ShapeReport(
        row_lp=row_lp,
        col_lp=col_lp,
        row_canonical=row_lp @ res.V,
        col_canonical=col_lp @ res.U,
        row_labels=res.row_labels,
        col_labels=res.col_labels,
    )
