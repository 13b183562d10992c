"""Offset reconstruction from a (possibly non-integrable) gradient field.

The estimated gradient field is generally not the exact gradient of any
grid, so the reconstruction is the least-squares minimizer of
``||grad(u) - g||_2`` over zero-mean grids ``u``.  Its stationarity
condition is a Poisson equation ``L u = div(g)`` where ``L`` is the 5-point
Laplacian with Neumann boundary conditions.  The divergence below is the
exact adjoint of the forward differences, which makes ``L = div(grad(.))``
hold identically and the cosine-basis eigenvalues exact:

    L cos-mode(k,l) = (2 cos(pi k / H) + 2 cos(pi l / W) - 4) cos-mode(k,l)

so the solve is a forward DCT-II, a per-mode division, and an inverse
transform.  The free additive constant is fixed by the zero-mean
convention.  A dense least-squares oracle over the same operator is
provided for verification at test scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .dither import GradientField
from .grid import _as_grid
from .sensor import OffsetMap
from .formats import write_pfm, write_sidecar

__all__ = [
    "DivergenceMap",
    "ReconstructionReport",
    "divergence",
    "solve_poisson_dct",
    "reconstruct_offset",
    "dense_lsq_oracle",
    "save_reconstruction",
]

DENSE_ORACLE_MAX_CELLS = 4096


@dataclass(frozen=True, eq=False)
class DivergenceMap:
    """Discrete divergence of a gradient field, same ``H x W`` as the target."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid(self.values, 2, 2, "DivergenceMap"))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True, eq=False)
class ReconstructionReport:
    """Reconstructed zero-mean offset plus the gradient-fit residual."""

    offset: OffsetMap
    residual_norm: float
    dc_convention: str = field(default="zero-mean")


def divergence(g: GradientField) -> DivergenceMap:
    """Adjoint-consistent divergence of a gradient field.

    Backward difference of dx along columns plus backward difference of dy
    along rows, one-sided at the boundaries: the contribution of dx at
    ``(i,0)`` is ``dx(i,0)``, at ``(i,W-1)`` it is ``-dx(i,W-2)``, interior
    cells get ``dx(i,j) - dx(i,j-1)``; dy analogously over rows.
    """
    h, w = g.shape
    out = np.zeros((h, w))
    dx, dy = g.dx.values, g.dy.values
    out[:, :-1] += dx
    out[:, 1:] -= dx
    out[:-1, :] += dy
    out[1:, :] -= dy
    return DivergenceMap(out)


def _neumann_eigenvalues(h: int, w: int) -> np.ndarray:
    k = np.arange(h)[:, None]
    l = np.arange(w)[None, :]
    return 2.0 * np.cos(np.pi * k / h) + 2.0 * np.cos(np.pi * l / w) - 4.0


def solve_poisson_dct(d: DivergenceMap) -> OffsetMap:
    """Solve ``L u = d - mean(d)`` for the unique zero-mean ``u``.

    Forward type-II DCT, spectral division by the Neumann-Laplacian
    eigenvalues (the zero mode is pinned to zero), inverse transform.
    """
    h, w = d.shape
    rhs = d.values - d.values.mean()
    coeffs = scipy.fft.dctn(rhs, type=2, norm="ortho")
    lam = _neumann_eigenvalues(h, w)
    lam[0, 0] = 1.0  # placeholder; the DC coefficient is zeroed below
    coeffs /= lam
    coeffs[0, 0] = 0.0
    u = scipy.fft.idctn(coeffs, type=2, norm="ortho")
    u -= u.mean()
    return OffsetMap(u, compensated=True)


def _gradient_residual_rms(u: np.ndarray, g: GradientField) -> float:
    rx = np.diff(u, axis=1) - g.dx.values
    ry = np.diff(u, axis=0) - g.dy.values
    total = float(np.sum(rx * rx) + np.sum(ry * ry))
    return float(np.sqrt(total / (rx.size + ry.size)))


def reconstruct_offset(g: GradientField) -> ReconstructionReport:
    """Reconstruct the zero-mean offset map best fitting a gradient field.

    ``residual_norm`` is the RMS over all gradient cells of the difference
    between the reconstruction's forward differences and the input field;
    it vanishes (to rounding) exactly when the field is integrable.
    """
    offset = solve_poisson_dct(divergence(g))
    return ReconstructionReport(
        offset=offset, residual_norm=_gradient_residual_rms(offset.values, g)
    )


def _first_difference_matrix(n: int) -> np.ndarray:
    b = np.zeros((n - 1, n))
    idx = np.arange(n - 1)
    b[idx, idx] = -1.0
    b[idx, idx + 1] = 1.0
    return b


def dense_lsq_oracle(g: GradientField) -> OffsetMap:
    """Dense normal-equations minimizer of ``||grad(u) - g||_2``, zero-mean.

    Independent verification path for the spectral solver; guarded to test
    scale (``H*W <= 4096``) since it factors an ``H*W`` square system.
    """
    h, w = g.shape
    n = h * w
    if n > DENSE_ORACLE_MAX_CELLS:
        raise ValueError(
            f"dense_lsq_oracle is limited to {DENSE_ORACLE_MAX_CELLS} cells, got {n}"
        )
    # Stacked forward differences on row-major flattening: u[i,j] = vec[i*W+j].
    dmat = np.vstack(
        [
            np.kron(np.eye(h), _first_difference_matrix(w)),
            np.kron(_first_difference_matrix(h), np.eye(w)),
        ]
    )
    gvec = np.concatenate([g.dx.values.ravel(), g.dy.values.ravel()])
    # Normal equations with a Lagrange row pinning the mean to zero.
    kkt = np.zeros((n + 1, n + 1))
    kkt[:n, :n] = dmat.T @ dmat
    kkt[:n, n] = 1.0
    kkt[n, :n] = 1.0
    rhs = np.concatenate([dmat.T @ gvec, [0.0]])
    sol = np.linalg.solve(kkt, rhs)
    u = sol[:n].reshape(h, w)
    u -= u.mean()
    return OffsetMap(u, compensated=True)


def save_reconstruction(path, report: ReconstructionReport) -> None:
    """Export a reconstructed offset as PFM plus its convention sidecar."""
    write_pfm(path, report.offset.values)
    write_sidecar(
        path,
        {
            "kind": "offset",
            "compensated": report.offset.compensated,
            "dc_convention": report.dc_convention,
            "residual_norm": report.residual_norm,
        },
    )
