"""
WCT Operator
The operator T = M_w E M_u on L2 of a finite atomic space: application, matrix form,
mu-weighted adjoint, closed-form norm, powers, polar decomposition and Aluthge transform.

Every adjoint is taken with respect to the mu-weighted inner product, i.e.
T* = D^-1 M^H D in atom coordinates with D = diag(mu).
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np
from scipy import linalg as la

from src.exceptions import DimensionMismatchError, PreconditionError
from src.measure import (
    SUPPORT_TOL, CondData, MeasureSpace, Partition, as_fn, cond_data, cond_exp
)

logger = logging.getLogger(__name__)


def null_space(A: np.ndarray, threshold: float) -> np.ndarray:
    """Orthonormal basis (columns) of the right null space, singular values <= threshold."""
    if A.size == 0:
        return np.eye(A.shape[1], dtype=complex)
    _, s, vh = la.svd(A)
    rank = int(np.sum(s > threshold))
    return vh[rank:].conj().T


@dataclass(frozen=True, eq=False)
class OpMatrix:
    """Dense matrix acting on atom coordinates of functions on `space`."""

    entries: np.ndarray
    space: MeasureSpace

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2:
            raise DimensionMismatchError("Operator entries must form a 2-D array")
        if entries.shape[1] != self.space.size:
            raise DimensionMismatchError(
                f"Matrix has {entries.shape[1]} columns but the space has "
                f"{self.space.size} atoms"
            )
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)

    @classmethod
    def identity(cls, space: MeasureSpace) -> 'OpMatrix':
        return cls(np.eye(space.size), space)

    @classmethod
    def from_symmetrized(cls, S: np.ndarray, space: MeasureSpace) -> 'OpMatrix':
        root = np.sqrt(space.mu)
        return cls(S * root[None, :] / root[:, None], space)

    @property
    def is_square(self) -> bool:
        return self.entries.shape[0] == self.entries.shape[1]

    def require_square(self) -> None:
        if not self.is_square:
            raise DimensionMismatchError(f"Expected a square matrix, got {self.entries.shape}")

    def apply(self, f) -> np.ndarray:
        return self.entries @ as_fn(f, self.space)

    def adjoint(self) -> 'OpMatrix':
        """Adjoint w.r.t. <f, g> = sum f conj(g) mu."""
        self.require_square()
        mu = self.space.mu
        return OpMatrix(self.entries.conj().T * mu[None, :] / mu[:, None], self.space)

    def symmetrized(self) -> np.ndarray:
        """D^1/2 M D^-1/2: the same operator in an orthonormal coordinate system."""
        root = np.sqrt(self.space.mu)
        return root[:, None] * self.entries / root[None, :]

    def singular_values(self) -> np.ndarray:
        return la.svdvals(self.symmetrized())

    def norm(self) -> float:
        """Operator norm w.r.t. the weighted inner product."""
        s = self.singular_values()
        return float(s[0]) if s.size else 0.0

    def rank_threshold(self, rtol: float = 1e-10) -> float:
        return rtol * max(self.norm(), 1.0)

    def kernel_basis(self, threshold: Optional[float] = None) -> np.ndarray:
        """Basis of the kernel, orthonormal in the weighted inner product (columns)."""
        threshold = self.rank_threshold() if threshold is None else threshold
        basis = null_space(self.symmetrized(), threshold)
        return basis / np.sqrt(self.space.mu)[:, None]

    def rank(self, threshold: Optional[float] = None) -> int:
        return self.space.size - self.kernel_basis(threshold).shape[1]

    def hermitian_part(self) -> np.ndarray:
        S = self.symmetrized()
        return (S + S.conj().T) / 2

    def hermitian_defect(self) -> float:
        S = self.symmetrized()
        return float(np.max(np.abs(S - S.conj().T))) if S.size else 0.0

    def weighted_eigvalsh(self) -> np.ndarray:
        """Eigenvalues of a weighted-Hermitian matrix (ascending)."""
        return la.eigh(self.hermitian_part(), eigvals_only=True)

    def psd_power(self, p: float) -> 'OpMatrix':
        """A^p for a weighted-positive-semidefinite A, by Hermitian spectral calculus."""
        evals, vecs = la.eigh(self.hermitian_part())
        evals = np.clip(evals, 0.0, None)
        powered = np.where(evals > 0, evals ** p, 0.0) if p > 0 else evals ** p
        return OpMatrix.from_symmetrized((vecs * powered) @ vecs.conj().T, self.space)

    def power(self, n: int) -> 'OpMatrix':
        return OpMatrix(np.linalg.matrix_power(self.entries, n), self.space)

    def __matmul__(self, other: 'OpMatrix') -> 'OpMatrix':
        return OpMatrix(self.entries @ other.entries, self.space)

    def __add__(self, other: 'OpMatrix') -> 'OpMatrix':
        return OpMatrix(self.entries + other.entries, self.space)

    def __sub__(self, other: Union['OpMatrix', complex, float]) -> 'OpMatrix':
        if isinstance(other, OpMatrix):
            return OpMatrix(self.entries - other.entries, self.space)
        return OpMatrix(self.entries - other * np.eye(self.space.size), self.space)

    def __mul__(self, scalar: complex) -> 'OpMatrix':
        return OpMatrix(self.entries * scalar, self.space)

    __rmul__ = __mul__

    def distance(self, other: 'OpMatrix') -> float:
        """Weighted operator norm of the difference."""
        return (self - other).norm()

    def to_rows(self) -> List[List[List[float]]]:
        """Row-major [re, im] pairs for JSON reports."""
        return [[[float(z.real), float(z.imag)] for z in row] for row in self.entries]


@dataclass(frozen=True, eq=False)
class PolarDecomposition:
    """T = U |T| with the closed-form factors."""

    U: OpMatrix
    abs_t: OpMatrix

    def reconstruction_defect(self, T: OpMatrix) -> float:
        return (self.U @ self.abs_t).distance(T)

    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue of |T| (weighted); >= 0 up to rounding."""
        return float(self.abs_t.weighted_eigvalsh()[0])

    def partial_isometry_defect(self) -> float:
        U = self.U
        return (U @ U.adjoint() @ U).distance(U)

    def kernel_ranks(self, threshold: Optional[float] = None):
        """(rank U, rank |T|, rank [U; |T|]): equal ranks everywhere means N(U) = N(|T|)."""
        threshold = self.abs_t.rank_threshold() if threshold is None else threshold
        stacked = np.vstack([self.U.symmetrized(), self.abs_t.symmetrized()])
        joint = stacked.shape[1] - null_space(stacked, threshold).shape[1]
        return self.U.rank(threshold), self.abs_t.rank(threshold), joint

    def kernel_condition_holds(self) -> bool:
        rank_u, rank_abs, rank_joint = self.kernel_ranks()
        return rank_u == rank_abs == rank_joint


class WctOperator:
    """T = M_w E M_u: (Tf)_i = w_i * E(u f)_i."""

    def __init__(self, space: MeasureSpace, partition: Partition, u, w,
                 tol: float = SUPPORT_TOL):
        self.logger = logging.getLogger(__name__)
        if partition.size != space.size:
            raise DimensionMismatchError(
                f"Partition covers {partition.size} atoms but the space has {space.size}"
            )
        self.space = space
        self.partition = partition
        self.u = as_fn(u, space)
        self.w = as_fn(w, space)
        self.u.setflags(write=False)
        self.w.setflags(write=False)
        self.tol = tol
        self._cond: Optional[CondData] = None
        self._matrix: Optional[OpMatrix] = None

    def __repr__(self) -> str:
        return (f"WctOperator(atoms={self.space.size}, blocks={self.partition.count}, "
                f"norm={self.norm():.6g})")

    @property
    def cond(self) -> CondData:
        if self._cond is None:
            self._cond = cond_data(self.u, self.w, self.partition, self.space, self.tol)
        return self._cond

    def E(self, f) -> np.ndarray:
        return cond_exp(f, self.partition, self.space)

    def apply(self, f) -> np.ndarray:
        f = as_fn(f, self.space)
        return self.w * self.E(self.u * f)

    def to_matrix(self) -> OpMatrix:
        """Column j is T applied to the j-th coordinate vector."""
        if self._matrix is None:
            columns = [self.apply(e) for e in np.eye(self.space.size)]
            self._matrix = OpMatrix(np.column_stack(columns), self.space)
        return self._matrix

    def adjoint(self) -> 'WctOperator':
        """(M_w E M_u)* = M_conj(u) E M_conj(w)."""
        return WctOperator(self.space, self.partition, u=self.w.conj(), w=self.u.conj(),
                           tol=self.tol)

    @property
    def boundedness(self) -> np.ndarray:
        """(E|w|^2)^1/2 (E|u|^2)^1/2 per atom; its sup is the norm."""
        return np.sqrt(self.cond.Eu2 * self.cond.Ew2)

    def norm(self) -> float:
        return float(np.max(self.boundedness))

    def power_apply(self, n: int, f) -> np.ndarray:
        """T^n f = E(uw)^(n-1) w E(uf)."""
        if int(n) != n or n < 1:
            raise PreconditionError(f"Power must be a positive integer, got {n}")
        f = as_fn(f, self.space)
        return self.cond.Euw ** (int(n) - 1) * self.w * self.E(self.u * f)

    def gram_apply(self, n: int, f) -> np.ndarray:
        """T*^n T^n f = |E(uw)|^(2(n-1)) E(|w|^2) conj(u) E(uf)."""
        if int(n) != n or n < 1:
            raise PreconditionError(f"Power must be a positive integer, got {n}")
        f = as_fn(f, self.space)
        c = self.cond
        factor = np.abs(c.Euw) ** (2 * (int(n) - 1)) * c.Ew2
        return factor * self.u.conj() * self.E(self.u * f)

    def polar(self) -> PolarDecomposition:
        """|T|f = (Ew2/Eu2)^1/2 chi_S conj(u) E(uf),  Uf = (chi_{S&G}/(Ew2 Eu2))^1/2 w E(uf).

        Ratios off the relevant support are 0 (0/0 := 0).
        """
        c = self.cond
        ratio = np.zeros(self.space.size)
        np.divide(c.Ew2, c.Eu2, out=ratio, where=c.S)
        abs_weight = np.sqrt(ratio) * self.u.conj()

        both = c.S & c.G
        scale = np.zeros(self.space.size)
        np.divide(1.0, c.Ew2 * c.Eu2, out=scale, where=both)
        iso_weight = np.sqrt(scale) * self.w

        abs_t = WctOperator(self.space, self.partition, self.u, abs_weight, self.tol)
        U = WctOperator(self.space, self.partition, self.u, iso_weight, self.tol)
        return PolarDecomposition(U=U.to_matrix(), abs_t=abs_t.to_matrix())

    def aluthge(self) -> OpMatrix:
        """|T|^1/2 U |T|^1/2, the square root taken numerically."""
        polar = self.polar()
        root = polar.abs_t.psd_power(0.5)
        return root @ polar.U @ root
