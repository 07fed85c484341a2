"""
Spectral
Spectrum, point and joint point spectra, approximate spectra, Riesz idempotents and the
kernel-structure consequences for T = M_w E M_u.

All computations run in symmetrized coordinates S = D^1/2 M D^-1/2, where the weighted
adjoint becomes the conjugate transpose and weighted orthogonality the standard one.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as la

from src.criteria import (
    DEFAULT_TOL, Status, Verdict, crit_nk_quasi_star, crit_quasi_star_paranormal
)
from src.exceptions import PreconditionError
from src.wct_operator import OpMatrix, WctOperator, null_space

logger = logging.getLogger(__name__)

CLUSTER_RTOL = 1e-8
RANK_RTOL = 1e-10
SPECTRUM_ATOL = 1e-8


def cluster(values: Sequence[complex], scale: float = 1.0,
            rtol: float = CLUSTER_RTOL) -> List[complex]:
    """Merge values closer than rtol * max(1, scale); order by magnitude then argument."""
    radius = rtol * max(1.0, scale)
    merged: List[complex] = []
    for z in sorted((complex(v) for v in values), key=lambda z: (abs(z), np.angle(z))):
        if not any(abs(z - m) <= radius for m in merged):
            merged.append(0j if abs(z) <= radius else z)
    return sorted(merged, key=lambda z: (abs(z), np.angle(z)))


def hausdorff(first: Sequence[complex], second: Sequence[complex]) -> float:
    if not first and not second:
        return 0.0
    if not first or not second:
        return float('inf')
    a = np.asarray(first)[:, None]
    b = np.asarray(second)[None, :]
    d = np.abs(a - b)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def _threshold(scale: float) -> float:
    return RANK_RTOL * max(scale, np.finfo(float).tiny)


def smallest_singular_value(A: np.ndarray) -> float:
    s = la.svdvals(A)
    return float(s[-1]) if s.size else 0.0


def numeric_eigenvalues(Mx: OpMatrix) -> np.ndarray:
    """Eigenvalues of the matrix; near-zero values of a singular matrix are snapped to 0.

    A Jordan block at 0 of size m perturbs the computed eigenvalues to about eps^(1/m);
    for M_w E M_u the blocks have size at most 2.
    """
    values = la.eigvals(Mx.entries)
    norm = Mx.norm()
    n = Mx.space.size
    if Mx.rank(_threshold(norm)) < n:
        snap = 10 * np.sqrt(np.finfo(float).eps) * max(norm, np.finfo(float).tiny) * n
        values = np.where(np.abs(values) <= snap, 0.0, values)
    return values


@dataclass(eq=False)
class SpectrumReport:
    analytic: List[complex]
    numeric: List[complex]
    point_spectrum: List[complex]
    joint_point: List[complex]
    approx: List[complex]
    joint_approx: List[complex]
    distance: float
    agreement: bool
    s_cap_g_is_x: bool
    zero_finding: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        def pairs(values):
            return [[float(z.real), float(z.imag)] for z in values]

        return {
            'spectrum': {'analytic': pairs(self.analytic), 'numeric': pairs(self.numeric),
                         'agreement': self.agreement, 'distance': self.distance},
            'sigma_p': pairs(self.point_spectrum),
            'sigma_jp': pairs(self.joint_point),
            'sigma_a': pairs(self.approx),
            'sigma_ja': pairs(self.joint_approx),
            'S_cap_G_is_X': self.s_cap_g_is_x,
            'zero_finding': self.zero_finding,
        }


def block_values(T: WctOperator) -> Tuple[List[complex], bool]:
    """Block values of E(uw) on S0 and whether some block contributes 0 to the spectrum."""
    c = T.cond
    values = []
    zero = False
    for block in T.partition.blocks:
        i = block[0]
        if c.S0[i]:
            values.append(complex(c.Euw[i]))
        else:
            zero = True
        if len(block) > 1:
            zero = True
    return values, zero


def analytic_spectrum(T: WctOperator) -> List[complex]:
    values, zero = block_values(T)
    return cluster(values + ([0j] if zero else []), T.norm())


def spectrum(T: WctOperator) -> SpectrumReport:
    Mx = T.to_matrix()
    norm = T.norm()
    analytic = analytic_spectrum(T)
    numeric = cluster(numeric_eigenvalues(Mx), norm)
    distance = hausdorff(analytic, numeric)
    agreement = distance <= SPECTRUM_ATOL * max(1.0, norm)
    if not agreement:
        logger.warning(f"Analytic and numeric spectra differ by {distance:.3e}: "
                       f"{analytic} vs {numeric}")

    c = T.cond
    s_cap_g = bool(np.all(c.S & c.G))
    zero_finding = None
    if s_cap_g:
        vanishes = bool(np.any(~c.S0))
        singular = Mx.rank(_threshold(norm)) < T.space.size
        if singular != vanishes:
            zero_finding = (f"S∩G = X but 0 in spectrum is {singular} while E(uw) "
                            f"vanishes somewhere is {vanishes}")
            logger.info(zero_finding)

    sigma_a, sigma_ja = approx_spectra(T, candidates=numeric)
    return SpectrumReport(
        analytic=analytic, numeric=numeric,
        point_spectrum=point_spectrum(T), joint_point=joint_point_spectrum(T),
        approx=sigma_a, joint_approx=sigma_ja,
        distance=distance, agreement=agreement, s_cap_g_is_x=s_cap_g,
        zero_finding=zero_finding,
    )


def point_spectrum(T: WctOperator) -> List[complex]:
    """Nonzero block values of E(uw), plus 0 when T has a nontrivial kernel."""
    values, _ = block_values(T)
    Mx = T.to_matrix()
    if Mx.rank(_threshold(T.norm())) < T.space.size:
        values.append(0j)
    return cluster(values, T.norm())


def _joint_min_singular(S: np.ndarray, lam: complex) -> float:
    I = np.eye(S.shape[0])
    stacked = np.vstack([S - lam * I, S.conj().T - np.conj(lam) * I])
    return smallest_singular_value(stacked)


def joint_point_spectrum(T: WctOperator) -> List[complex]:
    """Eigenvalues with a common eigenvector for T at lambda and T* at conj(lambda)."""
    S = T.to_matrix().symmetrized()
    norm = T.norm()
    return [lam for lam in point_spectrum(T)
            if _joint_min_singular(S, lam) <= _threshold(norm + abs(lam))]


def approx_spectra(T: WctOperator,
                   candidates: Optional[Sequence[complex]] = None
                   ) -> Tuple[List[complex], List[complex]]:
    """(sigma_a, sigma_ja) over the spectrum, by smallest singular values of T - lambda
    and of the stacked pair [T - lambda; T* - conj(lambda)]."""
    Mx = T.to_matrix()
    S = Mx.symmetrized()
    norm = T.norm()
    if candidates is None:
        candidates = cluster(numeric_eigenvalues(Mx), norm)
    I = np.eye(S.shape[0])
    sigma_a, sigma_ja = [], []
    for lam in candidates:
        threshold = _threshold(norm + abs(lam))
        if smallest_singular_value(S - lam * I) <= threshold:
            sigma_a.append(lam)
        if _joint_min_singular(S, lam) <= threshold:
            sigma_ja.append(lam)
    return sigma_a, sigma_ja


@dataclass(frozen=True, eq=False)
class ResolventGrid:
    xs: np.ndarray
    ys: np.ndarray
    smallest: np.ndarray


def resolvent_landscape(T: WctOperator, radius: Optional[float] = None,
                        points: int = 41) -> ResolventGrid:
    """Smallest weighted singular value of T - lambda on a square grid around 0."""
    radius = radius if radius is not None else 1.1 * max(T.norm(), 1e-3)
    S = T.to_matrix().symmetrized()
    I = np.eye(S.shape[0])
    xs = np.linspace(-radius, radius, points)
    ys = np.linspace(-radius, radius, points)
    smallest = np.array([[smallest_singular_value(S - complex(x, y) * I) for x in xs]
                         for y in ys])
    return ResolventGrid(xs=xs, ys=ys, smallest=smallest)


@dataclass(frozen=True, eq=False)
class RieszData:
    mu: complex
    projector: OpMatrix
    contour_points: int
    radius: float
    idempotency_defect: float
    self_adjoint_defect: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'mu': [float(self.mu.real), float(self.mu.imag)],
            'contour_points': self.contour_points,
            'radius': self.radius,
            'idempotency_defect': self.idempotency_defect,
            'self_adjoint_defect': self.self_adjoint_defect,
        }


def _spectral_points(Mx: OpMatrix) -> List[complex]:
    return cluster(numeric_eigenvalues(Mx), Mx.norm())


def _locate(points: Sequence[complex], mu: complex, scale: float) -> complex:
    if not points:
        raise PreconditionError("Empty spectrum")
    nearest = min(points, key=lambda z: abs(z - mu))
    if abs(nearest - mu) > SPECTRUM_ATOL * max(1.0, scale):
        raise PreconditionError(f"{mu} is not a spectral point; nearest is {nearest}")
    return nearest


def isolation_radius_matrix(Mx: OpMatrix, mu: complex) -> float:
    points = _spectral_points(Mx)
    center = _locate(points, complex(mu), Mx.norm())
    others = [abs(z - center) for z in points if z != center]
    if not others:
        return 0.5 * max(abs(center), Mx.norm(), 1.0)
    return 0.5 * min(others)


def isolation_radius(T: WctOperator, mu: complex) -> float:
    """Half the distance from mu to the nearest other spectral point."""
    return isolation_radius_matrix(T.to_matrix(), mu)


def riesz_idempotent_matrix(Mx: OpMatrix, mu: complex, radius: Optional[float] = None,
                            points: int = 64) -> RieszData:
    """(1/2 pi i) contour integral of (z - T)^-1 around mu by the trapezoidal rule."""
    Mx.require_square()
    if points < 3:
        raise PreconditionError(f"Need at least 3 contour points, got {points}")
    spectral = _spectral_points(Mx)
    center = _locate(spectral, complex(mu), Mx.norm())
    radius = isolation_radius_matrix(Mx, center) if radius is None else float(radius)
    if radius <= 0:
        raise PreconditionError("Contour radius must be positive")
    enclosed = [z for z in spectral if z != center and abs(z - center) <= radius]
    if enclosed:
        raise PreconditionError(
            f"Contour of radius {radius} around {center} also encloses {enclosed}"
        )

    n = Mx.space.size
    I = np.eye(n)
    M = Mx.entries
    total = np.zeros((n, n), dtype=complex)
    for theta in 2 * np.pi * np.arange(points) / points:
        step = radius * np.exp(1j * theta)
        total += step * la.solve((center + step) * I - M, I)
    projector = OpMatrix(total / points, Mx.space)

    return RieszData(
        mu=center,
        projector=projector,
        contour_points=points,
        radius=radius,
        idempotency_defect=(projector @ projector).distance(projector),
        self_adjoint_defect=projector.distance(projector.adjoint()),
    )


def riesz_idempotent(T: WctOperator, mu: complex, radius: Optional[float] = None,
                     points: int = 64) -> RieszData:
    return riesz_idempotent_matrix(T.to_matrix(), mu, radius, points)


def _kernel(S: np.ndarray, lam: complex, scale: float) -> np.ndarray:
    return null_space(S - lam * np.eye(S.shape[0]), _threshold(scale + abs(lam)))


def _rank(A: np.ndarray, scale: float) -> int:
    return A.shape[1] - null_space(A, _threshold(scale)).shape[1]


def simple_pole_check_matrix(Mx: OpMatrix, mu: complex) -> Verdict:
    """ker(T - mu) = ker(T - mu)^2, i.e. no Jordan block at mu."""
    Mx.require_square()
    mu = complex(mu)
    norm = Mx.norm()
    A = Mx.symmetrized() - mu * np.eye(Mx.space.size)
    scale = norm + abs(mu)
    rank_1 = _rank(A, scale)
    rank_2 = _rank(A @ A, scale ** 2)
    status = Status.HOLDS if rank_1 == rank_2 else Status.FAILS
    return Verdict('simple-pole', status, float(rank_2 - rank_1), {'mu': [mu.real, mu.imag]},
                   source='matrix', details={'rank': rank_1, 'rank_squared': rank_2})


def simple_pole_check(T: WctOperator, mu: complex, tol: float = DEFAULT_TOL) -> Verdict:
    mu = complex(mu)
    norm = T.norm()
    if abs(mu) <= SPECTRUM_ATOL * max(1.0, norm):
        raise PreconditionError("Simple pole check needs a nonzero spectral point")
    _locate(_spectral_points(T.to_matrix()), mu, norm)
    verdict = simple_pole_check_matrix(T.to_matrix(), mu)
    hypothesis = crit_quasi_star_paranormal(T, tol).holds
    verdict.details['hypothesis'] = hypothesis
    if hypothesis and verdict.fails:
        logger.error(f"Jordan block at {mu} although |E(uw)|^2 >= E|u|^2 E|w|^2 on G")
    return verdict


def _kernel_inclusion(S: np.ndarray, lam: complex, scale: float) -> Tuple[bool, float]:
    """ker(T - lam) in ker(T* - conj(lam)), by the residual over an orthonormal basis."""
    K = _kernel(S, lam, scale)
    if K.shape[1] == 0:
        return True, 0.0
    residual = float(np.linalg.norm((S.conj().T - np.conj(lam) * np.eye(S.shape[0])) @ K, 2))
    return residual <= 10 * _threshold(scale + abs(lam)), residual


def riesz_self_adjointness(T: WctOperator, mu: complex, radius: Optional[float] = None,
                           points: int = 64) -> Verdict:
    """E_mu self-adjoint iff ker(T - mu) in ker(T* - conj(mu)); both sides computed."""
    riesz = riesz_idempotent(T, mu, radius, points)
    S = T.to_matrix().symmetrized()
    E_norm = riesz.projector.norm()
    self_adjoint = riesz.self_adjoint_defect <= 1e-8 * max(1.0, E_norm)
    inclusion, residual = _kernel_inclusion(S, riesz.mu, T.norm())
    agree = self_adjoint == inclusion
    if not agree:
        logger.error(f"Riesz idempotent at {riesz.mu}: self-adjoint={self_adjoint} but "
                     f"kernel inclusion={inclusion}")
    return Verdict('riesz-self-adjoint', Status.HOLDS if agree else Status.FAILS,
                   0.0 if agree else -1.0, {'mu': [riesz.mu.real, riesz.mu.imag]},
                   source='matrix',
                   details={'self_adjoint': self_adjoint, 'kernel_inclusion': inclusion,
                            'kernel_residual': residual, **riesz.to_dict()})


@dataclass(eq=False)
class KernelReport:
    hypothesis: bool
    params: Dict[str, int]
    inclusion: Dict[str, bool] = field(default_factory=dict)
    orthogonality: float = 0.0
    orthogonal: bool = True
    stabilization: Dict[str, bool] = field(default_factory=dict)
    spectra_coincide: bool = True
    contradictions: List[str] = field(default_factory=list)
    svep: str = "automatic in finite dimension"

    @property
    def all_pass(self) -> bool:
        return (all(self.inclusion.values()) and self.orthogonal
                and all(self.stabilization.values()) and self.spectra_coincide)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'hypothesis': self.hypothesis,
            'params': self.params,
            'inclusion': self.inclusion,
            'orthogonality': self.orthogonality,
            'orthogonal': self.orthogonal,
            'stabilization': self.stabilization,
            'spectra_coincide': self.spectra_coincide,
            'all_pass': self.all_pass,
            'contradictions': self.contradictions,
            'svep': self.svep,
        }


def _key(lam: complex) -> str:
    return f"{lam.real:.12g}{lam.imag:+.12g}j"


def kernel_consequences(T: WctOperator, n: int = 1, k: int = 1,
                        tol: float = DEFAULT_TOL) -> KernelReport:
    """Kernel inclusions, eigenspace orthogonality, kernel stabilization and the nonzero
    approximate spectra, with the (n,k) hypothesis attached."""
    hypothesis = crit_nk_quasi_star(T, n, k, tol).holds
    report = KernelReport(hypothesis=hypothesis, params={'n': int(n), 'k': int(k)})
    Mx = T.to_matrix()
    S = Mx.symmetrized()
    norm = T.norm()
    size = T.space.size
    eigenvalues = point_spectrum(T)
    nonzero = [lam for lam in eigenvalues if lam != 0]

    for lam in nonzero:
        report.inclusion[_key(lam)], _ = _kernel_inclusion(S, lam, norm)
        A = S - lam * np.eye(size)
        scale = norm + abs(lam)
        report.stabilization[_key(lam)] = _rank(A, scale) == _rank(A @ A, scale ** 2)

    power_1 = np.linalg.matrix_power(S, k + 1)
    power_2 = np.linalg.matrix_power(S, k + 2)
    report.stabilization[f'T^{k + 1}'] = (_rank(power_1, norm ** (k + 1))
                                          == _rank(power_2, norm ** (k + 2)))

    bases = [_kernel(S, lam, norm) for lam in eigenvalues]
    worst = 0.0
    for i in range(len(bases)):
        for j in range(i + 1, len(bases)):
            if bases[i].size and bases[j].size:
                worst = max(worst, float(np.max(np.abs(bases[i].conj().T @ bases[j]))))
    report.orthogonality = worst
    report.orthogonal = worst <= 1e-10

    sigma_a, sigma_ja = approx_spectra(T)
    report.spectra_coincide = (
        hausdorff([z for z in sigma_a if z != 0], [z for z in sigma_ja if z != 0])
        <= SPECTRUM_ATOL * max(1.0, norm)
    )

    if hypothesis and not report.all_pass:
        failed = [name for name, ok in (
            ('inclusion', all(report.inclusion.values())),
            ('orthogonality', report.orthogonal),
            ('stabilization', all(report.stabilization.values())),
            ('approximate spectra', report.spectra_coincide),
        ) if not ok]
        report.contradictions = failed
        logger.error(f"Kernel consequences fail under the ({n},{k}) hypothesis: {failed}")
    return report
