"""
Class Oracles
Definition-level falsifiers for the norm-inequality classes, working on any square OpMatrix.

Each defining inequality is homogeneous, so the matrix and the samples are normalized
first. Per sample the inequality is written as A * C^p >= B^(p+1) (the lambda-free form
of the pencil), which ranks samples and drives refinement; a reported witness is always
re-verified against the literal inequality.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg as la

from src.config import get_settings
from src.criteria import (
    CLASS_REGISTRY, DEFAULT_TOL, ClassParams, Status, Verdict, evaluate_class
)
from src.exceptions import DimensionMismatchError, PreconditionError
from src.measure import Partition, indicator, inner
from src.wct_operator import OpMatrix, WctOperator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OracleConfig:
    samples: int = 2000
    seed: int = 0
    tol: float = DEFAULT_TOL
    ascent_steps: int = 50
    workers: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise PreconditionError(f"samples must be >= 1, got {self.samples}")
        if not self.tol > 0:
            raise PreconditionError(f"tol must be > 0, got {self.tol}")
        if self.ascent_steps < 0:
            raise PreconditionError(f"ascent_steps must be >= 0, got {self.ascent_steps}")
        if self.workers < 1:
            raise PreconditionError(f"workers must be >= 1, got {self.workers}")

    @classmethod
    def from_settings(cls, **overrides) -> 'OracleConfig':
        settings = get_settings()
        values = dict(samples=settings.samples, seed=settings.seed, tol=settings.tol,
                      ascent_steps=settings.ascent_steps, workers=settings.workers)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class LiteralSides:
    """lhs <= rhs is the defining inequality; violation is (lhs - rhs) normalized."""

    lhs: float
    rhs: float
    violation: float

    def to_dict(self) -> Dict[str, float]:
        return {'lhs': self.lhs, 'rhs': self.rhs, 'violation': self.violation}


def _wnorm2(Y: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Squared weighted norms of the columns of Y."""
    return np.sum(np.abs(Y) ** 2 * mu[:, None], axis=0)


class _ClassForms:
    """The matrices one class needs, built once per oracle call."""

    def __init__(self, Mx: OpMatrix, class_id: str, params: ClassParams):
        self.class_id = class_id
        self.params = params
        self.mu = Mx.space.mu
        T = Mx.entries
        self.T = T
        self.T_star = Mx.adjoint().entries
        self.M = params.M if class_id in ('m', 'm-a') else 1.0
        if class_id == 'abs-k':
            self.abs_k = (Mx.adjoint() @ Mx).psd_power(params.k / 2).entries
        if class_id in ('(n,k)', 'k-q*'):
            k = params.int_k()
            self.T_k = np.linalg.matrix_power(T, k)
            self.n = 1 if class_id == 'k-q*' else params.n
            self.T_n1 = np.linalg.matrix_power(T, self.n + 1)
        if class_id == 'n*':
            self.n = params.n
            self.T_n1 = np.linalg.matrix_power(T, self.n + 1)

    def pencil_terms(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        """(A, B, C, p) per column of X."""
        mu, T = self.mu, self.T
        cid = self.class_id
        if cid in ('p', 'm', 'm-a'):
            TX = T @ X
            return (self.M ** 2 * _wnorm2(T @ TX, mu), _wnorm2(TX, mu), _wnorm2(X, mu), 1.0)
        if cid == '*p':
            return (_wnorm2(T @ (T @ X), mu), _wnorm2(self.T_star @ X, mu),
                    _wnorm2(X, mu), 1.0)
        if cid == 'q*p':
            TX = T @ X
            return (_wnorm2(T @ (T @ TX), mu), _wnorm2(self.T_star @ TX, mu),
                    _wnorm2(TX, mu), 1.0)
        if cid == 'abs-k':
            TX = T @ X
            return (_wnorm2(self.abs_k @ TX, mu), _wnorm2(TX, mu), _wnorm2(X, mu),
                    float(self.params.k))
        if cid in ('(n,k)', 'k-q*'):
            Y = self.T_k @ X
            return (_wnorm2(self.T_n1 @ Y, mu), _wnorm2(self.T_star @ Y, mu),
                    _wnorm2(Y, mu), float(self.n))
        if cid == 'n*':
            return (_wnorm2(self.T_n1 @ X, mu), _wnorm2(self.T_star @ X, mu),
                    _wnorm2(X, mu), float(self.n))
        raise PreconditionError(f"No oracle for class {cid!r}")

    def objective(self, X: np.ndarray) -> np.ndarray:
        """B^(p+1) - A C^p for unit columns; positive means violated."""
        A, B, C, p = self.pencil_terms(X)
        return B ** (p + 1) - A * C ** p


def _normalize_columns(X: np.ndarray, mu: np.ndarray) -> np.ndarray:
    norms = np.sqrt(_wnorm2(X, mu))
    keep = norms > 0
    return X[:, keep] / norms[keep]


def _random_unit(rng: np.random.Generator, n: int, count: int, mu: np.ndarray) -> np.ndarray:
    X = rng.standard_normal((n, count)) + 1j * rng.standard_normal((n, count))
    return _normalize_columns(X, mu)


def structured_probes(Mx: OpMatrix, partition: Optional[Partition] = None,
                      seed: int = 0, per_block: int = 4) -> np.ndarray:
    """Basis vectors, weighted right singular vectors, eigenvectors of T and T*,
    and random vectors supported on single blocks."""
    mu = Mx.space.mu
    n = Mx.space.size
    columns = [np.eye(n, dtype=complex)]
    _, _, vh = la.svd(Mx.symmetrized())
    columns.append(vh.conj().T / np.sqrt(mu)[:, None])
    for matrix in (Mx.entries, Mx.adjoint().entries):
        _, vecs = la.eig(matrix)
        columns.append(vecs)
    if partition is not None:
        rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
        for block in partition.blocks:
            X = _random_unit(rng, n, per_block, mu) * indicator(block, Mx.space)[:, None]
            columns.append(X)
    return _normalize_columns(np.hstack(columns), mu)


def _worst_of(forms: _ClassForms, X: np.ndarray) -> Tuple[float, np.ndarray]:
    values = forms.objective(X)
    index = int(np.argmax(values))
    return float(values[index]), X[:, index]


def _sample_worker(forms: _ClassForms, seed_seq: np.random.SeedSequence, count: int,
                   n: int) -> Tuple[float, np.ndarray]:
    rng = np.random.default_rng(seed_seq)
    return _worst_of(forms, _random_unit(rng, n, count, forms.mu))


def refine(forms: _ClassForms, x: np.ndarray, steps: int, step: float = 0.1) -> np.ndarray:
    """Coordinate ascent on the violation over +-step and +-i*step moves per coordinate.

    The best of all single-coordinate moves is taken per sweep; the step halves when no
    move improves.
    """
    mu = forms.mu
    n = x.size
    best = float(forms.objective(x[:, None])[0])
    moves = np.concatenate([np.eye(n), -np.eye(n), 1j * np.eye(n), -1j * np.eye(n)], axis=1)
    for _ in range(steps):
        candidates = _normalize_columns(x[:, None] + step * moves, mu)
        value, candidate = _worst_of(forms, candidates)
        if value > best:
            best, x = value, candidate
        else:
            step /= 2
    return x


def _literal_pair(Mx: OpMatrix, x: np.ndarray, class_id: str,
                  params: ClassParams) -> Tuple[float, float]:
    mu = Mx.space.mu
    T = Mx.entries
    T_star = Mx.adjoint().entries

    def nrm(y):
        return float(np.sqrt(np.sum(np.abs(y) ** 2 * mu)))

    if class_id in ('p', 'm', 'm-a', '*p'):
        scale = params.M if class_id in ('m', 'm-a') else 1.0
        first = T_star @ x if class_id == '*p' else T @ x
        return nrm(first) ** 2, scale * nrm(T @ (T @ x)) * nrm(x)
    if class_id == 'q*p':
        Tx = T @ x
        return nrm(T_star @ Tx) ** 2, nrm(T @ (T @ Tx)) * nrm(Tx)
    if class_id == 'abs-k':
        k = params.k
        abs_k = (Mx.adjoint() @ Mx).psd_power(k / 2).entries
        Tx = T @ x
        return nrm(Tx) ** (k + 1), nrm(abs_k @ Tx) * nrm(x) ** k
    if class_id == 'n*':
        n, y = params.n, x
    else:
        n = 1 if class_id == 'k-q*' else params.n
        y = np.linalg.matrix_power(T, params.int_k()) @ x
    top = nrm(np.linalg.matrix_power(T, n + 1) @ y)
    return nrm(T_star @ y), top ** (1 / (n + 1)) * nrm(y) ** (n / (n + 1))


def literal_sides(Mx: OpMatrix, x, class_id: str, params: ClassParams) -> LiteralSides:
    """Both sides of the defining inequality at x, computed from scratch.

    The violation is lhs - rhs divided by ||T||^dT ||x||^dx, the homogeneity degrees
    of the class.
    """
    Mx.require_square()
    if class_id not in CLASS_REGISTRY:
        raise PreconditionError(f"Unknown class id {class_id!r}")
    x = np.asarray(x, dtype=complex)
    if x.shape != (Mx.space.size,):
        raise DimensionMismatchError(f"Vector has {x.size} entries, expected {Mx.space.size}")
    lhs, rhs = _literal_pair(Mx, x, class_id, params)
    d_t, d_x = CLASS_REGISTRY[class_id].degree(params)
    scale = Mx.norm() ** d_t * np.sqrt(_wnorm2(x[:, None], Mx.space.mu)[0]) ** d_x
    violation = (lhs - rhs) / scale if scale > 0 else 0.0
    return LiteralSides(lhs, rhs, float(violation))


def verify_witness(Mx: OpMatrix, x, class_id: str, params: ClassParams,
                   tol: float = DEFAULT_TOL) -> bool:
    return literal_sides(Mx, x, class_id, params).violation > tol


def run_oracle(Mx: OpMatrix, class_id: str, params: ClassParams,
               cfg: Optional[OracleConfig] = None,
               partition: Optional[Partition] = None) -> Verdict:
    """Search for a unit vector violating the defining inequality of `class_id`."""
    cfg = cfg or OracleConfig()
    Mx.require_square()
    if class_id not in CLASS_REGISTRY:
        raise PreconditionError(f"Unknown class id {class_id!r}")
    params_dict = params.to_dict()
    t_norm = Mx.norm()
    if t_norm == 0:
        return Verdict(class_id, Status.HOLDS, 0.0, params_dict, source='oracle',
                       details={'samples': 0, 'zero_operator': True})

    unit = Mx * (1 / t_norm)
    forms = _ClassForms(unit, class_id, params)
    n = Mx.space.size

    children = np.random.SeedSequence(cfg.seed).spawn(cfg.workers)
    counts = [cfg.samples // cfg.workers + (i < cfg.samples % cfg.workers)
              for i in range(cfg.workers)]
    jobs = [(child, count) for child, count in zip(children, counts) if count > 0]
    if cfg.workers == 1:
        results = [_sample_worker(forms, child, count, n) for child, count in jobs]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(lambda job: _sample_worker(forms, *job, n), jobs))
    results.append(_worst_of(forms, structured_probes(unit, partition, cfg.seed)))

    _, x = max(results, key=lambda item: item[0])
    if cfg.ascent_steps:
        x = refine(forms, x, cfg.ascent_steps)

    sides = literal_sides(Mx, x, class_id, params)
    details = {'samples': cfg.samples, 'workers': cfg.workers, **sides.to_dict()}
    if sides.violation > cfg.tol:
        logger.debug(f"Oracle {class_id}: violation {sides.violation:.3e}")
        return Verdict(class_id, Status.FAILS, -sides.violation, params_dict,
                       witness_vector=x, source='oracle', details=details)
    return Verdict(class_id, Status.HOLDS, -sides.violation, params_dict,
                   boundary=abs(sides.violation) <= cfg.tol, source='oracle',
                   details={**details, 'empirical': True})


def oracle_paranormal(Mx: OpMatrix, cfg: Optional[OracleConfig] = None) -> Verdict:
    return run_oracle(Mx, 'p', ClassParams(), cfg)


def oracle_m_paranormal(Mx: OpMatrix, M: float, cfg: Optional[OracleConfig] = None) -> Verdict:
    return run_oracle(Mx, 'm', ClassParams(M=M), cfg)


def oracle_star_paranormal(Mx: OpMatrix, cfg: Optional[OracleConfig] = None) -> Verdict:
    return run_oracle(Mx, '*p', ClassParams(), cfg)


def oracle_quasi_star_paranormal(Mx: OpMatrix, cfg: Optional[OracleConfig] = None) -> Verdict:
    return run_oracle(Mx, 'q*p', ClassParams(), cfg)


def oracle_absolute_k(Mx: OpMatrix, k: float, cfg: Optional[OracleConfig] = None) -> Verdict:
    return run_oracle(Mx, 'abs-k', ClassParams(k=k), cfg)


def oracle_nk_quasi_star(Mx: OpMatrix, n: int, k: int,
                         cfg: Optional[OracleConfig] = None) -> Verdict:
    return run_oracle(Mx, '(n,k)', ClassParams(n=n, k=k), cfg)


def oracle_n_star(Mx: OpMatrix, n: int, cfg: Optional[OracleConfig] = None) -> Verdict:
    return run_oracle(Mx, 'n*', ClassParams(n=n), cfg)


def _block_candidates(T: WctOperator, block) -> List[np.ndarray]:
    space = T.space
    chi = indicator(block, space)
    x_b = T.u.conj() * chi
    x_a = T.w * chi
    norm_b = inner(x_b, x_b, space).real
    x_perp = x_a - (inner(x_a, x_b, space) / norm_b) * x_b if norm_b > 0 else x_a
    candidates = [chi, x_b, x_a, x_perp]
    for t in np.logspace(-3, 3, 25):
        for phi in np.linspace(0, 2 * np.pi, 8, endpoint=False):
            candidates.append(x_b + t * np.exp(1j * phi) * x_perp)
    return [c for c in candidates if np.any(c != 0)]


def block_witness(T: WctOperator, atom: str, class_id: str, params: ClassParams,
                  tol: float = DEFAULT_TOL) -> Optional[np.ndarray]:
    """A violating vector supported on the block of `atom`, where T acts as a rank-one map.

    Returns None (with a logged diagnostic) when no candidate violates by more than tol.
    """
    verdict = evaluate_class(T, class_id, params, tol)
    if atom not in verdict.details.get('failing_atoms', []):
        raise PreconditionError(
            f"Atom {atom!r} does not violate the {class_id} criterion ({verdict.status.value})"
        )
    block = T.partition.block_of(T.space.index(atom))
    Mx = T.to_matrix()
    best, best_violation = None, -np.inf
    for candidate in _block_candidates(T, block):
        violation = literal_sides(Mx, candidate, class_id, params).violation
        if violation > best_violation:
            best, best_violation = candidate, violation
    if best_violation > tol:
        return best
    logger.warning(f"No block witness for {class_id} {params.to_dict()} at atom {atom}: "
                   f"best violation {best_violation:.3e} on block {list(block)}")
    return None


def _psd_verdict(class_id: str, D: OpMatrix, tol: float) -> Verdict:
    smallest = float(D.weighted_eigvalsh()[0]) if D.space.size else 0.0
    status = Status.HOLDS if smallest >= -tol else Status.FAILS
    return Verdict(class_id, status, smallest, source='matrix',
                   boundary=status is Status.HOLDS and abs(smallest) <= tol,
                   details={'min_eigenvalue': smallest})


def check_a_class(Mx: OpMatrix, tol: float = 1e-8) -> Verdict:
    """|T^2| >= |T|^2 by a weighted PSD test on the normalized matrix."""
    Mx.require_square()
    t_norm = Mx.norm()
    if t_norm == 0:
        return Verdict('a-class', Status.HOLDS, 0.0, source='matrix')
    T = Mx * (1 / t_norm)
    T2 = T @ T
    abs_t2 = (T2.adjoint() @ T2).psd_power(0.5)
    return _psd_verdict('a-class', abs_t2 - T.adjoint() @ T, tol)


def check_quasi_star_a_class(Mx: OpMatrix, tol: float = 1e-8) -> Verdict:
    """T*|T^2|T >= T*|T*|^2 T by a weighted PSD test on the normalized matrix."""
    Mx.require_square()
    t_norm = Mx.norm()
    if t_norm == 0:
        return Verdict('q*a-class', Status.HOLDS, 0.0, source='matrix')
    T = Mx * (1 / t_norm)
    T_star = T.adjoint()
    T2 = T @ T
    abs_t2 = (T2.adjoint() @ T2).psd_power(0.5)
    return _psd_verdict('q*a-class', T_star @ abs_t2 @ T - T_star @ T @ T_star @ T, tol)
