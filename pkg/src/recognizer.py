"""
Recognizer
Decide whether a matrix is a conditional type operator f -> E(wf) and recover the
partition and the weight.

"Positive" here is lattice positivity (f >= 0 implies Tf >= 0, i.e. entrywise
non-negative in atom coordinates), not positive semidefiniteness.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from scipy import linalg as la
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from src.measure import MeasureSpace, Partition, cond_exp
from src.wct_operator import OpMatrix, WctOperator

logger = logging.getLogger(__name__)

RECOGNIZER_TOL = 1e-10

CONDITIONS = ('positive', 'order continuous', 'T²=T', 'T1=1', 'range sublattice')


@dataclass(frozen=True)
class ConditionVerdict:
    name: str
    passed: bool
    defect: float = 0.0
    note: str = ''

    def to_dict(self) -> Dict[str, Any]:
        out = {'condition': self.name, 'passed': self.passed, 'defect': self.defect}
        if self.note:
            out['note'] = self.note
        return out


@dataclass(eq=False)
class RecognitionResult:
    is_wct_form: bool
    partition: Optional[Partition] = None
    weight: Optional[np.ndarray] = None
    failed_condition: Optional[str] = None
    conditions: List[ConditionVerdict] = field(default_factory=list)
    defect: Optional[float] = None

    def to_dict(self, space: Optional[MeasureSpace] = None) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            'is_wct_form': self.is_wct_form,
            'failed_condition': self.failed_condition,
            'conditions': [c.to_dict() for c in self.conditions],
            'reconstruction_defect': self.defect,
        }
        if self.partition is not None:
            blocks = self.partition.blocks
            out['partition'] = ([[space.atoms[i] for i in b] for b in blocks] if space
                                else [list(b) for b in blocks])
        if self.weight is not None:
            out['weight'] = [[float(z.real), float(z.imag)] for z in self.weight]
        return out


def _scale(M: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0


def _range_sublattice(M: np.ndarray, tol: float) -> ConditionVerdict:
    """|f| stays in the range for every column and every difference of two columns."""
    basis = la.orth(M, rcond=tol)
    if basis.shape[1] == 0:
        return ConditionVerdict('range sublattice', True)
    columns = [M[:, j] for j in range(M.shape[1])]
    columns += [M[:, i] - M[:, j] for i in range(M.shape[1]) for j in range(i + 1, M.shape[1])]
    worst = 0.0
    for v in columns:
        modulus = np.abs(v).astype(complex)
        residual = modulus - basis @ (basis.conj().T @ modulus)
        worst = max(worst, float(np.max(np.abs(residual))) / max(1.0, float(np.max(modulus))))
    return ConditionVerdict('range sublattice', worst <= tol, worst)


def check_conditions(Mx: OpMatrix, tol: float = RECOGNIZER_TOL) -> List[ConditionVerdict]:
    """Positivity, order continuity, idempotence, T1 = 1 and the range sublattice."""
    Mx.require_square()
    M = Mx.entries
    scale = _scale(M)
    n = Mx.space.size

    negative = float(max(np.max(np.abs(M.imag)), np.max(-M.real), 0.0))
    positive = ConditionVerdict('positive', negative <= tol * scale, negative)
    continuous = ConditionVerdict('order continuous', True,
                                  note='automatic in finite dimension')
    idempotent_defect = float(np.max(np.abs(M @ M - M)))
    idempotent = ConditionVerdict('T²=T', idempotent_defect <= tol * scale ** 2,
                                  idempotent_defect)
    unit_defect = float(np.max(np.abs(M @ np.ones(n) - 1)))
    unital = ConditionVerdict('T1=1', unit_defect <= tol * scale, unit_defect)
    return [positive, continuous, idempotent, unital, _range_sublattice(M, tol * scale)]


def build_conditional_matrix(space: MeasureSpace, partition: Partition, weight) -> OpMatrix:
    """Matrix of f -> E(weight * f)."""
    return WctOperator(space, partition, u=weight, w=np.ones(space.size)).to_matrix()


def _blocks_from_rows(M: np.ndarray, tol: float) -> Partition:
    """Atoms share a block iff their rows agree (connected components of that relation)."""
    diffs = np.max(np.abs(M[:, None, :] - M[None, :, :]), axis=2)
    adjacency = csr_matrix(diffs <= tol)
    _, labels = connected_components(adjacency, directed=False)
    return Partition.from_labels(labels)


def recover_structure(Mx: OpMatrix, tol: float = RECOGNIZER_TOL) -> RecognitionResult:
    conditions = check_conditions(Mx, tol)
    failed = next((c for c in conditions if not c.passed), None)
    if failed is not None:
        logger.debug(
            f"Not a conditional type operator: {failed.name} (defect {failed.defect:.3e})"
        )
        return RecognitionResult(False, failed_condition=failed.name, conditions=conditions)

    space = Mx.space
    M = Mx.entries
    scale = _scale(M)
    partition = _blocks_from_rows(M, tol * scale)
    block_mu = np.bincount(partition.labels, weights=space.mu)[partition.labels]
    weight = np.diag(M).real * block_mu / space.mu
    mean = cond_exp(weight, partition, space).real
    weight = np.where(mean > 0, weight / np.where(mean > 0, mean, 1.0), weight)

    rebuilt = build_conditional_matrix(space, partition, weight)
    defect = float(np.max(np.abs(rebuilt.entries - M)))
    if defect > tol * scale:
        logger.warning(f"All conditions pass but the rebuild differs by {defect:.3e}")
        return RecognitionResult(False, partition, weight, failed_condition='reconstruction',
                                 conditions=conditions, defect=defect)
    return RecognitionResult(True, partition, weight.astype(complex), conditions=conditions,
                             defect=defect)


def recognize(Mx: OpMatrix, tol: float = RECOGNIZER_TOL) -> RecognitionResult:
    return recover_structure(Mx, tol)
