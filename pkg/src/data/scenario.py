"""
Scenario
A weighted conditional type operator together with its measure space, as read from and
written to scenario files.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence

import numpy as np

from src.exceptions import ScenarioFormatError
from src.measure import MeasureSpace, Partition, as_fn, partition_from_atom_blocks
from src.wct_operator import OpMatrix, WctOperator

logger = logging.getLogger(__name__)


def parse_complex(value: Any, where: str) -> complex:
    """[re, im] or a bare real number."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(float(value), 0.0)
    if (isinstance(value, (list, tuple)) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        return complex(float(value[0]), float(value[1]))
    raise ScenarioFormatError(f"{where}: expected [re, im], got {value!r}")


def parse_vector(values: Any, size: int, where: str) -> np.ndarray:
    if not isinstance(values, list):
        raise ScenarioFormatError(f"{where}: expected a list")
    if len(values) != size:
        raise ScenarioFormatError(f"{where}: expected {size} entries, got {len(values)}")
    return np.array([parse_complex(v, f"{where}[{i}]") for i, v in enumerate(values)])


def complex_pairs(values: Sequence[complex]) -> List[List[float]]:
    return [[float(np.real(z)), float(np.imag(z))] for z in values]


def _require(data: Dict, key: str, where: str) -> Any:
    if not isinstance(data, dict):
        raise ScenarioFormatError(f"{where}: expected a JSON object")
    if key not in data:
        raise ScenarioFormatError(f"{where}: missing field {key!r}")
    return data[key]


def parse_space(data: Dict, where: str = 'scenario') -> MeasureSpace:
    atoms = _require(data, 'atoms', where)
    mu = _require(data, 'mu', where)
    if not isinstance(atoms, list) or not isinstance(mu, list):
        raise ScenarioFormatError(f"{where}: 'atoms' and 'mu' must be lists")
    if len(atoms) != len(mu):
        raise ScenarioFormatError(f"{where}: {len(atoms)} atoms but {len(mu)} weights")
    if not all(isinstance(m, (int, float)) and not isinstance(m, bool) for m in mu):
        raise ScenarioFormatError(f"{where}: weights must be numbers")
    return MeasureSpace(tuple(str(a) for a in atoms), np.array(mu, dtype=float))


@dataclass(frozen=True, eq=False)
class Scenario:
    space: MeasureSpace
    partition: Partition
    u: np.ndarray
    w: np.ndarray
    label: str = 'scenario'

    def __post_init__(self):
        object.__setattr__(self, 'u', as_fn(self.u, self.space))
        object.__setattr__(self, 'w', as_fn(self.w, self.space))
        if self.partition.size != self.space.size:
            raise ScenarioFormatError(
                f"Partition covers {self.partition.size} atoms, space has {self.space.size}"
            )

    @property
    def tag(self) -> str:
        return self.label.rsplit('-', 1)[0]

    def operator(self, tol: float = None) -> WctOperator:
        if tol is None:
            return WctOperator(self.space, self.partition, self.u, self.w)
        return WctOperator(self.space, self.partition, self.u, self.w, tol=tol)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return (self.label == other.label and self.space == other.space
                and self.partition == other.partition
                and np.array_equal(self.u, other.u) and np.array_equal(self.w, other.w))

    def to_dict(self) -> Dict[str, Any]:
        atoms = self.space.atoms
        return {
            'label': self.label,
            'atoms': list(atoms),
            'mu': [float(m) for m in self.space.mu],
            'partition': [[atoms[i] for i in block] for block in self.partition.blocks],
            'u': complex_pairs(self.u),
            'w': complex_pairs(self.w),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Scenario':
        space = parse_space(data)
        blocks = _require(data, 'partition', 'scenario')
        if not isinstance(blocks, list) or not all(isinstance(b, list) for b in blocks):
            raise ScenarioFormatError("scenario: 'partition' must be a list of atom lists")
        partition = partition_from_atom_blocks(blocks, space)
        u = parse_vector(_require(data, 'u', 'scenario'), space.size, 'u')
        w = parse_vector(_require(data, 'w', 'scenario'), space.size, 'w')
        return cls(space, partition, u, w, str(data.get('label', 'scenario')))


def matrix_from_dict(data: Dict[str, Any]) -> OpMatrix:
    """{"atoms": [...], "mu": [...], "matrix": [[[re, im], ...], ...]}."""
    space = parse_space(data, 'matrix file')
    rows = _require(data, 'matrix', 'matrix file')
    if not isinstance(rows, list) or len(rows) != space.size:
        raise ScenarioFormatError(f"matrix file: expected {space.size} rows")
    entries = np.array([parse_vector(row, space.size, f"matrix[{i}]")
                        for i, row in enumerate(rows)])
    return OpMatrix(entries, space)


def matrix_to_dict(Mx: OpMatrix) -> Dict[str, Any]:
    return {
        'atoms': list(Mx.space.atoms),
        'mu': [float(m) for m in Mx.space.mu],
        'matrix': Mx.to_rows(),
    }
