"""
Measure Core
Finite atomic measure spaces, partitions (sub-sigma-algebras), measurable functions,
the mu-weighted L2 geometry and the conditional expectation operator.

A measurable function is a complex numpy vector with one entry per atom.
"""

import logging
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.exceptions import DimensionMismatchError, ScenarioFormatError

logger = logging.getLogger(__name__)

SUPPORT_TOL = 1e-12


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class MeasureSpace:
    """Atoms with strictly positive weights mu_i."""

    atoms: Tuple[str, ...]
    mu: np.ndarray

    def __post_init__(self):
        atoms = tuple(str(a) for a in self.atoms)
        mu = np.array(self.mu, dtype=float).ravel()
        if len(atoms) == 0:
            raise ScenarioFormatError("A measure space needs at least one atom")
        if len(set(atoms)) != len(atoms):
            raise ScenarioFormatError(f"Atom identifiers must be unique: {atoms}")
        if mu.shape != (len(atoms),):
            raise ScenarioFormatError(
                f"Expected {len(atoms)} weights, got {mu.size}"
            )
        if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
            raise ScenarioFormatError(f"Atom weights must be finite and > 0: {mu.tolist()}")
        object.__setattr__(self, 'atoms', atoms)
        object.__setattr__(self, 'mu', _frozen(mu))

    @classmethod
    def uniform(cls, n: int, total: float = 1.0) -> 'MeasureSpace':
        return cls(tuple(f"x{i + 1}" for i in range(n)), np.full(n, total / n))

    @property
    def size(self) -> int:
        return len(self.atoms)

    def index(self, atom: str) -> int:
        try:
            return self.atoms.index(atom)
        except ValueError:
            raise ScenarioFormatError(f"Unknown atom id {atom!r}") from None

    def __eq__(self, other) -> bool:
        if not isinstance(other, MeasureSpace):
            return NotImplemented
        return self.atoms == other.atoms and np.array_equal(self.mu, other.mu)

    def __hash__(self):
        return hash((self.atoms, self.mu.tobytes()))


@dataclass(frozen=True, eq=True)
class Partition:
    """A sub-sigma-algebra of a finite atomic space, as a partition of atom indices.

    Blocks are stored canonically: each block sorted, blocks ordered by smallest index.
    """

    blocks: Tuple[Tuple[int, ...], ...]
    size: int

    def __post_init__(self):
        blocks = [tuple(sorted(int(i) for i in b)) for b in self.blocks]
        if any(len(b) == 0 for b in blocks):
            raise ScenarioFormatError("Partition blocks must be non-empty")
        seen = [i for b in blocks for i in b]
        if len(seen) != len(set(seen)):
            raise ScenarioFormatError("Partition blocks must be pairwise disjoint")
        if sorted(seen) != list(range(self.size)):
            raise ScenarioFormatError("Partition blocks must cover every atom exactly once")
        object.__setattr__(self, 'blocks', tuple(sorted(blocks, key=lambda b: b[0])))

    @classmethod
    def trivial(cls, n: int) -> 'Partition':
        """The partition {X}: E is the global weighted average."""
        return cls((tuple(range(n)),), n)

    @classmethod
    def discrete(cls, n: int) -> 'Partition':
        """Singleton blocks: A = Sigma and E is the identity."""
        return cls(tuple((i,) for i in range(n)), n)

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> 'Partition':
        labels = np.asarray(labels)
        blocks = [tuple(np.flatnonzero(labels == lab)) for lab in np.unique(labels)]
        return cls(tuple(blocks), len(labels))

    @property
    def labels(self) -> np.ndarray:
        """Block index of every atom."""
        out = np.empty(self.size, dtype=int)
        for b, block in enumerate(self.blocks):
            out[list(block)] = b
        return out

    @property
    def count(self) -> int:
        return len(self.blocks)

    def block_of(self, index: int) -> Tuple[int, ...]:
        return self.blocks[int(self.labels[index])]


def as_fn(values: Iterable, space: MeasureSpace) -> np.ndarray:
    """Coerce values to a complex function on `space`, checking the atom count."""
    f = np.asarray(values, dtype=complex).ravel()
    if f.shape != (space.size,):
        raise DimensionMismatchError(
            f"Function has {f.size} values but the space has {space.size} atoms"
        )
    return f


def _check_partition(partition: Partition, space: MeasureSpace) -> None:
    if partition.size != space.size:
        raise DimensionMismatchError(
            f"Partition covers {partition.size} atoms but the space has {space.size}"
        )


def block_measures(partition: Partition, space: MeasureSpace) -> np.ndarray:
    _check_partition(partition, space)
    return np.bincount(partition.labels, weights=space.mu, minlength=partition.count)


def cond_exp(f, partition: Partition, space: MeasureSpace) -> np.ndarray:
    """E(f): the mu-weighted average of f over each block, broadcast back to atoms.

    The average is taken around the block's first value, so block-constant input is
    returned unchanged (E is exactly idempotent).
    """
    f = as_fn(f, space)
    _check_partition(partition, space)
    labels = partition.labels
    first = np.array([block[0] for block in partition.blocks])
    pivot = f[first]
    deviation = (f - pivot[labels]) * space.mu
    acc = np.zeros(partition.count, dtype=complex)
    np.add.at(acc, labels, deviation)
    means = pivot + acc / block_measures(partition, space)
    return means[labels]


def blockwise(values, partition: Partition) -> np.ndarray:
    """Broadcast one value per block to one value per atom."""
    values = np.asarray(values)
    return values[partition.labels]


def indicator(block: Iterable[int], space: MeasureSpace) -> np.ndarray:
    chi = np.zeros(space.size, dtype=complex)
    chi[list(block)] = 1.0
    return chi


def is_measurable(f, partition: Partition, space: MeasureSpace,
                  tol: float = SUPPORT_TOL) -> bool:
    """True when f is constant on every block (A-measurable)."""
    f = as_fn(f, space)
    scale = max(float(np.max(np.abs(f))), 1.0)
    return bool(np.all(np.abs(f - cond_exp(f, partition, space)) <= tol * scale))


def inner(f, g, space: MeasureSpace) -> complex:
    """<f, g> = sum_i f_i conj(g_i) mu_i."""
    f = as_fn(f, space)
    g = as_fn(g, space)
    return complex(np.vdot(g, f * space.mu))


def norm(f, space: MeasureSpace) -> float:
    f = as_fn(f, space)
    return float(np.sqrt(np.sum(np.abs(f) ** 2 * space.mu)))


def support(f, tol: float = SUPPORT_TOL, scale: Optional[np.ndarray] = None) -> np.ndarray:
    """Boolean mask of atoms where |f_i| > tol * scale.

    `scale` defaults to max|f|, which makes the tolerance relative; it may also be a
    per-atom array.
    """
    if tol < 0:
        raise ValueError("Support tolerance must be non-negative")
    values = np.abs(np.asarray(f))
    if scale is None:
        scale = values.max() if values.size else 0.0
    return values > tol * np.asarray(scale)


def support_atoms(mask: np.ndarray, space: MeasureSpace) -> FrozenSet[str]:
    return frozenset(a for a, inside in zip(space.atoms, mask) if inside)


@dataclass(frozen=True, eq=False)
class CondData:
    """Conditional moments of the pair (u, w) that every closed form is built from."""

    Eu2: np.ndarray
    Ew2: np.ndarray
    Euw: np.ndarray
    Eu: np.ndarray
    Ew: np.ndarray
    S: np.ndarray
    G: np.ndarray
    S0: np.ndarray
    cs_defect: float

    @property
    def q(self) -> np.ndarray:
        """|E(uw)|^2 with values inside the support tolerance set to exact zero."""
        return np.where(self.S0, np.abs(self.Euw) ** 2, 0.0)

    @property
    def r(self) -> np.ndarray:
        """|E(u)|^2."""
        return np.abs(self.Eu) ** 2


def cond_data(u, w, partition: Partition, space: MeasureSpace,
              tol: float = SUPPORT_TOL) -> CondData:
    u = as_fn(u, space)
    w = as_fn(w, space)
    Eu2 = np.maximum(cond_exp(np.abs(u) ** 2, partition, space).real, 0.0)
    Ew2 = np.maximum(cond_exp(np.abs(w) ** 2, partition, space).real, 0.0)
    Euw = cond_exp(u * w, partition, space)
    Eu = cond_exp(u, partition, space)
    Ew = cond_exp(w, partition, space)

    S = support(Eu2, tol)
    G = support(Ew2, tol)
    S0 = support(Euw, tol, scale=np.sqrt(Eu2 * Ew2)) & S & G

    excess = np.abs(Euw) ** 2 - Eu2 * Ew2
    cs_defect = float(np.max(excess / np.maximum(Eu2 * Ew2, np.finfo(float).tiny)))
    if cs_defect > 1e-9:
        logger.warning(f"Conditional Cauchy-Schwarz violated by relative {cs_defect:.3e}")

    return CondData(
        Eu2=_frozen(Eu2), Ew2=_frozen(Ew2), Euw=_frozen(Euw),
        Eu=_frozen(Eu), Ew=_frozen(Ew),
        S=_frozen(S), G=_frozen(G), S0=_frozen(S0),
        cs_defect=max(cs_defect, 0.0),
    )


def partition_from_atom_blocks(blocks: List[List[str]], space: MeasureSpace) -> Partition:
    """Build a Partition from blocks of atom identifiers."""
    return Partition(tuple(tuple(space.index(a) for a in block) for block in blocks),
                     space.size)
