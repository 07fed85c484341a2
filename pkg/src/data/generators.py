"""
Scenario generators for randomized campaigns.

Every scenario is a pure function of (seed, index): the index picks the generator
round-robin and seeds its own numpy Generator, so campaigns replay exactly.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from src.criteria import ClassParams, parse_class_spec
from src.data.scenario import Scenario
from src.exceptions import PreconditionError
from src.measure import MeasureSpace, Partition, cond_exp

logger = logging.getLogger(__name__)

ZERO_PROBABILITY = 0.1
MODULUS_RANGE = (0.0, 2.0)
MU_RANGE = (0.1, 2.0)


@dataclass(frozen=True)
class CampaignConfig:
    count: int = 100
    seed: int = 0
    max_atoms: int = 8
    max_blocks: int = 4
    generators: Tuple[str, ...] = ('generic', 'cauchy_schwarz_equality', 'a_measurable_u',
                                   'zero_w_block', 'nilpotent_like')
    classes: Tuple[Tuple[str, ClassParams], ...] = field(
        default_factory=lambda: (('q*p', ClassParams()),)
    )
    samples: int = 2000
    ascent_steps: int = 50
    tol: float = 1e-10
    workers: int = 1

    def __post_init__(self):
        if self.count < 1:
            raise PreconditionError("Campaign count must be at least 1")
        if self.max_atoms < 2:
            raise PreconditionError("Scenarios need at least two atoms")
        if not 1 <= self.max_blocks <= self.max_atoms:
            raise PreconditionError("Need 1 <= max_blocks <= max_atoms")
        if not self.generators:
            raise PreconditionError("At least one generator is required")
        unknown = [g for g in self.generators if g not in GENERATORS]
        if unknown:
            raise PreconditionError(
                f"Unknown generator(s) {unknown}; choose from {sorted(GENERATORS)}"
            )

    @classmethod
    def from_specs(cls, class_specs: Sequence[str], **kwargs) -> 'CampaignConfig':
        """Build a config from class spec strings such as 'q*p' or '(n,k)=2,1'."""
        return cls(classes=tuple(parse_class_spec(s) for s in class_specs), **kwargs)

    def to_dict(self) -> Dict:
        return {
            'count': self.count,
            'seed': self.seed,
            'max_atoms': self.max_atoms,
            'max_blocks': self.max_blocks,
            'generators': list(self.generators),
            'classes': [{'class': c, 'params': p.to_dict()} for c, p in self.classes],
            'samples': self.samples,
            'ascent_steps': self.ascent_steps,
            'tol': self.tol,
        }


def _random_fn(rng: np.random.Generator, n: int) -> np.ndarray:
    modulus = rng.uniform(*MODULUS_RANGE, size=n)
    phase = rng.uniform(0.0, 2 * np.pi, size=n)
    values = modulus * np.exp(1j * phase)
    values[rng.random(n) < ZERO_PROBABILITY] = 0.0
    return values


def _random_partition(rng: np.random.Generator, n: int, max_blocks: int) -> Partition:
    """At most n - 1 blocks, so at least one block holds two or more atoms."""
    blocks = int(rng.integers(1, min(max_blocks, n - 1) + 1))
    order = rng.permutation(n)
    cuts = np.sort(rng.choice(np.arange(1, n), size=blocks - 1, replace=False))
    return Partition(tuple(tuple(part) for part in np.split(order, cuts)), n)


def _generic(rng, space, partition):
    return _random_fn(rng, space.size), _random_fn(rng, space.size)


def _cauchy_schwarz_equality(rng, space, partition):
    """u = c_B * conj(w) on every block: conditional Cauchy-Schwarz holds with equality."""
    w = _random_fn(rng, space.size)
    scale = _random_fn(rng, partition.count)
    scale[scale == 0] = 1.0
    return scale[partition.labels] * np.conj(w), w


def _a_measurable_u(rng, space, partition):
    u = _random_fn(rng, partition.count)[partition.labels]
    return u, _random_fn(rng, space.size)


def _zero_w_block(rng, space, partition):
    u, w = _generic(rng, space, partition)
    block = partition.blocks[int(rng.integers(partition.count))]
    w[list(block)] = 0.0
    return u, w


def _nilpotent_like(rng, space, partition):
    """Remove the conj(w) component of u blockwise, forcing E(uw) = 0."""
    u, w = _generic(rng, space, partition)
    Ew2 = cond_exp(np.abs(w) ** 2, partition, space).real
    Euw = cond_exp(u * w, partition, space)
    coeff = np.where(Ew2 > 0, Euw / np.where(Ew2 > 0, Ew2, 1.0), 0.0)
    return u - coeff * np.conj(w), w


GENERATORS: Dict[str, Callable] = {
    'generic': _generic,
    'cauchy_schwarz_equality': _cauchy_schwarz_equality,
    'a_measurable_u': _a_measurable_u,
    'zero_w_block': _zero_w_block,
    'nilpotent_like': _nilpotent_like,
}


def generate(cfg: CampaignConfig, index: int) -> Scenario:
    rng = np.random.default_rng([cfg.seed, index])
    tag = cfg.generators[index % len(cfg.generators)]
    n = int(rng.integers(2, cfg.max_atoms + 1))
    space = MeasureSpace(tuple(f"x{i + 1}" for i in range(n)), rng.uniform(*MU_RANGE, size=n))
    partition = _random_partition(rng, n, cfg.max_blocks)
    u, w = GENERATORS[tag](rng, space, partition)
    logger.debug(f"Generated {tag}-{index}: {n} atoms, {partition.count} blocks")
    return Scenario(space, partition, u, w, label=f"{tag}-{index}")


def generate_all(cfg: CampaignConfig) -> List[Scenario]:
    return [generate(cfg, i) for i in range(cfg.count)]
