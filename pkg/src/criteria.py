"""
Class Criteria
Pointwise evaluation of the closed-form membership criteria for T = M_w E M_u.

Every criterion is reduced to per-atom coefficients (a, b, c) of
    h(t) = a - (1+n) t^n b + n t^(n+1) c,   t > 0,
whose infimum over t > 0 is decided analytically: for c > 0 it sits at t* = b/c and
h >= 0 for all t iff a c^n >= b^(n+1); for b <= 0 the condition is a >= 0; for c = 0
and b > 0 it always fails.
"""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from src.exceptions import PreconditionError
from src.measure import is_measurable, support
from src.wct_operator import WctOperator

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
FORMS = ('operator', 'displayed')


class Status(str, Enum):
    HOLDS = 'holds'
    FAILS = 'fails'
    UNKNOWN = 'unknown'


@dataclass(frozen=True)
class ClassParams:
    M: float = 1.0
    k: float = 1.0
    n: int = 1

    def __post_init__(self):
        if not self.M > 0:
            raise PreconditionError(f"M must be positive, got {self.M}")
        if not self.k > 0:
            raise PreconditionError(f"k must be positive, got {self.k}")
        if int(self.n) != self.n or self.n < 1:
            raise PreconditionError(f"n must be a positive integer, got {self.n}")

    def int_k(self) -> int:
        if int(self.k) != self.k:
            raise PreconditionError(f"k must be a positive integer here, got {self.k}")
        return int(self.k)

    def to_dict(self) -> Dict[str, float]:
        return {'M': float(self.M), 'k': float(self.k), 'n': int(self.n)}


@dataclass(eq=False)
class Verdict:
    """Three-valued outcome with the worst normalized slack and an optional witness."""

    class_id: str
    status: Status
    margin: float
    params: Dict[str, Any] = field(default_factory=dict)
    witness_atom: Optional[str] = None
    witness_vector: Optional[np.ndarray] = None
    boundary: bool = False
    source: str = 'criterion'
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS

    @property
    def fails(self) -> bool:
        return self.status is Status.FAILS

    def to_dict(self) -> Dict[str, Any]:
        out = {
            'class': self.class_id,
            'params': self.params,
            'status': self.status.value,
            'margin': float(self.margin),
            'witness_atom': self.witness_atom,
            'boundary': self.boundary,
            'source': self.source,
        }
        if self.witness_vector is not None:
            out['witness_vector'] = [[float(z.real), float(z.imag)]
                                     for z in self.witness_vector]
        if self.details:
            out['details'] = self.details
        return out


@dataclass(frozen=True, eq=False)
class CriterionCurve:
    """Per-atom coefficients of h(t) = a - (1+n) t^n b + n t^(n+1) c."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    n: float

    def __post_init__(self):
        for name in ('a', 'b', 'c'):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(self.c < 0):
            raise ValueError("Pencil coefficient c must be non-negative")

    def evaluate(self, t) -> np.ndarray:
        """h at each t (rows) for each atom (columns)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
        n = self.n
        return self.a - (1 + n) * t ** n * self.b + n * t ** (n + 1) * self.c

    def reduce(self) -> Tuple[np.ndarray, np.ndarray]:
        """(slack, scale) per atom; h >= 0 for all t > 0 iff slack >= 0."""
        n = self.n
        positive_b = self.b > 0
        lhs = self.a * self.c ** n
        rhs = np.where(positive_b, self.b, 0.0) ** (n + 1)
        slack = np.where(positive_b, lhs - rhs, self.a)
        scale = np.where(positive_b, np.maximum(np.abs(lhs), rhs), np.abs(self.a))
        return slack, scale

    def stationary_point(self) -> np.ndarray:
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.where(self.c > 0, self.b / self.c, np.inf)


def _normalized(slack: np.ndarray, scale: np.ndarray) -> np.ndarray:
    tiny = np.finfo(float).tiny
    return np.where(scale > tiny, slack / np.maximum(scale, tiny), 0.0)


@dataclass(frozen=True, eq=False)
class _Evaluation:
    """Normalized slack per atom with the atoms the condition is restricted to."""

    normalized: np.ndarray
    mask: np.ndarray

    @classmethod
    def from_curve(cls, curve: CriterionCurve, mask: Optional[np.ndarray] = None):
        slack, scale = curve.reduce()
        return cls.from_slack(slack, scale, mask)

    @classmethod
    def from_slack(cls, slack, scale, mask: Optional[np.ndarray] = None):
        normalized = _normalized(np.asarray(slack, float), np.asarray(scale, float))
        mask = np.ones(normalized.shape, dtype=bool) if mask is None else np.asarray(mask)
        return cls(normalized=normalized, mask=mask)

    def worst(self) -> Tuple[float, Optional[int]]:
        if not np.any(self.mask):
            return 0.0, None
        values = np.where(self.mask, self.normalized, np.inf)
        index = int(np.argmin(values))
        return float(values[index]), index

    def failing(self, tol: float) -> np.ndarray:
        return self.mask & (self.normalized < -tol)

    def passes(self, tol: float) -> bool:
        return not np.any(self.failing(tol))


def _verdict(T: WctOperator, class_id: str, params: Dict[str, Any],
             decider: _Evaluation, tol: float, status: Optional[Status] = None,
             **details) -> Verdict:
    margin, index = decider.worst()
    failing = decider.failing(tol)
    if status is None:
        status = Status.FAILS if np.any(failing) else Status.HOLDS
    atoms = T.space.atoms
    verdict = Verdict(
        class_id=class_id,
        status=status,
        margin=margin,
        params=params,
        witness_atom=atoms[index] if status is Status.FAILS and index is not None else None,
        boundary=status is Status.HOLDS and abs(margin) <= tol,
        details={'failing_atoms': [a for a, bad in zip(atoms, failing) if bad], **details},
    )
    logger.debug(f"{class_id} {params}: {status.value} (margin {margin:.3e})")
    return verdict


def _check_form(form: str) -> None:
    if form not in FORMS:
        raise PreconditionError(f"Unknown criterion form {form!r}; expected one of {FORMS}")


def crit_quasi_star_paranormal(T: WctOperator, tol: float = DEFAULT_TOL) -> Verdict:
    """E(|u|^2) E(|w|^2) <= |E(uw)|^2 on G; exact."""
    c = T.cond
    es = c.Eu2 * c.Ew2
    decider = _Evaluation.from_slack(c.q - es, np.maximum(c.q, es), mask=c.G)
    return _verdict(T, 'q*p', {}, decider, tol)


def paranormal_curve(T: WctOperator, M: float) -> CriterionCurve:
    """Necessary condition of M-paranormality as a quadratic pencil in lambda."""
    c = T.cond
    e, r = c.Ew2, c.r
    return CriterionCurve(a=M ** 2 * c.q * e * r, b=e * r, c=np.ones_like(e), n=1)


def _paranormal_pair(T: WctOperator, M: float) -> Tuple[_Evaluation, bool]:
    """Necessary evaluation and whether the sufficient condition (w = 0) holds."""
    return _Evaluation.from_curve(paranormal_curve(T, M)), not np.any(T.cond.G)


def crit_m_paranormal(T: WctOperator, M: float, tol: float = DEFAULT_TOL) -> Verdict:
    if not M > 0:
        raise PreconditionError(f"M must be positive, got {M}")
    necessary, sufficient = _paranormal_pair(T, M)
    status = _three_valued(necessary, sufficient, tol)
    return _verdict(T, 'm', {'M': float(M)}, necessary, tol, status=status,
                    necessary=necessary.passes(tol), sufficient=sufficient)


def crit_paranormal(T: WctOperator, tol: float = DEFAULT_TOL) -> Verdict:
    verdict = crit_m_paranormal(T, 1.0, tol)
    verdict.class_id = 'p'
    verdict.params = {}
    return verdict


def _three_valued(necessary: _Evaluation, sufficient: bool, tol: float) -> Status:
    if sufficient:
        return Status.HOLDS
    if not necessary.passes(tol):
        return Status.FAILS
    return Status.UNKNOWN


def _require_measurable_u(T: WctOperator) -> None:
    if not is_measurable(T.u, T.partition, T.space):
        raise PreconditionError("u must be constant on every block of the partition")


def m_ameasurable_curve(T: WctOperator, M: float) -> CriterionCurve:
    _require_measurable_u(T)
    u2 = np.abs(T.u) ** 2
    e = T.cond.Ew2
    return CriterionCurve(a=M ** 2 * u2 * np.abs(T.cond.Ew) ** 2 * e * u2, b=e * u2,
                          c=np.ones_like(e), n=1)


def crit_m_paranormal_ameasurable(T: WctOperator, M: float,
                                  tol: float = DEFAULT_TOL) -> Verdict:
    """Exact M-paranormal criterion when u is A-measurable."""
    if not M > 0:
        raise PreconditionError(f"M must be positive, got {M}")
    curve = m_ameasurable_curve(T, M)
    return _verdict(T, 'm-a', {'M': float(M)}, _Evaluation.from_curve(curve), tol)


def absolute_k_curve(T: WctOperator, k: float, r: np.ndarray,
                     form: str = 'operator') -> CriterionCurve:
    """Absolute-k pencil with |u|^2 (A-measurable u) or E(|u|^2) (necessary only) as r."""
    c = T.cond
    e, s = c.Ew2, c.Eu2
    with np.errstate(divide='ignore', invalid='ignore'):
        s_power = np.where(c.S, s ** (k - 1), 0.0)
    a = c.q * s_power * e ** k * r
    if form == 'displayed':
        a = a * r
    return CriterionCurve(a=a, b=e * r, c=np.ones_like(e), n=k)


def crit_absolute_k(T: WctOperator, k: float, tol: float = DEFAULT_TOL,
                    form: str = 'operator') -> Verdict:
    """Absolute-k-paranormal; exact when u is A-measurable, three-valued otherwise."""
    if not k > 0:
        raise PreconditionError(f"k must be positive, got {k}")
    _check_form(form)
    params = {'k': float(k)}
    if is_measurable(T.u, T.partition, T.space):
        curve = absolute_k_curve(T, k, np.abs(T.u) ** 2, form)
        return _verdict(T, 'abs-k', params, _Evaluation.from_curve(curve), tol,
                        exact=True, form=form)

    necessary = _Evaluation.from_curve(absolute_k_curve(T, k, T.cond.r, form))
    sufficient = not np.any(T.cond.G)
    status = _three_valued(necessary, sufficient, tol)
    return _verdict(T, 'abs-k', params, necessary, tol, status=status, exact=False,
                    form=form, necessary=necessary.passes(tol), sufficient=sufficient)


def nk_curve(T: WctOperator, n: int, k: int, form: str = 'operator') -> CriterionCurve:
    """Coefficients of the (n,k)-quasi-*-paranormal pencil in mu."""
    c = T.cond
    q, e, s = c.q, c.Ew2, c.Eu2
    a = q ** (n + k) * e
    b = q ** (k - 1) * e ** 2 * s
    cc = q ** (k - 1) * e
    if form == 'displayed':
        b = np.where(c.S0, b, 0.0)
        cc = np.where(c.S0, cc, 0.0)
    return CriterionCurve(a=a, b=b, c=cc, n=n)


def crit_nk_quasi_star(T: WctOperator, n: int, k: int, tol: float = DEFAULT_TOL,
                       form: str = 'operator') -> Verdict:
    """(n,k)-quasi-*-paranormal; exact."""
    _check_form(form)
    for name, value in (('n', n), ('k', k)):
        if int(value) != value or value < 1:
            raise PreconditionError(f"{name} must be a positive integer, got {value}")
    curve = nk_curve(T, int(n), int(k), form)
    return _verdict(T, '(n,k)', {'n': int(n), 'k': int(k)}, _Evaluation.from_curve(curve),
                    tol, form=form)


def n_star_curve(T: WctOperator, n: int, form: str = 'operator') -> CriterionCurve:
    """Coefficients of the n-*-paranormal pencil.

    On S0 the |E(uw)|^-2 factors are used as written; off S0 the operator form uses
    the pencil of T*^(n+1) T^(n+1), T T* and I directly, the displayed form drops both terms.
    """
    c = T.cond
    q, e, s = c.q, c.Ew2, c.Eu2
    inv_q = np.where(c.S0, 1.0 / np.where(c.S0, q, 1.0), 0.0)
    a = q ** n * e
    b = e ** 2 * s * inv_q
    cc = e * inv_q
    if form == 'operator':
        b = np.where(c.S0, b, e ** 2 * s)
        cc = np.where(c.S0, cc, e)
    return CriterionCurve(a=a, b=b, c=cc, n=n)


def crit_n_star(T: WctOperator, n: int, tol: float = DEFAULT_TOL,
                form: str = 'operator') -> Verdict:
    _check_form(form)
    if int(n) != n or n < 1:
        raise PreconditionError(f"n must be a positive integer, got {n}")
    curve = n_star_curve(T, int(n), form)
    return _verdict(T, 'n*', {'n': int(n)}, _Evaluation.from_curve(curve), tol, form=form)


def crit_star_paranormal(T: WctOperator, tol: float = DEFAULT_TOL) -> Verdict:
    """*-paranormal is the n = 1 case of n-*-paranormal."""
    verdict = crit_n_star(T, 1, tol)
    verdict.class_id = '*p'
    verdict.params = {}
    return verdict


def crit_k_quasi_star(T: WctOperator, k: int, tol: float = DEFAULT_TOL,
                      form: str = 'operator') -> Verdict:
    verdict = crit_nk_quasi_star(T, 1, k, tol, form)
    verdict.class_id = 'k-q*'
    verdict.params = {'k': int(k)}
    return verdict


@dataclass(eq=False)
class EquivalenceReport:
    """Pointwise condition (c) and which of (a) quasi-*-paranormal, (b) quasi-*-A-class,
    (d) A-class may be asserted equivalent to it."""

    condition_c: Verdict
    g_is_x: bool
    eu_support_is_x: bool
    equivalent: List[str]
    notes: List[str] = field(default_factory=list)

    @property
    def expects_joint_point_equality(self) -> bool:
        """sigma_p = sigma_jp is expected when (a) holds and G = X."""
        return self.g_is_x and self.condition_c.holds

    def to_dict(self) -> Dict[str, Any]:
        return {
            'condition_c': self.condition_c.to_dict(),
            'G_is_X': self.g_is_x,
            'S_Eu_is_X': self.eu_support_is_x,
            'equivalent': self.equivalent,
            'expects_joint_point_equality': self.expects_joint_point_equality,
            'notes': self.notes,
        }


def crit_equivalences(T: WctOperator, tol: float = DEFAULT_TOL) -> EquivalenceReport:
    c = T.cond
    condition_c = crit_quasi_star_paranormal(T, tol)
    condition_c.class_id = 'q*p-c'
    g_is_x = bool(np.all(c.G))
    eu_is_x = bool(np.all(support(c.Eu, T.tol)))

    notes = []
    if g_is_x:
        equivalent = ['a', 'b', 'c']
        if eu_is_x:
            equivalent.append('d')
        else:
            notes.append("S(E(u)) != X: A-class equivalence not asserted")
    else:
        equivalent = ['a', 'c']
        notes.append("G != X: quasi-*-A-class equivalence not asserted; (c) evaluated on G")
    return EquivalenceReport(condition_c=condition_c, g_is_x=g_is_x,
                             eu_support_is_x=eu_is_x, equivalent=equivalent, notes=notes)


@dataclass(frozen=True)
class ClassSpec:
    """Registry entry.

    `degree` gives the homogeneity (in T, in x) of the two sides of the defining
    norm inequality, used to normalize violations.
    """

    class_id: str
    name: str
    criterion: Callable[[WctOperator, ClassParams, float, str], Verdict]
    degree: Callable[[ClassParams], Tuple[float, float]]
    has_forms: bool = False


CLASS_REGISTRY: Dict[str, ClassSpec] = {
    'p': ClassSpec('p', 'paranormal',
                   lambda T, p, tol, form: crit_paranormal(T, tol), lambda p: (2.0, 2.0)),
    'm': ClassSpec('m', 'M-paranormal',
                   lambda T, p, tol, form: crit_m_paranormal(T, p.M, tol),
                   lambda p: (2.0, 2.0)),
    'm-a': ClassSpec('m-a', 'M-paranormal (A-measurable u)',
                     lambda T, p, tol, form: crit_m_paranormal_ameasurable(T, p.M, tol),
                     lambda p: (2.0, 2.0)),
    '*p': ClassSpec('*p', '*-paranormal',
                    lambda T, p, tol, form: crit_star_paranormal(T, tol),
                    lambda p: (2.0, 2.0)),
    'q*p': ClassSpec('q*p', 'quasi-*-paranormal',
                     lambda T, p, tol, form: crit_quasi_star_paranormal(T, tol),
                     lambda p: (4.0, 2.0)),
    'abs-k': ClassSpec('abs-k', 'absolute-k-paranormal',
                       lambda T, p, tol, form: crit_absolute_k(T, p.k, tol, form),
                       lambda p: (p.k + 1, p.k + 1), has_forms=True),
    '(n,k)': ClassSpec('(n,k)', '(n,k)-quasi-*-paranormal',
                       lambda T, p, tol, form: crit_nk_quasi_star(T, p.n, p.int_k(), tol, form),
                       lambda p: (p.k + 1, 1.0), has_forms=True),
    'n*': ClassSpec('n*', 'n-*-paranormal',
                    lambda T, p, tol, form: crit_n_star(T, p.n, tol, form),
                    lambda p: (1.0, 1.0), has_forms=True),
    'k-q*': ClassSpec('k-q*', 'k-quasi-*-paranormal',
                      lambda T, p, tol, form: crit_k_quasi_star(T, p.int_k(), tol, form),
                      lambda p: (p.k + 1, 1.0), has_forms=True),
}

_SPEC_PATTERN = re.compile(r'^\s*(?P<id>\(n,k\)|[a-z*\-]+)\s*(?:=\s*(?P<args>.+?))?\s*$')


_SPLIT_PATTERN = re.compile(r'\s*(\(n,k\)\s*=\s*[^,]+,[^,]+|[^,]+)')


def split_class_specs(text: str) -> List[str]:
    """'q*p,(n,k)=1,2,abs-k=1.5' -> ['q*p', '(n,k)=1,2', 'abs-k=1.5']."""
    return [s.strip() for s in _SPLIT_PATTERN.findall(text) if s.strip()]


def parse_class_spec(text: str) -> Tuple[str, ClassParams]:
    """'q*p', 'p', '*p', 'm=2', 'm-a=2', 'abs-k=1.5', '(n,k)=1,2', 'n*=2', 'k-q*=2'."""
    match = _SPEC_PATTERN.match(text)
    if not match or match.group('id') not in CLASS_REGISTRY:
        raise PreconditionError(f"Unknown class spec {text!r}")
    class_id = match.group('id')
    raw = match.group('args')
    try:
        values = [float(v) for v in raw.split(',')] if raw else []
    except ValueError:
        raise PreconditionError(f"Bad parameters in class spec {text!r}") from None

    expected = {'m': 1, 'm-a': 1, 'abs-k': 1, '(n,k)': 2, 'n*': 1, 'k-q*': 1}.get(class_id, 0)
    if len(values) != expected:
        raise PreconditionError(
            f"Class {class_id!r} takes {expected} parameter(s), got {len(values)}"
        )
    if class_id in ('m', 'm-a'):
        return class_id, ClassParams(M=values[0])
    if class_id in ('abs-k', 'k-q*'):
        return class_id, ClassParams(k=values[0])
    if class_id == '(n,k)':
        if values[0] != int(values[0]):
            raise PreconditionError(f"n must be an integer in {text!r}")
        return class_id, ClassParams(n=int(values[0]), k=values[1])
    if class_id == 'n*':
        if values[0] != int(values[0]):
            raise PreconditionError(f"n must be an integer in {text!r}")
        return class_id, ClassParams(n=int(values[0]))
    return class_id, ClassParams()


def evaluate_class(T: WctOperator, class_id: str, params: ClassParams,
                   tol: float = DEFAULT_TOL, form: str = 'operator') -> Verdict:
    try:
        spec = CLASS_REGISTRY[class_id]
    except KeyError:
        raise PreconditionError(f"Unknown class id {class_id!r}") from None
    return spec.criterion(T, params, tol, form)


def compare_forms(T: WctOperator, class_id: str, params: ClassParams,
                  tol: float = DEFAULT_TOL) -> Optional[Tuple[Verdict, Verdict]]:
    """Operator-form and displayed-form verdicts, or None for single-form classes."""
    if not CLASS_REGISTRY[class_id].has_forms:
        return None
    operator = evaluate_class(T, class_id, params, tol, 'operator')
    displayed = evaluate_class(T, class_id, params, tol, 'displayed')
    if operator.status is not displayed.status:
        logger.info(f"{class_id} {params.to_dict()}: operator form {operator.status.value}, "
                    f"displayed form {displayed.status.value}")
    return operator, displayed
