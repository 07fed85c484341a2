"""
WCT Lab Interface
Dispatches lab commands to the analysis modules and packages their results as reports.
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Union

from src.campaign import run_campaign_async
from src.config import get_settings
from src.criteria import (
    CLASS_REGISTRY, FORMS, Status, compare_forms, crit_equivalences, evaluate_class,
    parse_class_spec
)
from src.data.generators import CampaignConfig
from src.data.manager import ScenarioManager
from src.data.scenario import Scenario
from src.exceptions import PreconditionError, WctLabError
from src.measure import support_atoms
from src.oracles import (
    OracleConfig, check_a_class, check_quasi_star_a_class, literal_sides, run_oracle
)
from src.recognizer import recognize
from src.spectral import (
    SPECTRUM_ATOL, hausdorff, kernel_consequences, numeric_eigenvalues, riesz_idempotent,
    riesz_self_adjointness, simple_pole_check, spectrum
)
from src.utils.formatter import ReportFormatter
from src.wct_operator import OpMatrix

DEFAULT_CLASSES = ('p', '*p', 'q*p', 'abs-k=1', '(n,k)=1,1', 'n*=1', 'k-q*=1')
COMMANDS = ('check', 'spectrum', 'polar', 'oracle', 'campaign', 'recognize')
POLAR_TOL = 1e-10
ALUTHGE_TOL = 1e-8

ScenarioSource = Union[str, Scenario]


class WctLabInterface:
    def __init__(self, manager: Optional[ScenarioManager] = None):
        self.logger = logging.getLogger(__name__)
        self.settings = get_settings()
        self.manager = manager or ScenarioManager()
        self.formatter = ReportFormatter()

    async def process_command(self, command: str, **options) -> Dict[str, Any]:
        """Run one command and return {'status', 'response', 'report', 'exit_code'}."""
        try:
            command = command.lower().strip()
            if command == 'check':
                result = await self._handle_check(**options)
            elif command == 'spectrum':
                result = await self._handle_spectrum(**options)
            elif command == 'polar':
                result = await self._handle_polar(**options)
            elif command == 'oracle':
                result = await self._handle_oracle(**options)
            elif command == 'campaign':
                result = await self._handle_campaign(**options)
            elif command == 'recognize':
                result = await self._handle_recognize(**options)
            else:
                return {
                    'status': 'error',
                    'message': (f"Unknown command {command!r}; "
                                f"choose from {', '.join(COMMANDS)}"),
                    'exit_code': 2,
                }

            output = options.get('output')
            if output:
                self.manager.write_report(output, result['report'])
            return result

        except (WctLabError, OSError) as e:
            self.logger.error(f"Error running {command}: {str(e)}")
            return {'status': 'error', 'message': str(e), 'exit_code': 2}
        except Exception as e:
            logging.error(f"Error running {command}: {str(e)}", exc_info=True)
            return {'status': 'error', 'message': f"Error running {command}: {str(e)}",
                    'exit_code': 2}

    def _scenario(self, scenario: ScenarioSource) -> Scenario:
        if isinstance(scenario, Scenario):
            return scenario
        if not scenario:
            raise PreconditionError("A scenario file is required")
        return self.manager.load_scenario(scenario)

    def _success(self, lines: List[str], report: Dict[str, Any], exit_code: int) -> Dict:
        report = dict(report, exit_code=exit_code)
        return {'status': 'success', 'response': lines,
                'report': self.formatter.sanitize(report), 'exit_code': exit_code}

    async def _handle_check(self, scenario: ScenarioSource,
                            classes: Sequence[str] = DEFAULT_CLASSES,
                            tol: Optional[float] = None, form: str = 'operator',
                            samples: Optional[int] = None, seed: Optional[int] = None,
                            **_) -> Dict:
        """Pointwise verdicts, with the oracle consulted for every Unknown."""
        scenario = self._scenario(scenario)
        tol = tol if tol is not None else self.settings.tol
        if form not in FORMS:
            raise PreconditionError(f"form must be one of {FORMS}, got {form!r}")
        T = scenario.operator(self.settings.support_tol)
        Mx = T.to_matrix()
        c = T.cond

        verdicts = []
        for spec in classes or DEFAULT_CLASSES:
            class_id, params = parse_class_spec(spec)
            verdict = evaluate_class(T, class_id, params, tol, form)
            entry = verdict.to_dict()
            if verdict.status is Status.UNKNOWN:
                cfg = OracleConfig.from_settings(samples=samples, seed=seed, tol=tol)
                entry['oracle'] = run_oracle(Mx, class_id, params, cfg, T.partition).to_dict()
            forms = compare_forms(T, class_id, params, tol)
            if forms is not None:
                entry['forms'] = {'operator': forms[0].status.value,
                                  'displayed': forms[1].status.value}
            verdicts.append(entry)

        report = {
            'command': 'check',
            'scenario': scenario.label,
            'atoms': scenario.space.size,
            'blocks': scenario.partition.count,
            'norm': {'closed_form': T.norm(), 'matrix': Mx.norm()},
            'supports': {name: sorted(support_atoms(mask, scenario.space))
                         for name, mask in (('S', c.S), ('G', c.G), ('S0', c.S0))},
            'cs_defect': c.cs_defect,
            'verdicts': verdicts,
            'equivalences': crit_equivalences(T, tol).to_dict(),
            'a_class': check_a_class(Mx).to_dict(),
            'quasi_star_a_class': check_quasi_star_a_class(Mx).to_dict(),
        }
        violated = any(_final_status(v) == Status.FAILS.value for v in verdicts)
        return self._success(self.formatter.format_check(report), report, 1 if violated else 0)

    async def _handle_spectrum(self, scenario: ScenarioSource, n: int = 1, k: int = 1,
                               points: int = 64, **_) -> Dict:
        scenario = self._scenario(scenario)
        T = scenario.operator(self.settings.support_tol)
        spec = spectrum(T)
        norm = T.norm()

        riesz = []
        for mu in _nonzero(spec.numeric, norm):
            equivalence = riesz_self_adjointness(T, mu, points=points)
            riesz.append({
                **riesz_idempotent(T, mu, points=points).to_dict(),
                'self_adjoint': equivalence.details['self_adjoint'],
                'kernel_inclusion': equivalence.details['kernel_inclusion'],
                'equivalence': equivalence.status.value,
                'simple_pole': simple_pole_check(T, mu).status.value,
            })
        kernel = kernel_consequences(T, n, k)

        report = {'command': 'spectrum', 'scenario': scenario.label, **spec.to_dict(),
                  'riesz': riesz, 'kernel_checks': kernel.to_dict()}
        failed = (not spec.agreement or bool(kernel.contradictions)
                  or any(r['equivalence'] == Status.FAILS.value for r in riesz))
        return self._success(self.formatter.format_spectrum(report), report, 1 if failed else 0)

    async def _handle_polar(self, scenario: ScenarioSource, **_) -> Dict:
        scenario = self._scenario(scenario)
        T = scenario.operator(self.settings.support_tol)
        Mx = T.to_matrix()
        polar = T.polar()
        norm = max(T.norm(), 1.0)

        original = _nonzero(numeric_eigenvalues(Mx), norm)
        transformed = _nonzero(numeric_eigenvalues(T.aluthge()), norm)
        distance = hausdorff(original, transformed) if original or transformed else 0.0

        report = {
            'command': 'polar',
            'scenario': scenario.label,
            'polar': {
                'reconstruction_defect': polar.reconstruction_defect(Mx),
                'min_eigenvalue': polar.min_eigenvalue(),
                'partial_isometry_defect': polar.partial_isometry_defect(),
                'kernel_ranks': list(polar.kernel_ranks()),
                'kernel_condition': polar.kernel_condition_holds(),
            },
            'aluthge': {'spectrum_match': distance <= ALUTHGE_TOL * norm,
                        'distance': distance},
        }
        p = report['polar']
        failed = (p['reconstruction_defect'] > POLAR_TOL * norm
                  or p['min_eigenvalue'] < -POLAR_TOL * norm
                  or p['partial_isometry_defect'] > POLAR_TOL * norm
                  or not p['kernel_condition']
                  or not report['aluthge']['spectrum_match'])
        return self._success(self.formatter.format_polar(report), report, 1 if failed else 0)

    async def _handle_oracle(self, scenario: ScenarioSource, class_spec: str = 'q*p',
                             samples: Optional[int] = None, seed: Optional[int] = None,
                             workers: Optional[int] = None, ascent_steps: Optional[int] = None,
                             tol: Optional[float] = None, **_) -> Dict:
        scenario = self._scenario(scenario)
        class_id, params = parse_class_spec(class_spec)
        T = scenario.operator(self.settings.support_tol)
        Mx = T.to_matrix()
        cfg = OracleConfig.from_settings(samples=samples, seed=seed, workers=workers,
                                         ascent_steps=ascent_steps, tol=tol)
        verdict = run_oracle(Mx, class_id, params, cfg, T.partition)

        report = {'command': 'oracle', 'scenario': scenario.label,
                  'class': CLASS_REGISTRY[class_id].name, 'verdict': verdict.to_dict()}
        if verdict.witness_vector is not None:
            report['literal_sides'] = literal_sides(Mx, verdict.witness_vector,
                                                    class_id, params).to_dict()
        return self._success(self.formatter.format_oracle(report), report,
                             1 if verdict.fails else 0)

    async def _handle_campaign(self, count: int = 100, seed: int = 0,
                               generators: Optional[Sequence[str]] = None,
                               classes: Optional[Sequence[str]] = None,
                               max_atoms: int = 8, max_blocks: int = 4,
                               samples: Optional[int] = None, workers: Optional[int] = None,
                               **_) -> Dict:
        kwargs: Dict[str, Any] = dict(count=count, seed=seed, max_atoms=max_atoms,
                                      max_blocks=max_blocks,
                                      samples=samples or self.settings.samples,
                                      ascent_steps=self.settings.ascent_steps,
                                      tol=self.settings.tol,
                                      workers=workers or self.settings.workers)
        if generators:
            kwargs['generators'] = tuple(generators)
        cfg = CampaignConfig.from_specs(classes if classes is not None else ('q*p',), **kwargs)
        campaign = await run_campaign_async(cfg)
        report = {'command': 'campaign', **campaign.to_dict()}
        return self._success(self.formatter.format_campaign(report), report, campaign.exit_code)

    async def _handle_recognize(self, matrix: Union[str, OpMatrix],
                                tol: Optional[float] = None, **_) -> Dict:
        """Exit code 0 when the matrix is E(w·) for some partition and weight, 1 otherwise."""
        if isinstance(matrix, OpMatrix):
            Mx, source = matrix, 'matrix'
        else:
            Mx, source = self.manager.load_matrix(matrix), str(matrix)
        result = recognize(Mx) if tol is None else recognize(Mx, tol)
        report = {'command': 'recognize', 'source': source, **result.to_dict(Mx.space)}
        return self._success(self.formatter.format_recognition(report), report,
                             0 if result.is_wct_form else 1)


def _final_status(entry: Dict[str, Any]) -> str:
    oracle = entry.get('oracle')
    if entry['status'] == Status.UNKNOWN.value and oracle:
        return oracle['status']
    return entry['status']


def _nonzero(values, norm: float) -> List[complex]:
    return [z for z in values if abs(z) > SPECTRUM_ATOL * max(1.0, norm)]
