"""
Campaign
Randomized cross-validation of the pointwise criteria against the brute-force oracle,
the block witnesses and the spectral closed forms.
"""

import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from src.criteria import ClassParams, Status, Verdict, compare_forms, evaluate_class
from src.data.generators import CampaignConfig, generate
from src.data.scenario import Scenario
from src.exceptions import PreconditionError
from src.oracles import OracleConfig, block_witness, run_oracle
from src.spectral import spectrum

logger = logging.getLogger(__name__)

AGREEMENT_LABELS = ('agree', 'conflict', 'unresolved',
                    'oracle_resolved_holds', 'oracle_resolved_fails', 'not_applicable')
NOT_APPLICABLE = 'not_applicable'


def agreement_label(criterion: Verdict, oracle: Verdict, witness_found: bool) -> str:
    if criterion.status is Status.UNKNOWN:
        return 'oracle_resolved_fails' if oracle.fails else 'oracle_resolved_holds'
    if criterion.holds:
        return 'conflict' if oracle.fails else 'agree'
    if oracle.fails or witness_found:
        return 'agree'
    return 'unresolved'


def _oracle_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _check_class(scenario: Scenario, class_id: str, params: ClassParams,
                 cfg: CampaignConfig, index: int) -> Dict[str, Any]:
    T = scenario.operator()
    try:
        criterion = evaluate_class(T, class_id, params, cfg.tol)
    except PreconditionError as e:
        logger.info(f"{scenario.label}: {class_id} not applicable: {e}")
        return {'class': class_id, 'params': params.to_dict(), 'criterion': NOT_APPLICABLE,
                'agreement': NOT_APPLICABLE, 'reason': str(e)}
    oracle_cfg = OracleConfig(samples=cfg.samples, seed=_oracle_seed(cfg.seed, index),
                              tol=cfg.tol, ascent_steps=cfg.ascent_steps)
    oracle = run_oracle(T.to_matrix(), class_id, params, oracle_cfg, T.partition)

    witness_found = False
    record: Dict[str, Any] = {
        'class': class_id,
        'params': params.to_dict(),
        'criterion': criterion.status.value,
        'margin': criterion.margin,
        'oracle': oracle.status.value,
    }
    if criterion.fails and criterion.witness_atom is not None:
        witness = block_witness(T, criterion.witness_atom, class_id, params, cfg.tol)
        witness_found = witness is not None
        record['block_witness'] = witness_found

    forms = compare_forms(T, class_id, params, cfg.tol)
    if forms is not None:
        record['forms_agree'] = forms[0].status is forms[1].status

    record['agreement'] = agreement_label(criterion, oracle, witness_found)
    if record['agreement'] == 'conflict':
        logger.error(f"{scenario.label}: {class_id} criterion holds but the oracle found "
                     f"a violation of {oracle.details.get('violation')}")
    elif record['agreement'] == 'unresolved':
        logger.warning(f"{scenario.label}: {class_id} criterion fails with no verified witness")
    return record


def evaluate_scenario(cfg: CampaignConfig, index: int) -> Dict[str, Any]:
    scenario = generate(cfg, index)
    T = scenario.operator()
    spec = spectrum(T)
    record: Dict[str, Any] = {
        'index': index,
        'label': scenario.label,
        'tag': scenario.tag,
        'atoms': scenario.space.size,
        'blocks': scenario.partition.count,
        'spectral_agreement': spec.agreement,
        'spectral_distance': spec.distance,
        'classes': [_check_class(scenario, c, p, cfg, index) for c, p in cfg.classes],
    }
    if not spec.agreement:
        logger.error(f"{scenario.label}: analytic and numeric spectra differ by "
                     f"{spec.distance:.3e}")
    if _needs_replay(record):
        record['scenario'] = scenario.to_dict()
        record['spectrum'] = spec.to_dict()
    return record


def _needs_replay(record: Dict[str, Any]) -> bool:
    if not record['spectral_agreement']:
        return True
    return any(c['agreement'] in ('conflict', 'unresolved') or c.get('forms_agree') is False
               for c in record['classes'])


@dataclass(eq=False)
class CampaignReport:
    config: CampaignConfig
    records: List[Dict[str, Any]]
    summary: Dict[str, Any] = field(default_factory=dict)
    generated_at: str = ''

    @property
    def exit_code(self) -> int:
        failed = (self.summary.get('conflicts') or self.summary.get('unresolved')
                  or self.summary.get('spectral_mismatches'))
        return 1 if failed else 0

    def disagreements(self) -> List[Dict[str, Any]]:
        out = []
        for record in self.records:
            reasons = [f"{c['class']} {c['agreement']}" for c in record['classes']
                       if c['agreement'] in ('conflict', 'unresolved')]
            reasons += [f"{c['class']} operator/displayed forms differ"
                        for c in record['classes'] if c.get('forms_agree') is False]
            if not record['spectral_agreement']:
                reasons.append('spectral mismatch')
            if reasons:
                out.append({'index': record['index'], 'label': record['label'],
                            'reason': '; '.join(reasons), 'scenario': record.get('scenario')})
        return out

    def to_dict(self, include_timestamp: bool = True) -> Dict[str, Any]:
        out = {
            'config': self.config.to_dict(),
            'summary': self.summary,
            'records': self.records,
            'disagreements': self.disagreements(),
            'exit_code': self.exit_code,
        }
        if include_timestamp:
            out['generated_at'] = self.generated_at
        return out


def summarize(records: List[Dict[str, Any]]) -> Dict[str, Any]:
    rows = [
        {'index': r['index'], 'tag': r['tag'], 'class': c['class'],
         'criterion': c['criterion'], 'agreement': c['agreement'],
         'forms_agree': c.get('forms_agree', True)}
        for r in records for c in r['classes']
    ]
    spectral_mismatches = int(sum(not r['spectral_agreement'] for r in records))
    if not rows:
        return {'agreement': {}, 'failure_rate': {}, 'conflicts': 0, 'unresolved': 0,
                'form_disagreements': 0, 'spectral_mismatches': spectral_mismatches}

    frame = pd.DataFrame(rows)
    counts = frame.groupby(['class', 'agreement']).size()
    agreement = {class_id: {label: int(n) for label, n in group.droplevel(0).items()}
                 for class_id, group in counts.groupby(level=0)}
    applicable = frame[frame['agreement'] != NOT_APPLICABLE]
    rates = (applicable.assign(fails=applicable['criterion'] == Status.FAILS.value)
             .groupby(['class', 'tag'])['fails'].mean())
    failure_rate = {f"{class_id}/{tag}": float(rate) for (class_id, tag), rate in rates.items()}
    return {
        'agreement': agreement,
        'failure_rate': failure_rate,
        'conflicts': int((frame['agreement'] == 'conflict').sum()),
        'unresolved': int((frame['agreement'] == 'unresolved').sum()),
        'form_disagreements': int((~frame['forms_agree'].astype(bool)).sum()),
        'spectral_mismatches': spectral_mismatches,
    }


async def run_campaign_async(cfg: CampaignConfig,
                             executor: Optional[ThreadPoolExecutor] = None) -> CampaignReport:
    """Scenarios run concurrently; records come back in index order whatever the timing."""
    loop = asyncio.get_running_loop()
    own_executor = executor is None
    executor = executor or ThreadPoolExecutor(max_workers=cfg.workers)
    try:
        tasks = [loop.run_in_executor(executor, evaluate_scenario, cfg, i)
                 for i in range(cfg.count)]
        records = list(await asyncio.gather(*tasks))
    finally:
        if own_executor:
            executor.shutdown(wait=True)

    report = CampaignReport(cfg, records, summarize(records),
                            datetime.now(timezone.utc).isoformat(timespec='seconds'))
    logger.info(f"Campaign of {cfg.count} scenarios: {report.summary['conflicts']} conflicts, "
                f"{report.summary['unresolved']} unresolved")
    return report


def run_campaign(cfg: CampaignConfig) -> CampaignReport:
    return asyncio.run(run_campaign_async(cfg))
