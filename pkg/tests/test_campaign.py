"""
Test Suite for campaigns
Tests agreement labels, summaries, determinism and the concurrent runner.
"""

import unittest

from src.campaign import (
    AGREEMENT_LABELS, CampaignReport, agreement_label, evaluate_scenario, run_campaign,
    summarize
)
from src.criteria import Status, Verdict
from src.data.generators import CampaignConfig


def verdict(status: Status) -> Verdict:
    return Verdict('q*p', status, 0.0)


def record(index, tag, agreement, criterion='fails', forms_agree=None, spectral=True):
    entry = {'class': 'q*p', 'criterion': criterion, 'agreement': agreement}
    if forms_agree is not None:
        entry['forms_agree'] = forms_agree
    return {'index': index, 'label': f"{tag}-{index}", 'tag': tag,
            'spectral_agreement': spectral, 'classes': [entry]}


class TestAgreementLabels(unittest.TestCase):
    def test_labels(self):
        """Test every combination of criterion, oracle and witness outcome."""
        H, F, U = Status.HOLDS, Status.FAILS, Status.UNKNOWN
        self.assertEqual(agreement_label(verdict(H), verdict(H), False), 'agree')
        self.assertEqual(agreement_label(verdict(H), verdict(F), False), 'conflict')
        self.assertEqual(agreement_label(verdict(F), verdict(F), False), 'agree')
        self.assertEqual(agreement_label(verdict(F), verdict(H), True), 'agree')
        self.assertEqual(agreement_label(verdict(F), verdict(H), False), 'unresolved')
        self.assertEqual(agreement_label(verdict(U), verdict(H), False), 'oracle_resolved_holds')
        self.assertEqual(agreement_label(verdict(U), verdict(F), False), 'oracle_resolved_fails')


class TestSummaries(unittest.TestCase):
    def test_summarize(self):
        """Test counts, failure rates and the exit code from synthetic records."""
        records = [
            record(0, 'generic', 'agree'),
            record(1, 'generic', 'agree', criterion='holds'),
            record(2, 'zero_w_block', 'unresolved', forms_agree=False),
            record(3, 'generic', 'conflict', criterion='holds', spectral=False),
        ]
        summary = summarize(records)
        self.assertEqual(summary['agreement'], {'q*p': {'agree': 2, 'conflict': 1,
                                                        'unresolved': 1}})
        self.assertAlmostEqual(summary['failure_rate']['q*p/generic'], 1 / 3)
        self.assertEqual(summary['failure_rate']['q*p/zero_w_block'], 1.0)
        self.assertEqual(summary['conflicts'], 1)
        self.assertEqual(summary['unresolved'], 1)
        self.assertEqual(summary['form_disagreements'], 1)
        self.assertEqual(summary['spectral_mismatches'], 1)

        report = CampaignReport(CampaignConfig(count=4), records, summary)
        self.assertEqual(report.exit_code, 1)
        reasons = {d['label']: d['reason'] for d in report.disagreements()}
        self.assertEqual(set(reasons), {'zero_w_block-2', 'generic-3'})
        self.assertIn('spectral mismatch', reasons['generic-3'])

    def test_unresolved_fails(self):
        """Test an unresolved case alone sets the exit code to 1."""
        records = [record(0, 'generic', 'unresolved')]
        report = CampaignReport(CampaignConfig(count=1), records, summarize(records))
        self.assertEqual(report.exit_code, 1)

    def test_form_disagreement_alone_is_clean(self):
        """Test differing operator and displayed forms are reported without failing."""
        records = [record(0, 'generic', 'agree', forms_agree=False)]
        report = CampaignReport(CampaignConfig(count=1), records, summarize(records))
        self.assertEqual(report.summary['form_disagreements'], 1)
        self.assertEqual(report.exit_code, 0)
        self.assertEqual(len(report.disagreements()), 1)

    def test_not_applicable_excluded_from_rates(self):
        """Test not-applicable cases are counted but left out of failure rates."""
        records = [record(0, 'generic', 'not_applicable', criterion='not_applicable'),
                   record(1, 'a_measurable_u', 'agree')]
        summary = summarize(records)
        self.assertEqual(summary['agreement']['q*p'], {'agree': 1, 'not_applicable': 1})
        self.assertEqual(summary['failure_rate'], {'q*p/a_measurable_u': 1.0})
        report = CampaignReport(CampaignConfig(count=2), records, summary)
        self.assertEqual(report.exit_code, 0)

    def test_empty_classes(self):
        """Test a campaign without classes still reports spectral agreement."""
        summary = summarize([{'index': 0, 'label': 'generic-0', 'tag': 'generic',
                              'spectral_agreement': True, 'classes': []}])
        self.assertEqual(summary['agreement'], {})
        self.assertEqual(summary['spectral_mismatches'], 0)


class TestCampaignRuns(unittest.TestCase):
    def setUp(self):
        self.cfg = CampaignConfig.from_specs(['q*p', '(n,k)=1,1'], count=10, seed=0,
                                             samples=200, ascent_steps=10)

    def test_small_campaign(self):
        """Test a small campaign has ordered records and no conflicts."""
        report = run_campaign(self.cfg)
        self.assertEqual([r['index'] for r in report.records], list(range(10)))
        self.assertEqual(report.summary['conflicts'], 0)
        self.assertEqual(set(report.summary['agreement']), {'q*p', '(n,k)'})
        for rec in report.records:
            for entry in rec['classes']:
                self.assertIn(entry['agreement'], AGREEMENT_LABELS)
        self.assertTrue(report.to_dict()['generated_at'])

    def test_deterministic(self):
        """Test equal configurations replay exactly, whatever the worker count."""
        first = run_campaign(self.cfg).to_dict(include_timestamp=False)
        second = run_campaign(self.cfg).to_dict(include_timestamp=False)
        self.assertEqual(first, second)
        threaded = CampaignConfig.from_specs(['q*p', '(n,k)=1,1'], count=10, seed=0,
                                             samples=200, ascent_steps=10, workers=3)
        self.assertEqual(run_campaign(threaded).records, first['records'])

    def test_spectral_only(self):
        """Test an empty class list runs the spectral comparison only."""
        cfg = CampaignConfig(count=5, classes=())
        report = run_campaign(cfg)
        self.assertEqual(report.summary['agreement'], {})
        self.assertTrue(all(r['classes'] == [] for r in report.records))

    def test_class_outside_its_precondition(self):
        """Test a class needing A-measurable u is skipped, not fatal, on other scenarios."""
        cfg = CampaignConfig.from_specs(['m-a=1'], count=5, seed=0, samples=50,
                                        ascent_steps=5)
        report = run_campaign(cfg)
        self.assertEqual(len(report.records), 5)
        by_tag = {r['tag']: r['classes'][0] for r in report.records}
        self.assertEqual(by_tag['generic']['agreement'], 'not_applicable')
        self.assertIn('constant on every block', by_tag['generic']['reason'])
        self.assertNotEqual(by_tag['a_measurable_u']['agreement'], 'not_applicable')
        self.assertGreaterEqual(report.summary['agreement']['m-a']['not_applicable'], 1)
        self.assertNotIn('m-a/generic', report.summary['failure_rate'])
        self.assertIn('m-a/a_measurable_u', report.summary['failure_rate'])

    def test_replay_records_carry_spectrum(self):
        """Test records kept for replay include the scenario and its spectral report."""
        cfg = CampaignConfig.from_specs(['n*=1'], count=6, seed=0, samples=50, ascent_steps=5,
                                        generators=('nilpotent_like', 'generic'))
        report = run_campaign(cfg)
        replayed = [r for r in report.records if r['tag'] == 'nilpotent_like']
        self.assertTrue(all('scenario' in r for r in replayed))
        for rec in report.records:
            if 'scenario' in rec:
                self.assertIn('sigma_p', rec['spectrum'])
                self.assertEqual(rec['spectrum']['spectrum']['agreement'],
                                 rec['spectral_agreement'])
            else:
                self.assertNotIn('spectrum', rec)

    def test_cauchy_schwarz_scenarios_hold(self):
        """Test equality scenarios always satisfy q*p and agree with the oracle."""
        cfg = CampaignConfig(count=5, seed=2, generators=('cauchy_schwarz_equality',),
                             samples=200, ascent_steps=10)
        for index in range(cfg.count):
            entry = evaluate_scenario(cfg, index)['classes'][0]
            self.assertEqual(entry['criterion'], 'holds')
            self.assertEqual(entry['agreement'], 'agree')


def run_tests():
    """Run all campaign tests"""
    print("Running Campaign Tests...")
    print("=" * 50)
    unittest.main(module=__name__, argv=[''], exit=False, verbosity=2)


if __name__ == '__main__':
    run_tests()
