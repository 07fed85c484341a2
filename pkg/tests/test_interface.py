"""
Test Suite for the WCT Lab interface
Tests command processing, report packaging, exit codes and the command line.
"""

import json
import os
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from io import StringIO
from pathlib import Path
from unittest import mock

from src.cli import main
from src.config import get_settings
from src.data.fixtures import (
    jordan_control, orthogonal_pair, recognizer_partition, recognizer_space,
    recognizer_weight, scenario_a, scenario_b, scenario_c
)
from src.data.manager import ScenarioManager
from src.data.scenario import matrix_to_dict
from src.lab_interface import DEFAULT_CLASSES, WctLabInterface
from src.recognizer import build_conditional_matrix


class TestLabInterface(unittest.IsolatedAsyncioTestCase):
    def setUp(self):
        self.lab = WctLabInterface()

    async def test_check_scenario_a(self):
        """Test the check command on a scenario outside every class."""
        response = await self.lab.process_command('check', scenario=scenario_a(), samples=100)

        self.assertEqual(response['status'], 'success')
        self.assertEqual(response['exit_code'], 1)
        self.assertIn('Class Check: scenario-a', response['response'][0])
        report = response['report']
        self.assertEqual(len(report['verdicts']), len(DEFAULT_CLASSES))
        q_star = next(v for v in report['verdicts'] if v['class'] == 'q*p')
        self.assertEqual(q_star['status'], 'fails')
        self.assertEqual(q_star['witness_atom'], 'x1')
        self.assertEqual(report['norm']['closed_form'], 2.5)
        self.assertEqual(report['supports']['S0'], ['x1', 'x2'])
        self.assertEqual(report['a_class']['status'], 'fails')

    async def test_check_projection(self):
        """Test Unknown verdicts are resolved by the oracle and the projection passes."""
        response = await self.lab.process_command('check', scenario=scenario_b(), samples=100)

        self.assertEqual(response['exit_code'], 0)
        paranormal = next(v for v in response['report']['verdicts'] if v['class'] == 'p')
        self.assertEqual(paranormal['status'], 'unknown')
        self.assertEqual(paranormal['oracle']['status'], 'holds')
        self.assertEqual(response['report']['equivalences']['equivalent'], ['a', 'b', 'c', 'd'])

    async def test_check_forms(self):
        """Test the operator and displayed forms are both reported."""
        for form, exit_code in (('operator', 1), ('displayed', 0)):
            response = await self.lab.process_command(
                'check', scenario=orthogonal_pair(), classes=['n*=1'], form=form
            )
            self.assertEqual(response['exit_code'], exit_code, form)
            entry = response['report']['verdicts'][0]
            self.assertEqual(entry['forms'], {'operator': 'fails', 'displayed': 'holds'})

    async def test_spectrum(self):
        """Test the spectrum command on Scenario A."""
        response = await self.lab.process_command('spectrum', scenario=scenario_a())

        self.assertEqual(response['exit_code'], 0)
        report = response['report']
        self.assertTrue(report['spectrum']['agreement'])
        self.assertEqual(len(report['riesz']), 1)
        riesz = report['riesz'][0]
        self.assertAlmostEqual(riesz['mu'][0], 2.0)
        self.assertEqual(riesz['equivalence'], 'holds')
        self.assertFalse(riesz['self_adjoint'])
        self.assertEqual(riesz['simple_pole'], 'holds')
        self.assertFalse(report['kernel_checks']['hypothesis'])
        self.assertIn('Riesz idempotents:', response['response'])

    async def test_polar(self):
        """Test the polar command on a normal operator."""
        response = await self.lab.process_command('polar', scenario=scenario_c())

        self.assertEqual(response['exit_code'], 0)
        self.assertTrue(response['report']['polar']['kernel_condition'])
        self.assertTrue(response['report']['aluthge']['spectrum_match'])

    async def test_oracle(self):
        """Test the oracle command reports the literal sides of its witness."""
        response = await self.lab.process_command('oracle', scenario=scenario_a(),
                                                  class_spec='q*p', samples=200)
        self.assertEqual(response['exit_code'], 1)
        sides = response['report']['literal_sides']
        self.assertGreater(sides['lhs'], sides['rhs'])

        response = await self.lab.process_command('oracle', scenario=scenario_b(),
                                                  class_spec='p', samples=200)
        self.assertEqual(response['exit_code'], 0)
        self.assertNotIn('literal_sides', response['report'])

    async def test_recognize(self):
        """Test recognition exit codes."""
        Mx = build_conditional_matrix(recognizer_space(), recognizer_partition(),
                                      recognizer_weight())
        response = await self.lab.process_command('recognize', matrix=Mx)
        self.assertEqual(response['exit_code'], 0)
        self.assertEqual(response['report']['partition'], [['x1', 'x2'], ['x3']])

        response = await self.lab.process_command('recognize', matrix=jordan_control())
        self.assertEqual(response['exit_code'], 1)
        self.assertIn('Not of the form E(w·): T²=T', response['response'])

    async def test_campaign(self):
        """Test a tiny campaign through the interface."""
        response = await self.lab.process_command('campaign', count=3, samples=100)

        self.assertEqual(response['status'], 'success')
        report = response['report']
        self.assertEqual(report['config']['count'], 3)
        self.assertEqual(report['summary']['conflicts'], 0)
        self.assertEqual(response['exit_code'], report['exit_code'])

    async def test_errors(self):
        """Test unknown commands, missing files and bad class specs exit with 2."""
        response = await self.lab.process_command('dance')
        self.assertEqual(response['status'], 'error')
        self.assertEqual(response['exit_code'], 2)

        response = await self.lab.process_command('check', scenario='/no/such/file.json')
        self.assertEqual(response['exit_code'], 2)
        self.assertIn('No such file', response['message'])

        response = await self.lab.process_command('check', scenario=scenario_a(),
                                                  classes=['zzz'])
        self.assertEqual(response['exit_code'], 2)

    async def test_json_output(self):
        """Test reports are written when an output path is given."""
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / 'report.json'
            await self.lab.process_command('polar', scenario=scenario_a(), output=str(out))
            data = json.loads(out.read_text(encoding='utf-8'))
            self.assertEqual(data['command'], 'polar')
            self.assertEqual(data['exit_code'], 0)


class TestCommandLine(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.log = str(self.dir / 'wctlab.log')
        manager = ScenarioManager()
        self.scenario = str(manager.save_scenario(scenario_a(), self.dir / 'a.json'))
        self.matrix = str(manager.write_report(self.dir / 'm.json',
                                               matrix_to_dict(jordan_control())))

    def tearDown(self):
        self.tmp.cleanup()

    def run_main(self, *argv):
        with redirect_stdout(StringIO()) as out, redirect_stderr(StringIO()):
            code = main(['--log-file', self.log, *argv])
        return code, out.getvalue()

    def test_check(self):
        """Test check with (n,k) parameters in the class list and a JSON report."""
        out = str(self.dir / 'check.json')
        code, text = self.run_main('check', self.scenario, '--classes', 'q*p,(n,k)=1,1',
                                   '--json', out)
        self.assertEqual(code, 1)
        self.assertIn('Class Check', text)
        data = json.loads(Path(out).read_text(encoding='utf-8'))
        self.assertEqual([v['class'] for v in data['verdicts']], ['q*p', '(n,k)'])

    def test_recognize(self):
        """Test a matrix file that is not a conditional type operator."""
        code, text = self.run_main('recognize', self.matrix)
        self.assertEqual(code, 1)
        self.assertIn('Recognizer', text)

    def test_input_errors(self):
        """Test usage errors and missing files exit with 2."""
        self.assertEqual(self.run_main('bogus')[0], 2)
        self.assertEqual(self.run_main('check', str(self.dir / 'missing.json'))[0], 2)
        self.assertEqual(self.run_main('--version')[0], 0)


class TestSettings(unittest.TestCase):
    def tearDown(self):
        get_settings.cache_clear()

    def test_environment_overrides(self):
        """Test settings come from the environment and bad values fall back."""
        env = {'WCTLAB_SAMPLES': '123', 'WCTLAB_TOL': 'abc', 'WCTLAB_LOG_LEVEL': 'debug'}
        with mock.patch.dict(os.environ, env):
            get_settings.cache_clear()
            settings = get_settings()
        self.assertEqual(settings.samples, 123)
        self.assertEqual(settings.tol, 1e-10)
        self.assertEqual(settings.log_level, 'DEBUG')


def run_tests():
    """Run all interface tests"""
    print("Running WCT Lab Interface Tests...")
    print("=" * 50)
    unittest.main(module=__name__, argv=[''], exit=False, verbosity=2)


if __name__ == '__main__':
    run_tests()
