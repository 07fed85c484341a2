"""
Report Formatter
Turns lab reports into text sections for the console and into deterministic JSON.
"""

import json
import logging
import math
from enum import Enum
from typing import Any, Dict, List

import numpy as np

SYMBOLS = {'holds': '✓', 'fails': '✗', 'unknown': '?'}


def _float_text(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"Out of range float values are not JSON compliant: {value!r}")
    text = '%.17g' % value
    if '.' not in text and 'e' not in text:
        text += '.0'
    return text


class _FixedDigitsEncoder(json.JSONEncoder):
    """JSON encoder writing every float with 17 significant digits."""

    def iterencode(self, o, _one_shot=False):
        if self.ensure_ascii:
            encoder = json.encoder.encode_basestring_ascii
        else:
            encoder = json.encoder.encode_basestring
        markers = {} if self.check_circular else None
        return json.encoder._make_iterencode(
            markers, self.default, encoder, self.indent, _float_text, self.key_separator,
            self.item_separator, self.sort_keys, self.skipkeys, _one_shot
        )(o, 0)


def _num(value: Any) -> str:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        re_, im = value
        if isinstance(re_, str) or isinstance(im, str):
            return f"({re_}, {im})"
        if abs(im) <= 1e-12 * max(1.0, abs(re_)):
            return f"{re_:.6g}"
        return f"{re_:.6g}{im:+.6g}i"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _params(params: Dict[str, Any]) -> str:
    if not params:
        return ''
    return ' (' + ', '.join(f"{k}={v:g}" if isinstance(v, (int, float)) else f"{k}={v}"
                            for k, v in params.items()) + ')'


class ReportFormatter:
    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def sanitize(self, value: Any) -> Any:
        """Plain JSON types: complex as [re, im], non-finite floats as strings."""
        if isinstance(value, Enum):
            return self.sanitize(value.value)
        if isinstance(value, dict):
            return {str(k): self.sanitize(v) for k, v in value.items()}
        if isinstance(value, (list, tuple, set, frozenset)):
            items = sorted(value) if isinstance(value, (set, frozenset)) else value
            return [self.sanitize(v) for v in items]
        if isinstance(value, np.ndarray):
            return self.sanitize(value.tolist())
        if isinstance(value, (bool, np.bool_)):
            return bool(value)
        if isinstance(value, (int, np.integer)):
            return int(value)
        if isinstance(value, (complex, np.complexfloating)):
            return [self.sanitize(float(value.real)), self.sanitize(float(value.imag))]
        if isinstance(value, (float, np.floating)):
            value = float(value)
            if math.isfinite(value):
                return value
            return 'nan' if math.isnan(value) else ('inf' if value > 0 else '-inf')
        return value

    def to_json(self, report: Dict[str, Any]) -> str:
        """Floats are written with 17 significant digits, so equal reports give equal text."""
        return json.dumps(self.sanitize(report), indent=2, ensure_ascii=False,
                          cls=_FixedDigitsEncoder)

    def format_verdict(self, verdict: Dict[str, Any]) -> List[str]:
        status = verdict['status']
        name = verdict['class'] + _params(verdict.get('params', {}))
        line = (f"{SYMBOLS.get(status, '?')} {name}: {status} "
                f"(margin {_num(verdict['margin'])}, {verdict['source']})")
        output = [line]
        if verdict.get('boundary'):
            output.append("  • on the boundary: margin within tolerance")
        if verdict.get('witness_atom'):
            output.append(f"  • witness atom: {verdict['witness_atom']}")
        if verdict.get('witness_vector'):
            output.append("  • witness vector: "
                          + ', '.join(_num(z) for z in verdict['witness_vector']))
        oracle = verdict.get('oracle')
        if oracle:
            output.append(f"  • oracle: {oracle['status']} after "
                          f"{oracle.get('details', {}).get('samples', '?')} samples")
        forms = verdict.get('forms')
        if forms and forms['operator'] != forms['displayed']:
            output.append(f"  • displayed form disagrees: {forms['displayed']}")
        return output

    def format_check(self, report: Dict[str, Any]) -> List[str]:
        output = [
            f"Class Check: {report['scenario']}",
            "=" * 50,
            "",
            f"• {report['atoms']} atoms, {report['blocks']} blocks",
            f"• ||T|| = {_num(report['norm']['closed_form'])} "
            f"(matrix {_num(report['norm']['matrix'])})",
            f"• S = {report['supports']['S']}",
            f"• G = {report['supports']['G']}",
            f"• S0 = {report['supports']['S0']}",
            "",
            "Verdicts:",
            "-" * 30,
        ]
        for verdict in report['verdicts']:
            output.extend(self.format_verdict(verdict))

        eq = report.get('equivalences')
        if eq:
            output.extend([
                "",
                "Quasi-*-paranormal equivalences:",
                "-" * 30,
                f"• condition (c): {eq['condition_c']['status']}",
                f"• equivalent statements: {', '.join(eq['equivalent'])}",
            ])
            output.extend(f"• {note}" for note in eq.get('notes', []))

        extras = [v for v in (report.get('a_class'), report.get('quasi_star_a_class')) if v]
        if extras:
            output.extend(["", "Matrix class checks:", "-" * 30])
            for verdict in extras:
                output.extend(self.format_verdict(verdict))
        return output

    def format_spectrum(self, report: Dict[str, Any]) -> List[str]:
        spec = report['spectrum']
        output = [
            f"Spectral Analysis: {report['scenario']}",
            "=" * 50,
            "",
            f"• analytic: {', '.join(_num(z) for z in spec['analytic'])}",
            f"• numeric: {', '.join(_num(z) for z in spec['numeric'])}",
            f"• agreement: {'yes' if spec['agreement'] else 'NO'} "
            f"(distance {_num(spec['distance'])})",
            f"• point spectrum: {', '.join(_num(z) for z in report['sigma_p'])}",
            f"• joint point spectrum: {', '.join(_num(z) for z in report['sigma_jp']) or '∅'}",
        ]
        if report.get('zero_finding'):
            output.append(f"• {report['zero_finding']}")

        riesz = report.get('riesz', [])
        if riesz:
            output.extend(["", "Riesz idempotents:", "-" * 30])
            for entry in riesz:
                output.append(
                    f"• μ = {_num(entry['mu'])}: idempotency defect "
                    f"{_num(entry['idempotency_defect'])}, self-adjoint {entry['self_adjoint']}, "
                    f"kernel inclusion {entry['kernel_inclusion']}, simple pole "
                    f"{entry['simple_pole']}"
                )

        kernel = report.get('kernel_checks')
        if kernel:
            output.extend([
                "",
                f"Kernel consequences (n={kernel['params']['n']}, k={kernel['params']['k']}):",
                "-" * 30,
                f"• hypothesis: {kernel['hypothesis']}",
                f"• all checks pass: {kernel['all_pass']}",
            ])
            output.extend(f"• contradiction: {c}" for c in kernel.get('contradictions', []))
        return output

    def format_polar(self, report: Dict[str, Any]) -> List[str]:
        polar = report['polar']
        output = [
            f"Polar Decomposition: {report['scenario']}",
            "=" * 50,
            "",
            f"• ||T - U|T||| = {_num(polar['reconstruction_defect'])}",
            f"• min eigenvalue of |T| = {_num(polar['min_eigenvalue'])}",
            f"• partial isometry defect = {_num(polar['partial_isometry_defect'])}",
            "• rank U / rank |T| / joint rank = "
            + " / ".join(str(r) for r in polar['kernel_ranks']),
            f"• ker U = ker |T|: {polar['kernel_condition']}",
            "",
            "Aluthge transform:",
            "-" * 30,
            f"• nonzero spectrum matches T: {report['aluthge']['spectrum_match']} "
            f"(distance {_num(report['aluthge']['distance'])})",
        ]
        return output

    def format_oracle(self, report: Dict[str, Any]) -> List[str]:
        output = [
            f"Oracle Search: {report['scenario']}",
            "=" * 50,
            "",
        ]
        output.extend(self.format_verdict(report['verdict']))
        sides = report.get('literal_sides')
        if sides:
            output.extend([
                "",
                f"• lhs = {_num(sides['lhs'])}",
                f"• rhs = {_num(sides['rhs'])}",
                f"• normalized violation = {_num(sides['violation'])}",
            ])
        return output

    def format_recognition(self, report: Dict[str, Any]) -> List[str]:
        output = [
            f"Recognizer: {report['source']}",
            "=" * 50,
            "",
        ]
        for condition in report['conditions']:
            mark = '✓' if condition['passed'] else '✗'
            output.append(f"{mark} {condition['condition']} (defect {_num(condition['defect'])})")
        output.append("")
        if report['is_wct_form']:
            output.extend([
                "Conditional type operator f -> E(wf):",
                f"• partition: {report['partition']}",
                "• weight: " + ', '.join(_num(z) for z in report['weight']),
                f"• reconstruction defect: {_num(report['reconstruction_defect'])}",
            ])
        else:
            output.append(f"Not of the form E(w·): {report['failed_condition']}")
        return output

    def format_campaign(self, report: Dict[str, Any]) -> List[str]:
        summary = report['summary']
        output = [
            f"Campaign: {report['config']['count']} scenarios, seed {report['config']['seed']}",
            "=" * 50,
            "",
            "Agreement by class:",
            "-" * 30,
        ]
        for class_id, counts in summary['agreement'].items():
            output.append(f"• {class_id}: " + ', '.join(f"{k} {v}" for k, v in counts.items()))
        if summary.get('failure_rate'):
            output.extend(["", "Criterion failure rate by generator:", "-" * 30])
            for key, rate in summary['failure_rate'].items():
                output.append(f"• {key}: {rate:.1%}")
        output.extend([
            "",
            f"• spectral mismatches: {summary['spectral_mismatches']}",
            f"• form disagreements: {summary['form_disagreements']}",
            f"• conflicts: {summary['conflicts']}",
            f"• unresolved: {summary['unresolved']}",
        ])
        for record in report.get('disagreements', []):
            output.append(f"  - {record['label']}: {record['reason']}")
        return output
