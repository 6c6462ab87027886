"""
Tests for the command line: exit codes, messages and output files.
"""

import csv
import io
import json
import logging

import pytest
from click.testing import CliRunner

from pcsplit.__main__ import run
from pcsplit.cli import main
from pcsplit.config import LOGGER_NAME
from pcsplit.fixtures import FIXTURES
from pcsplit.solver import TRACE_HEADER


@pytest.fixture(autouse=True)
def _drop_log_handlers():
    """The CLI installs a stderr handler bound to the captured stream; remove it afterwards."""
    yield
    logger = logging.getLogger(LOGGER_NAME)
    for handler in list(logger.handlers):
        if getattr(handler, '_pcsplit', False):
            logger.removeHandler(handler)


class TestSolve:
    """pcsplit solve"""

    @pytest.mark.integration
    def test_converges(self, problem_file, tmp_path, capsys):
        code = run(['solve', str(problem_file('qp3')), '--scheme', 'gs3-alg1', '--tol', '1e-10',
                    '--out', str(tmp_path / 'out')])
        captured = capsys.readouterr()
        assert code == 0
        assert "✓ gs3-alg1 converged after" in captured.out
        solution = json.loads((tmp_path / 'out' / 'solution.json').read_text())
        assert solution['status'] == 'converged'
        assert solution['lambda'] == pytest.approx([1.0], abs=1e-6)

    @pytest.mark.integration
    def test_json_output(self, problem_file, capsys):
        code = run(['solve', str(problem_file('qp2')), '--scheme', 'scprsm', '--json'])
        captured = capsys.readouterr()
        assert code == 0
        solution = json.loads(captured.out)
        assert solution['scheme'] == 'scprsm'
        assert [b[0] for b in solution['blocks']] == pytest.approx([0.5, 0.5], abs=1e-6)
        assert "converged after" in captured.err

    @pytest.mark.integration
    def test_iteration_cap(self, problem_file, capsys):
        code = run(['solve', str(problem_file('qp3')), '--max-iters', '1'])
        assert code == 2
        assert "stopped at the iteration cap (1)" in capsys.readouterr().out

    @pytest.mark.integration
    def test_uncertified_mu(self, problem_file, capsys):
        code = run(['solve', str(problem_file('qp2')), '--scheme', 'scprsm', '--mu', '1.0'])
        captured = capsys.readouterr()
        assert code == 1
        assert "✗ plan for scprsm is not certified" in captured.err
        assert "μ must lie in (0,1), got 1.0" in captured.err

    @pytest.mark.integration
    def test_custom_split_without_profit(self, problem_file, tmp_path, capsys):
        d_file = tmp_path / 'D.json'
        d_file.write_text(json.dumps([[2.0, 1.0, -1.0], [1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]]))
        code = run(['solve', str(problem_file('qp3')), '--scheme', 'custom-split', '--d-file', str(d_file)])
        assert code == 1
        assert "G not SPD" in capsys.readouterr().err

    @pytest.mark.integration
    def test_custom_split_with_predictor(self, problem_file, capsys):
        code = run(['solve', str(problem_file('ineq3')), '--scheme', 'custom-split',
                    '--predictor', 'multi-dp', '--alpha', '0.4'])
        assert code == 0
        assert "✓ custom-split converged" in capsys.readouterr().out

    @pytest.mark.integration
    def test_wrong_block_count(self, problem_file, capsys):
        code = run(['solve', str(problem_file('qp2')), '--scheme', 'gs3-alg2'])
        assert code == 1
        assert "gs3 needs exactly 3 blocks" in capsys.readouterr().err

    @pytest.mark.integration
    def test_monitor_writes_trace(self, problem_file, tmp_path):
        out = tmp_path / 'out'
        code = run(['solve', str(problem_file('qp3')), '--monitor', '--max-iters', '20', '--tol', '0',
                    '--out', str(out)])
        assert code == 2
        table = list(csv.reader((out / 'trace.csv').open()))
        assert tuple(table[0]) == TRACE_HEADER
        assert len(table) == 21

    @pytest.mark.unit
    def test_out_of_range_nu(self, problem_file, capsys):
        code = run(['solve', str(problem_file('qp3')), '--nu', '1.5'])
        assert code == 1
        assert "ν must lie in (0,1)" in capsys.readouterr().err

    @pytest.mark.unit
    def test_bad_problem_file(self, tmp_path, capsys):
        bad = tmp_path / 'bad.json'
        bad.write_text('{"blocks": [')
        assert run(['solve', str(bad)]) == 1
        assert "invalid JSON" in capsys.readouterr().err

    @pytest.mark.unit
    def test_missing_problem_file(self, tmp_path):
        assert run(['solve', str(tmp_path / 'nope.json')]) == 1


class TestTrace:
    """pcsplit trace"""

    @pytest.mark.integration
    def test_to_stdout(self, problem_file, capsys):
        code = run(['trace', str(problem_file('l1-qp3')), '--scheme', 'gs3-alg3', '--max-iters', '10', '--tol', '0'])
        captured = capsys.readouterr()
        assert code == 2
        table = list(csv.reader(io.StringIO(captured.out)))
        assert tuple(table[0]) == TRACE_HEADER
        assert len(table) == 11
        assert "iteration-cap after 10 iterations" in captured.err

    @pytest.mark.integration
    def test_to_directory(self, problem_file, tmp_path):
        out = tmp_path / 'trace'
        assert run(['trace', str(problem_file('qp2')), '--scheme', 'scprsm', '--out', str(out)]) == 0
        assert (out / 'trace.csv').exists()
        assert json.loads((out / 'solution.json').read_text())['status'] == 'converged'


class TestCertify:
    """pcsplit certify"""

    @pytest.mark.integration
    def test_ok(self, problem_file, capsys):
        code = run(['certify', str(problem_file('qp3')), '--scheme', 'gs3-alg1', '--nu', '0.5'])
        captured = capsys.readouterr()
        assert code == 0
        assert "min_eig(G):" in captured.out
        assert "  Q: 3×3" in captured.out
        assert "✓ Certificate ok" in captured.out

    @pytest.mark.integration
    def test_mu_one_fails(self, problem_file, capsys):
        code = run(['certify', str(problem_file('qp2')), '--scheme', 'scprsm', '--mu', '1.0'])
        captured = capsys.readouterr()
        assert code == 1
        assert "✗ Certificate failed:" in captured.err
        assert "G not SPD" in captured.err

    @pytest.mark.integration
    def test_json_with_probes(self, problem_file, capsys):
        code = run(['certify', str(problem_file('box-qp3')), '--scheme', 'gs3-alg2', '--json', '--probes', '50'])
        captured = capsys.readouterr()
        assert code == 0
        report = json.loads(captured.out)
        assert report['ok'] is True
        assert report['predictor'] == 'gs3'
        assert report['probes']['count'] == 50
        assert report['probes']['min_value'] >= -1e-8
        assert report['shapes']['D'] == [3, 3]

    @pytest.mark.integration
    def test_multiblock_shapes(self, problem_file, capsys):
        code = run(['certify', str(problem_file('multi-qp5')), '--scheme', 'multi-dp', '--json'])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        # five blocks and the multiplier, each in ℝ²
        assert report['shapes']['Q'] == [12, 12]


class TestCompare:
    """pcsplit compare"""

    @pytest.mark.integration
    def test_rejected_row(self, problem_file, capsys):
        code = run(['compare', str(problem_file('ineq2')), '--scheme', 'multi-pd', '--scheme', 'multi-dp',
                    '--tol', '1e-10'])
        captured = capsys.readouterr()
        assert code == 0
        rows = {r['scheme']: r for r in csv.DictReader(io.StringIO(captured.out))}
        assert rows['multi-pd']['status'] == 'rejected'
        assert rows['multi-pd']['reason'] == "inequality sense requires DP predictor"
        assert rows['multi-dp']['status'] == 'converged'

    @pytest.mark.integration
    def test_writes_file_and_reports_cap(self, problem_file, tmp_path):
        out = tmp_path / 'cmp'
        code = run(['compare', str(problem_file('qp3')), '--scheme', 'gs3-alg1', '--scheme', 'gs3-alg3',
                    '--max-iters', '2', '--jobs', '2', '--out', str(out)])
        assert code == 2
        rows = list(csv.DictReader((out / 'compare.csv').open()))
        assert [r['scheme'] for r in rows] == ['gs3-alg1', 'gs3-alg3']

    @pytest.mark.unit
    def test_needs_a_scheme(self, problem_file):
        assert run(['compare', str(problem_file('qp3'))]) == 1


class TestExample:
    """pcsplit example"""

    @pytest.mark.unit
    def test_list(self, capsys):
        assert run(['example', '--list']) == 0
        out = capsys.readouterr().out
        for name in FIXTURES:
            assert name in out

    @pytest.mark.unit
    def test_write_then_solve(self, tmp_path, capsys):
        path = tmp_path / 'qp2.json'
        assert run(['example', 'qp2', '--out', str(path)]) == 0
        assert run(['solve', str(path), '--scheme', 'scprsm']) == 0
        assert "scprsm converged" in capsys.readouterr().out

    @pytest.mark.unit
    def test_stdout(self, capsys):
        assert run(['example', 'ineq2']) == 0
        data = json.loads(capsys.readouterr().out)
        assert data['sense'] == 'ge'

    @pytest.mark.unit
    def test_unknown(self, capsys):
        assert run(['example', 'nope']) == 1
        assert "Unknown fixture 'nope'" in capsys.readouterr().err


class TestEntryPoint:
    """Exit-code contract of the entry point."""

    @pytest.mark.unit
    def test_version(self, capsys):
        assert run(['--version']) == 0
        assert "pcsplit" in capsys.readouterr().out

    @pytest.mark.unit
    def test_unknown_option(self):
        assert run(['solve', '--no-such-option']) == 1

    @pytest.mark.unit
    def test_unknown_command(self):
        assert run(['frobnicate']) == 1

    @pytest.mark.unit
    def test_help(self):
        result = CliRunner().invoke(main, ['--help'])
        assert result.exit_code == 0
        for command in ('solve', 'trace', 'certify', 'compare', 'example'):
            assert command in result.output
