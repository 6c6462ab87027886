"""
Tests for the JSON result helpers.
"""

import io
import json
import math

import pytest

from pcsplit.utils import error_result, is_run_result, json_number, write_response


class TestResults:
    """RunResult records and their JSON output."""

    @pytest.mark.unit
    def test_write_error_result(self):
        out = io.StringIO()
        write_response(error_result("G not SPD", exit_code=1), out)
        data = json.loads(out.getvalue())
        assert data == {'success': False, 'error': "G not SPD", 'exit_code': 1}
        assert is_run_result(data)

    @pytest.mark.unit
    def test_write_plain_object(self):
        out = io.StringIO()
        write_response({'ok': True, 'hm_residual': json_number(math.inf)}, out)
        assert json.loads(out.getvalue()) == {'ok': True, 'hm_residual': None}

    @pytest.mark.unit
    @pytest.mark.parametrize("value", [
        {'success': True},
        {'success': False},
        {'success': 'yes', 'result': {}},
        ['success'],
    ])
    def test_rejects_malformed_results(self, value):
        assert not is_run_result(value)
