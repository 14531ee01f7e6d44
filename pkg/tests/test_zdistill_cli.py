#!/usr/bin/env python3
"""
CLI integration tests for zdistill

Runs ``python -m zdistill`` in a subprocess and checks exit codes, JSON on
stdout/stderr and the files written under the output prefix. Numerical
failures inside ``cmd_run`` are exercised in-process.
"""

import contextlib
import csv
import io
import json
import math
import os
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import numpy as np
import pytest

# Add repository root to path for imports
REPO_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(REPO_ROOT))

from zdistill.cavity import CavityParams, target_states
from zdistill.config import parse_config
from zdistill.protocol import CompiledCycle
from zdistill.qubit import solve_optimal_condition
from zdistill.zdistill_cli import EXIT_INPUT, cmd_run


@pytest.mark.integration
class TestCLICommands(unittest.TestCase):
    """Test CLI commands."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = os.path.join(self.tmp.name, "out")

    def tearDown(self):
        self.tmp.cleanup()

    def _run_cli(self, *args: str) -> subprocess.CompletedProcess:
        """
        Run the CLI and return the completed process.

        Args:
            args: Command-line arguments after ``zdistill``
        """
        return subprocess.run(
            [sys.executable, '-m', 'zdistill', *args],
            capture_output=True,
            text=True,
            cwd=str(REPO_ROOT),
            env={**os.environ, "PYTHONIOENCODING": "utf-8"},
        )

    def _write_config(self, text: str) -> str:
        path = os.path.join(self.tmp.name, "run.cfg")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
        return path

    def _solved_config(self, n_iterations: int) -> str:
        point = solve_optimal_condition(2.8)[0]
        return self._write_config(
            f"model = qubit\nx = {point.x!r}\ny = {point.y!r}\nz = {point.z!r}\n"
            f"n_iterations = {n_iterations}\n"
        )

    def test_run_at_optimal_point(self):
        result = self._run_cli('run', '--config', self._solved_config(600), '--out', self.out)
        self.assertEqual(result.returncode, 0, result.stderr)

        with open(f"{self.out}_trace.csv", newline="") as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(rows[0], ["N", "yield", "fidelity", "purity"])
        self.assertEqual(len(rows), 602)
        self.assertGreater(float(rows[-1][2]), 1.0 - 1e-6)

        with open(f"{self.out}_report.json") as handle:
            report = json.load(handle)
        for key in ("config", "seed", "protocol", "asymptotics", "final", "estimated_steps"):
            self.assertIn(key, report)
        self.assertTrue(report["asymptotics"]["optimal"])
        self.assertAlmostEqual(report["final"]["yield"], 0.25, delta=1e-4)

    def test_run_zero_iterations(self):
        result = self._run_cli('run', '--config', self._solved_config(0), '--out', self.out)
        self.assertEqual(result.returncode, 0, result.stderr)
        with open(f"{self.out}_trace.csv") as handle:
            lines = handle.read().splitlines()
        self.assertEqual(len(lines), 2)
        n, yield_, fidelity, _ = lines[1].split(",")
        self.assertEqual((n, yield_), ("0", "1"))
        self.assertAlmostEqual(float(fidelity), 0.25, delta=1e-12)

    def test_run_cavity_with_preparation(self):
        config = self._write_config(
            "model = cavity\ng_A = pi/2\ng_B = 0.7\nt_A = 1\nt_B = 1\nomega = 1\nk_max = 3\n"
            "initial_state = vacuum-prepared\nprep_reps = 40\nn_iterations = 50\n"
        )
        result = self._run_cli('run', '--config', config, '--out', self.out)
        self.assertEqual(result.returncode, 0, result.stderr)
        with open(f"{self.out}_report.json") as handle:
            report = json.load(handle)
        self.assertEqual(report["config"]["protocol"], "wp2")
        self.assertIn("preparation", report)
        self.assertLess(report["preparation"]["residual"], 1e-6)

        asym = report["asymptotics"]
        distilled = np.array(asym["effective_target_re"]) + 1j * np.array(asym["effective_target_im"])
        psi = target_states(CavityParams(1.0, math.pi / 2, 0.7, 1.0, 1.0, k_max=3), 1)
        overlap = abs(np.vdot(psi, distilled)) / (np.linalg.norm(psi) * np.linalg.norm(distilled))
        self.assertAlmostEqual(overlap, 1.0, delta=1e-9)

    def test_run_underflow(self):
        config = self._write_config(
            "model = cavity\nomega = 0\ng_A = 1.0\ng_B = 0.7\nt_A = 1\nt_B = 1\nk_max = 2\n"
            "initial_state = 1, 0, 0, 0, 0, 0\nn_iterations = 5\n"
        )
        result = self._run_cli('run', '--config', config, '--out', self.out)
        self.assertEqual(result.returncode, 2)
        error = json.loads(result.stderr.strip().splitlines()[-1])
        self.assertEqual(error["last_valid_n"], 0)

    def test_run_weight_count_mismatch(self):
        config = self._write_config("model = qubit\nx = 2.8\ny = 1\nz = 0\ninitial_state = 1, 0\n")
        result = self._run_cli('run', '--config', config, '--out', self.out)
        self.assertEqual(result.returncode, 1)
        self.assertIn("weights", json.loads(result.stderr.strip().splitlines()[-1])["error"])

    def test_bad_config(self):
        config = self._write_config("model = qubit\nfoo = 1\n")
        result = self._run_cli('run', '--config', config)
        self.assertEqual(result.returncode, 1)
        error = json.loads(result.stderr.strip().splitlines()[-1])
        self.assertEqual(error["details"], ["line 2: unknown key 'foo'"])

    def test_config_not_utf8(self):
        path = os.path.join(self.tmp.name, "run.cfg")
        with open(path, "wb") as handle:
            handle.write(b"model = qubit\n\xff\n")
        result = self._run_cli('run', '--config', path, '--out', self.out)
        self.assertEqual(result.returncode, 1)
        self.assertIn("not valid UTF-8", json.loads(result.stderr.strip().splitlines()[-1])["error"])

    def test_protocol_file_not_utf8(self):
        protocol = os.path.join(self.tmp.name, "cycle.qproto")
        with open(protocol, "wb") as handle:
            handle.write(b"pre\xff\xfepare X up\nproject X up\n")
        config = self._write_config(f"model = qubit\nx = 2.8\ny = 1\nz = 0\nprotocol = \"{protocol}\"\n")
        result = self._run_cli('run', '--config', config, '--out', self.out)
        self.assertEqual(result.returncode, 1)
        error = json.loads(result.stderr.strip().splitlines()[-1])["error"]
        self.assertIn("cycle.qproto", error)

    def test_missing_protocol_file(self):
        config = self._write_config("model = qubit\nx = 2.8\ny = 1\nz = 0\nprotocol = nowhere.qproto\n")
        result = self._run_cli('run', '--config', config, '--out', self.out)
        self.assertEqual(result.returncode, 1)

    def test_solve(self):
        result = self._run_cli('solve', '--x-grid', '2.8,pi/2', '--out', self.out)
        self.assertEqual(result.returncode, 0, result.stderr)
        entries = json.loads(result.stdout)
        self.assertEqual([e["status"] for e in entries], ["ok", "skipped"])
        self.assertGreaterEqual(len(entries[0]["roots"]), 2)
        self.assertEqual(entries[1]["roots"], [])
        with open(f"{self.out}_solve.json") as handle:
            self.assertEqual(json.load(handle), entries)

    def test_unknown_suite(self):
        result = self._run_cli('verify', 'quantum')
        self.assertEqual(result.returncode, 1)
        self.assertIn("unknown suite", result.stderr)

    def test_verify_appendix(self):
        result = self._run_cli('verify', 'appendix', '--out', self.out)
        self.assertEqual(result.returncode, 0, result.stderr)
        self.assertIn("SUITE: APPENDIX", result.stdout)
        with open(f"{self.out}_verify.json") as handle:
            data = json.load(handle)
        self.assertEqual(data[0]["suite"], "appendix")

    def test_no_command(self):
        self.assertEqual(self._run_cli().returncode, 1)


class TestRunErrorReporting(unittest.TestCase):
    """cmd_run turns numerical failures into a JSON error and exit code 1."""

    # Jordan block on the dominant eigenvalue
    DEFECTIVE = np.array([
        [0.5, 1.0, 0.0, 0.0],
        [0.0, 0.5, 0.0, 0.0],
        [0.0, 0.0, 0.2, 0.0],
        [0.0, 0.0, 0.0, 0.1],
    ], dtype=complex)

    def test_non_diagonalizable_cycle(self):
        config = parse_config("model = qubit\nx = 2.8\ny = 1\nz = 0\nn_iterations = 3\n")
        stderr = io.StringIO()
        with tempfile.TemporaryDirectory() as tmp, \
                mock.patch("zdistill.zdistill_cli.compile_cycle",
                           side_effect=lambda program, binding: CompiledCycle(self.DEFECTIVE, program)), \
                contextlib.redirect_stderr(stderr):
            prefix = os.path.join(tmp, "out")
            code = cmd_run(config, prefix)
            self.assertFalse(os.path.exists(f"{prefix}_report.json"))
        self.assertEqual(code, EXIT_INPUT)
        error = json.loads(stderr.getvalue().strip().splitlines()[-1])
        self.assertEqual(error["kind"], "NonDiagonalizableError")


if __name__ == '__main__':
    unittest.main()
