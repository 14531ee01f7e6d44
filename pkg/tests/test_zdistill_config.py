#!/usr/bin/env python3
"""
Unit tests for zdistill.config: value inference and run configuration parsing.
"""

import math
import os
import sys
import tempfile
import unittest
from pathlib import Path

# Add repository root to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from zdistill.config import RunConfig, load_config, parse_config, parse_value
from zdistill.errors import ConfigError


QUBIT_CONFIG = """# qubit run
model = qubit
x = 2.6
y = 1.4
z = 4.1      # phase
n_iterations = 200
output = "runs/qubit"
"""

CAVITY_CONFIG = """model = cavity
omega = 0
g_A = pi/2
g_B = 0.7
t_A = 1
t_B = 1
k_max = 4
initial_state = vacuum-prepared
prep_reps = 30
"""


class TestParseValue(unittest.TestCase):
    """Test value type inference."""

    def test_numbers(self):
        self.assertEqual(parse_value("42"), 42)
        self.assertIsInstance(parse_value("42"), int)
        self.assertEqual(parse_value("1e-3"), 0.001)
        self.assertEqual(parse_value("-2.5"), -2.5)

    def test_pi_multiples(self):
        self.assertAlmostEqual(parse_value("pi/2"), math.pi / 2)
        self.assertAlmostEqual(parse_value("0.5*pi"), math.pi / 2)
        self.assertAlmostEqual(parse_value("3pi/4"), 3 * math.pi / 4)
        self.assertAlmostEqual(parse_value("pi"), math.pi)

    def test_booleans_and_strings(self):
        self.assertIs(parse_value("true"), True)
        self.assertIs(parse_value("False"), False)
        self.assertEqual(parse_value('"runs/a"'), "runs/a")
        self.assertEqual(parse_value("'wp2'"), "wp2")
        self.assertEqual(parse_value("maximally-mixed"), "maximally-mixed")

    def test_tuples(self):
        self.assertEqual(parse_value("2.6, 2.8,3.0"), (2.6, 2.8, 3.0))
        self.assertEqual(parse_value("1, 0,"), (1, 0))


class TestParseConfig(unittest.TestCase):
    """Test ConfigParser."""

    def test_qubit_config(self):
        config = parse_config(QUBIT_CONFIG)
        self.assertEqual(config.model, "qubit")
        self.assertEqual(config.protocol_name, "wp")
        self.assertEqual(config.n_iterations, 200)
        self.assertEqual(config.output, "runs/qubit")
        p = config.qubit_params()
        self.assertEqual(p.omega, 1.0)
        self.assertAlmostEqual(p.g_A * p.t_A, 2.6)
        self.assertEqual(p.tau_B, 4.1)

    def test_explicit_qubit_fields(self):
        config = parse_config("omega = 1\ng_A = 0.5\nt_A = 2\ntau_A = 0.1\ng_B = 0.8\n")
        p = config.qubit_params()
        self.assertEqual((p.g_A, p.g_B, p.t_B, p.tau_B), (0.5, 0.8, 2.0, 0.1))

    def test_missing_qubit_fields(self):
        config = parse_config("model = qubit\nomega = 1\n")
        with self.assertRaises(ConfigError) as ctx:
            config.qubit_params()
        self.assertIn("missing key 'g_A'", ctx.exception.errors)

    def test_cavity_config(self):
        config = parse_config(CAVITY_CONFIG)
        self.assertEqual(config.protocol_name, "wp2")
        self.assertEqual(config.initial_state, "vacuum-prepared")
        p = config.cavity_params()
        self.assertEqual(p.k_max, 4)
        self.assertEqual(p.omega, 0.0)
        self.assertEqual(p.resonance_sign, 1)

    def test_missing_cavity_fields(self):
        config = parse_config("model = cavity\ng_A = 1\n")
        with self.assertRaises(ConfigError) as ctx:
            config.cavity_params()
        self.assertEqual(len(ctx.exception.errors), 4)
        self.assertIn("missing key 'omega'", ctx.exception.errors)

    def test_invalid_parameter_values(self):
        with self.assertRaises(ConfigError):
            parse_config("x = 2.6\ny = 0\nz = 1\n").qubit_params()

    def test_weights(self):
        config = parse_config("initial_state = 1, 0, 0, 1\n")
        self.assertEqual(config.initial_state, (1.0, 0.0, 0.0, 1.0))
        self.assertEqual(config.to_dict()["initial_state"], [1.0, 0.0, 0.0, 1.0])

    def test_errors_are_collected(self):
        text = "model = qubit\nfoo = 1\nn_iterations = 1.5\nmodel = cavity\nnot a line\n"
        with self.assertRaises(ConfigError) as ctx:
            parse_config(text, source="bad.cfg")
        errors = ctx.exception.errors
        self.assertEqual(len(errors), 4)
        self.assertTrue(errors[0].startswith("line 2: unknown key 'foo'"))
        self.assertTrue(errors[1].startswith("line 3: n_iterations"))
        self.assertIn("duplicate key 'model'", errors[2])
        self.assertTrue(errors[3].startswith("line 5:"))
        self.assertIn("bad.cfg", str(ctx.exception))

    def test_bad_states(self):
        for text in ("initial_state = pure\n", "initial_state = 1, -1\n", "initial_state = 0, 0\n",
                     "initial_state = vacuum-prepared\n"):
            with self.assertRaises(ConfigError, msg=text):
                parse_config(text)

    def test_unknown_model(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config("model = spin-chain\n")
        self.assertIn("model must be one of", str(ctx.exception))

    def test_x_grid(self):
        self.assertEqual(parse_config("x_grid = 2.6, 3\n").x_grid, (2.6, 3.0))
        self.assertEqual(parse_config("x_grid = 2.7\n").x_grid, (2.7,))
        with self.assertRaises(ConfigError):
            parse_config("x_grid = a, b\n")

    def test_overrides(self):
        config = RunConfig().with_overrides(seed=7, output=None)
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.output, RunConfig().output)

    def test_load_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "run.cfg")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(QUBIT_CONFIG)
            config = load_config(path)
            self.assertEqual(config.source, path)
            with self.assertRaises(ConfigError):
                load_config(os.path.join(tmp, "missing.cfg"))

    def test_load_config_rejects_invalid_utf8(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "run.cfg")
            with open(path, "wb") as handle:
                handle.write(b"model = qubit\nx = 2.6\n\xff\n")
            with self.assertRaises(ConfigError) as ctx:
                load_config(path)
        self.assertIn("not valid UTF-8", str(ctx.exception))
        self.assertIn("run.cfg", str(ctx.exception))


if __name__ == '__main__':
    unittest.main()
