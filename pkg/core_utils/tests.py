import json
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from .exceptions import (
    BlowUpError,
    CFLViolation,
    ConfigurationError,
    DomainError,
    FitError,
    IntegrityError,
    IPMError,
    NumericError,
    PreconditionError,
    StabilityError,
)
from .formatting import CSVSeriesWriter, format_float, read_csv, write_csv, write_json


class FormatFloatTests(SimpleTestCase):
    def test_seventeen_digits_round_trip(self):
        for value in (0.1, 1.0 / 3.0, np.pi * 1e-300, -2.5e17, np.float64(7.0) / 3.0):
            self.assertEqual(float(format_float(value)), float(value))

    def test_non_numeric_cells(self):
        self.assertEqual(format_float(None), "")
        self.assertEqual(format_float(True), "true")
        self.assertEqual(format_float("curvature"), "curvature")
        self.assertEqual(format_float(12), "12")


class CSVTests(SimpleTestCase):
    def test_fixed_schema_and_missing_cells(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "series.csv"
            with CSVSeriesWriter(path, ["t", "value", "note"]) as writer:
                writer.write({"t": 0.0, "value": 0.1})
                writer.write({"t": 1.0, "value": 2.0 / 3.0, "note": "x", "extra": 5})
            rows = read_csv(path)
            self.assertEqual(path.read_text().splitlines()[0], "t,value,note")
        self.assertEqual(rows[0], {"t": "0", "value": "0.10000000000000001", "note": ""})
        self.assertEqual(float(rows[1]["value"]), 2.0 / 3.0)

    def test_identical_rows_give_identical_bytes(self):
        rows = [{"t": t, "value": np.exp(-t)} for t in np.linspace(0, 1, 5)]
        with tempfile.TemporaryDirectory() as tmp:
            first = write_csv(Path(tmp) / "a.csv", ["t", "value"], rows).read_bytes()
            second = write_csv(Path(tmp) / "b.csv", ["t", "value"], rows).read_bytes()
        self.assertEqual(first, second)

    def test_json_is_sorted(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_json(Path(tmp) / "out.json", {"b": 1, "a": [0.5]})
            text = path.read_text()
        self.assertLess(text.index('"a"'), text.index('"b"'))
        self.assertEqual(json.loads(text), {"a": [0.5], "b": 1})


class ExceptionTests(SimpleTestCase):
    def test_exit_codes(self):
        self.assertEqual(IPMError().exit_code, 1)
        self.assertEqual(ConfigurationError("x").exit_code, 2)
        self.assertEqual(DomainError("x").exit_code, 2)
        self.assertEqual(PreconditionError("x").exit_code, 2)
        self.assertEqual(IntegrityError("x").exit_code, 2)
        self.assertEqual(BlowUpError(1.0, float("inf")).exit_code, 3)
        self.assertEqual(FitError("x").exit_code, 1)

    def test_hierarchy(self):
        self.assertTrue(issubclass(DomainError, ValueError))
        self.assertTrue(issubclass(CFLViolation, NumericError))
        self.assertTrue(issubclass(StabilityError, ArithmeticError))

    def test_payloads(self):
        error = BlowUpError(2.5, 1e300)
        data = error.to_dict()
        self.assertEqual(data["type"], "BlowUpError")
        self.assertEqual(data["t"], 2.5)
        advice = CFLViolation(3.0, 1.0, 0.01)
        self.assertEqual(advice.advised_dt, 0.01)
        self.assertIn("0.01", str(advice))
        self.assertIn("[1, 4]", str(FitError("bad values", indices=[1, 4])))
