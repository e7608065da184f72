import json
import tempfile
from io import StringIO
from pathlib import Path

import yaml
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from core_utils.exceptions import ConfigurationError, IntegrityError
from core_utils.formatting import read_csv

from .runners import get_runner
from .services import ManifestService, build_report, execute, write_report
from .spec import parse_config

MINIMAL_SIMULATION = """
kind: simulate2d
parameters:
  N: 32
  epsilon: 1.0e-3
  T_end: 5
"""


class ParseConfigTests(SimpleTestCase):
    def test_minimal_simulation_gets_defaults(self):
        spec = parse_config(MINIMAL_SIMULATION)
        self.assertEqual(spec.kind, "simulate2d")
        self.assertEqual(spec.seed, 0)
        parameters = spec.parameters
        self.assertEqual(parameters["N"], 32)
        self.assertEqual(parameters["T_end"], 5.0)
        self.assertEqual(parameters["diagnostic_stride"], 10)
        self.assertEqual(parameters["norms"], [0.0, 3.0, 4.0, 5.0, 10.0])
        self.assertEqual(parameters["expect"], "none")
        self.assertTrue(parameters["nonlinear"])

    def test_verify_lemmas_enumerates_grid(self):
        spec = parse_config("kind: verify-lemmas\nparameters: {deltas: [0.25, 1.0], etas: [0.5, 1.0]}")
        self.assertEqual(spec.parameters["grid"], [[0.25, 0.5], [0.25, 1.0], [1.0, 0.5], [1.0, 1.0]])

    def test_non_power_of_two_names_the_key(self):
        with self.assertRaisesMessage(ConfigurationError, "parameters.N: Must be a power of two"):
            parse_config("kind: simulate2d\nparameters: {N: 100}")

    def test_unknown_keys_are_rejected_with_paths(self):
        with self.assertRaisesMessage(ConfigurationError, "parameters.profile.slope: Unknown key."):
            parse_config("kind: simulate2d\nparameters: {profile: {kind: linear, slope: 2}}")
        with self.assertRaisesMessage(ConfigurationError, "colour: Unknown key."):
            parse_config("kind: sharpness\ncolour: blue")

    def test_type_mismatch(self):
        with self.assertRaisesMessage(ConfigurationError, "parameters.epsilon"):
            parse_config("kind: simulate2d\nparameters: {epsilon: small}")

    def test_documents_that_are_not_mappings(self):
        with self.assertRaises(ConfigurationError):
            parse_config("kind: [unclosed")
        with self.assertRaises(ConfigurationError):
            parse_config("- simulate2d")
        with self.assertRaisesMessage(ConfigurationError, "kind"):
            parse_config("seed: 3")

    def test_acceptance_preset(self):
        spec = parse_config("kind: simulate2d\npreset: acceptance\nparameters: {T_end: 50}")
        self.assertEqual(spec.parameters["N"], 256)
        self.assertEqual(spec.parameters["T_end"], 50.0)
        self.assertEqual(spec.parameters["expect"], "stable")
        with self.assertRaisesMessage(ConfigurationError, "preset"):
            parse_config("kind: sharpness\npreset: acceptance")

    def test_every_constraint_is_rejected(self):
        cases = [
            ("kind: simulate9d", "kind"),
            ("kind: simulate2d\nseed: -1", "seed"),
            ("kind: simulate2d\nparameters: {N: 4}", "parameters.N"),
            ("kind: simulate2d\nparameters: {T_end: 0}", "parameters.T_end"),
            ("kind: simulate2d\nparameters: {epsilon: -1}", "parameters.epsilon"),
            ("kind: simulate2d\nparameters: {cfl_safety: 2}", "parameters.cfl_safety"),
            ("kind: simulate2d\nparameters: {diagnostic_stride: 0}", "parameters.diagnostic_stride"),
            ("kind: simulate2d\nparameters: {energy_index: 3}", "parameters.energy_index"),
            ("kind: simulate2d\nparameters: {fit_window: [5, 1]}", "parameters.fit_window"),
            ("kind: simulate2d\nparameters: {expect: stable, norms: [0, 3]}", "parameters.norms"),
            ("kind: simulate2d\nparameters: {profile: {kind: samples}}", "parameters.profile.samples"),
            ("kind: simulate2d\nparameters: {profile: {kind: linear_plus_sine, frequency: 0}}", "parameters.profile.frequency"),
            ("kind: simulate2d\nparameters: {initial: {kind: modes, modes: [{wavevector: [1]}]}}", "parameters.initial.modes.0.wavevector"),
            ("kind: linear-torus\nparameters: {times: []}", "parameters.times"),
            ("kind: linear-torus\nparameters: {dimension: 4}", "parameters.dimension"),
            ("kind: linear-whole-space\nparameters: {t_min: 10, t_max: 5}", "parameters.t_min"),
            ("kind: linear-whole-space\nparameters: {weights: [R2]}", "parameters.weights"),
            ("kind: linear-whole-space\nparameters: {anisotropy: 1.5}", "parameters.anisotropy"),
            ("kind: linear-whole-space\nparameters: {dimension: 3, lambda_power: 1}", "parameters.lambda_power"),
            ("kind: perturbed-linear\nparameters: {T_end: 0.5}", "parameters.T_end"),
            ("kind: perturbed-linear\nparameters: {dt: 0}", "parameters.dt"),
            ("kind: perturbed-linear\nparameters: {exponent_range: [-2, -3]}", "parameters.exponent_range"),
            ("kind: sharpness\nparameters: {t_min: 0}", "parameters.t_min"),
            ("kind: verify-lemmas\nparameters: {t_max: 1}", "parameters.t_max"),
            ("kind: verify-lemmas\nparameters: {deltas: [0]}", "parameters.deltas"),
            ("kind: stability-forms\nparameters: {samples: 0}", "parameters.samples"),
            ("kind: fit\nparameters: {columns: [a]}", "parameters.source"),
            ("kind: fit\nparameters: {source: x.csv, columns: [a], targets: {b: -1}}", "parameters.targets"),
        ]
        for text, path in cases:
            with self.subTest(text=text):
                with self.assertRaisesMessage(ConfigurationError, path):
                    parse_config(text)


class RunnerFactoryTests(SimpleTestCase):
    def test_every_kind_has_a_runner(self):
        from .serializers import KINDS

        for kind in KINDS:
            self.assertTrue(hasattr(get_runner(kind), "run"))

    def test_unknown_kind(self):
        with self.assertRaises(ConfigurationError):
            get_runner("notify")


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self._tmp.cleanup)
        self.root = Path(self._tmp.name)

    def write_config(self, name, document):
        path = self.root / name
        path.write_text(yaml.safe_dump(document), encoding="utf-8")
        return path

    def experiment(self, *args, **options):
        out = StringIO()
        call_command("experiment", *args, stdout=out, **options)
        return out.getvalue()

    def assertExitCode(self, code, *args, **options):
        with self.assertRaises(CommandError) as ctx:
            self.experiment(*args, **options)
        self.assertEqual(ctx.exception.returncode, code)
        return ctx.exception

    def manifest(self, directory):
        return json.loads((directory / "manifest.json").read_text())


def small_simulation(**overrides):
    parameters = {
        "N": 16,
        "epsilon": 1e-3,
        "T_end": 1.0,
        "dt": 0.05,
        "diagnostic_stride": 2,
        "energy_index": None,
        "initial": {"band": 4},
    }
    parameters.update(overrides)
    return {"kind": "simulate2d", "parameters": parameters}


class SimulationCommandTests(CommandTestCase):
    def test_runs_are_deterministic(self):
        config = self.write_config("run.yaml", small_simulation())
        self.experiment(config=config, out=self.root / "a", seed=11)
        self.experiment(config=config, out=self.root / "b", seed=11)
        first = (self.root / "a" / "diagnostics.csv").read_bytes()
        self.assertEqual(first, (self.root / "b" / "diagnostics.csv").read_bytes())
        self.assertEqual(
            self.manifest(self.root / "a")["files"]["diagnostics.csv"],
            self.manifest(self.root / "b")["files"]["diagnostics.csv"],
        )
        self.experiment(config=config, out=self.root / "c", seed=12)
        self.assertNotEqual(first, (self.root / "c" / "diagnostics.csv").read_bytes())

    def test_manifest_lists_every_file_with_digest(self):
        config = self.write_config("run.yaml", small_simulation(checkpoint_stride=10))
        self.experiment(config=config, out=self.root / "run")
        manifest = self.manifest(self.root / "run")
        self.assertEqual(manifest["status"], "pass")
        self.assertEqual(manifest["exit_code"], 0)
        self.assertEqual(
            sorted(manifest["files"]),
            ["checkpoints/checkpoint_00000010.ipmf", "checkpoints/checkpoint_00000020.ipmf", "diagnostics.csv", "summary.json"],
        )
        for name, digest in manifest["files"].items():
            self.assertEqual(digest, ManifestService.digest(self.root / "run" / name))
        rows = read_csv(self.root / "run" / "diagnostics.csv")
        self.assertEqual([row["step"] for row in rows], [str(s) for s in range(0, 21, 2)])

    def test_resume_continues_bit_identically(self):
        config = self.write_config("run.yaml", small_simulation(checkpoint_stride=10))
        self.experiment(config=config, out=self.root / "full")
        checkpoint = self.root / "full" / "checkpoints" / "checkpoint_00000010.ipmf"
        self.experiment(config=config, out=self.root / "resumed", resume=checkpoint)
        full = (self.root / "full" / "diagnostics.csv").read_text().splitlines()
        resumed = (self.root / "resumed" / "diagnostics.csv").read_text().splitlines()
        self.assertEqual(resumed[0], full[0])
        self.assertEqual(resumed[1:], full[-len(resumed) + 1:])
        self.assertTrue(resumed[1].split(",")[1] == "10")
        self.assertEqual(
            (self.root / "full" / "checkpoints" / "checkpoint_00000020.ipmf").read_bytes(),
            (self.root / "resumed" / "checkpoints" / "checkpoint_00000020.ipmf").read_bytes(),
        )

    def test_tolerance_failure_exits_one(self):
        config = self.write_config("run.yaml", small_simulation(expect="stable", growth_bound=0.5, velocity_decay=1.0))
        self.assertExitCode(1, config=config, out=self.root / "run")
        manifest = self.manifest(self.root / "run")
        self.assertEqual(manifest["status"], "fail")
        summary = json.loads((self.root / "run" / "summary.json").read_text())
        failed = [check["name"] for check in summary["checks"] if not check["passed"]]
        self.assertEqual(failed, ["max_rho_H4"])

    def test_configuration_error_exits_two(self):
        config = self.write_config("run.yaml", small_simulation(N=100))
        error = self.assertExitCode(2, config=config, out=self.root / "run")
        self.assertIn("parameters.N", str(error))
        self.assertFalse((self.root / "run").exists())

    def test_numeric_failure_exits_three_and_is_recorded(self):
        config = self.write_config("run.yaml", small_simulation(epsilon=1000.0, dt=1.0))
        self.assertExitCode(3, config=config, out=self.root / "run")
        manifest = self.manifest(self.root / "run")
        self.assertEqual(manifest["error"]["type"], "CFLViolation")
        self.assertIn("diagnostics.csv", manifest["files"])
        self.assertIn("summary.json", manifest["files"])
        summary = json.loads((self.root / "run" / "summary.json").read_text())["summary"]
        self.assertEqual(summary["termination"], "cfl-violation")
        self.assertEqual(summary["error"]["type"], "CFLViolation")
        self.assertEqual([row["step"] for row in read_csv(self.root / "run" / "diagnostics.csv")], ["0"])

    def test_kind_and_config_must_agree(self):
        config = self.write_config("run.yaml", small_simulation())
        self.assertExitCode(2, "simulate3d", config=config, out=self.root / "run")

    def test_resume_rejected_for_linear_kinds(self):
        checkpoint = self.root / "missing.ipmf"
        checkpoint.write_bytes(b"")
        self.assertExitCode(2, "sharpness", out=self.root / "run", resume=checkpoint)

    def test_missing_output_directory(self):
        config = self.write_config("run.yaml", small_simulation())
        self.assertExitCode(2, config=config)


class AnalysisCommandTests(CommandTestCase):
    def test_verify_lemmas_reduced_grid_passes(self):
        config = self.write_config(
            "lemmas.yaml", {"kind": "verify-lemmas", "parameters": {"t_max": 1e3, "deltas": [0.25, 1.0], "etas": [0.5]}}
        )
        self.experiment(config=config, out=self.root / "lemmas")
        manifest = self.manifest(self.root / "lemmas")
        self.assertEqual(manifest["status"], "pass")
        verdicts = json.loads((self.root / "lemmas" / "lemmas.json").read_text())
        self.assertEqual(sum(v["lemma"] == "convolution_bound" for v in verdicts), 2)
        self.assertTrue(all(v["passed"] for v in verdicts))
        summary = json.loads((self.root / "lemmas" / "summary.json").read_text())["summary"]
        self.assertEqual(summary["saturation_tolerance"], 0.02)
        saturation = summary["convolution_saturation"]
        self.assertEqual([(row["delta"], row["eta"]) for row in saturation], [(0.25, 0.5), (1.0, 0.5)])
        for row in saturation:
            self.assertGreaterEqual(row["saturation_change"], 0.0)
            self.assertEqual(row["saturated"], row["saturation_change"] <= 0.02)

    def test_linear_torus_defaults_pass(self):
        self.experiment("linear-torus", out=self.root / "torus")
        summary = json.loads((self.root / "torus" / "summary.json").read_text())
        self.assertEqual(summary["status"], "pass")
        self.assertEqual(len(summary["summary"]["modes"]), 5)

    def test_stability_forms_for_sine_profile(self):
        config = self.write_config(
            "forms.yaml",
            {
                "kind": "stability-forms",
                "seed": 5,
                "parameters": {"profile": {"kind": "linear_plus_sine", "K": 2.0}, "samples": 20, "band": 16},
            },
        )
        self.experiment(config=config, out=self.root / "forms")
        summary = json.loads((self.root / "forms" / "summary.json").read_text())
        self.assertEqual(summary["status"], "pass")
        self.assertTrue(summary["summary"]["admissible"])
        self.assertTrue(summary["summary"]["hypotheses_met"])
        self.assertEqual(len(read_csv(self.root / "forms" / "forms.csv")), 20)

    def test_sharpness_small_grid(self):
        config = self.write_config("sharp.yaml", {"kind": "sharpness", "parameters": {"samples": 9}})
        self.experiment(config=config, out=self.root / "sharp")
        self.assertEqual(self.manifest(self.root / "sharp")["status"], "pass")

    def test_perturbed_linear_small_grid(self):
        config = self.write_config(
            "perturbed.yaml", {"kind": "perturbed-linear", "parameters": {"N": 16, "T_end": 20.0, "samples": 16}}
        )
        self.experiment(config=config, out=self.root / "perturbed")
        summary = json.loads((self.root / "perturbed" / "summary.json").read_text())
        self.assertEqual(summary["status"], "pass")
        self.assertAlmostEqual(summary["summary"]["certificate"], 0.05, places=12)

    def test_perturbed_linear_fits_sobolev_norm(self):
        config = self.write_config(
            "perturbed_fit.yaml",
            {
                "kind": "perturbed-linear",
                "parameters": {"N": 16, "T_end": 20.0, "samples": 16, "fit_window": [1.0, 20.0]},
            },
        )
        self.experiment(config=config, out=self.root / "perturbed_fit")
        summary = json.loads((self.root / "perturbed_fit" / "summary.json").read_text())
        self.assertEqual([fit["quantity"] for fit in summary["fits"]], ["H8_norm"])
        self.assertNotIn("fit_note", summary["summary"])
        self.assertIn("H8_norm", read_csv(self.root / "perturbed_fit" / "trajectory.csv")[0])


class ReportCommandTests(CommandTestCase):
    def whole_space_run(self):
        config = self.write_config(
            "ws.yaml", {"kind": "linear-whole-space", "parameters": {"t_min": 1e3, "t_max": 1e5, "samples": 8}}
        )
        self.experiment(config=config, out=self.root / "ws")
        return self.root / "ws"

    def test_report_tabulates_three_exponents(self):
        run_dir = self.whole_space_run()
        call_command("report", str(run_dir), stdout=StringIO())
        report = json.loads((run_dir / "report.json").read_text())
        self.assertEqual([row["quantity"] for row in report["fits"]], ["identity", "R1", "R1squared"])
        self.assertEqual([row["target"] for row in report["fits"]], [-0.25, -0.75, -1.25])
        for row in report["fits"]:
            self.assertTrue(row["within"])
        markdown = (run_dir / "report.md").read_text()
        self.assertIn("| R1squared |", markdown)

    def test_fit_kind_reads_emitted_series(self):
        run_dir = self.whole_space_run()
        config = self.write_config(
            "fit.yaml",
            {
                "kind": "fit",
                "parameters": {"source": str(run_dir / "norms.csv"), "columns": ["identity"], "targets": {"identity": -0.25}},
            },
        )
        self.experiment(config=config, out=self.root / "fit")
        self.assertEqual(self.manifest(self.root / "fit")["status"], "pass")

    def test_tampered_file_is_an_integrity_error(self):
        run_dir = self.whole_space_run()
        with open(run_dir / "norms.csv", "a") as handle:
            handle.write("1,2,3,4\n")
        with self.assertRaisesMessage(IntegrityError, "Digest mismatch for norms.csv"):
            build_report(run_dir)
        with self.assertRaises(CommandError) as ctx:
            call_command("report", str(run_dir), stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)

    def test_empty_directory_is_an_integrity_error(self):
        empty = self.root / "empty"
        empty.mkdir()
        with self.assertRaises(CommandError) as ctx:
            call_command("report", str(empty), stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn("manifest.json", str(ctx.exception))


class BoxSweepTests(CommandTestCase):
    def test_box_sweep_is_reported(self):
        spec = parse_config(
            yaml.safe_dump(
                {
                    "kind": "linear-whole-space",
                    "parameters": {
                        "t_min": 1.0,
                        "t_max": 100.0,
                        "samples": 8,
                        "anisotropy": 0.0,
                        "weights": ["identity"],
                        "box_lengths": [80.0, 20.0, 320.0],
                    },
                }
            )
        )
        out = self.root / "sweep"
        manifest = execute(spec, out)
        self.assertIn("box_sizes.csv", manifest.files)
        self.assertEqual(read_csv(out / "box_sizes.csv")[0].keys(), {"t", "identity_L20", "identity_L80", "identity_L320"})

        summary = json.loads((out / "summary.json").read_text())["summary"]
        self.assertEqual([entry["length"] for entry in summary["box_sweep"]], [20.0, 80.0, 320.0])
        self.assertEqual(summary["box_trend"], {"identity": "converging"})
        deviations = [abs(entry["deviation"]) for entry in summary["box_sweep"]]
        self.assertLess(deviations[-1], 0.05)
        self.assertGreater(deviations[0], 2 * deviations[-1])

        write_report(out)
        self.assertIn("## Box-size trend", (out / "report.md").read_text())
        self.assertEqual(len(json.loads((out / "report.json").read_text())["box_sweep"]), 3)

    def test_box_sweep_is_two_dimensional(self):
        with self.assertRaisesMessage(ConfigurationError, "parameters.box_lengths"):
            parse_config("kind: linear-whole-space\nparameters: {dimension: 3, box_lengths: [40]}")
