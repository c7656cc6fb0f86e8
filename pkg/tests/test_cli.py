"""CLI behavior: outputs, formats, exit codes, stream discipline."""

import json

import pytest

from fuselens import generate_synthetic
from fuselens.cli import main
from fuselens.data import write_bundle
from tests.conftest import SMALL_SPEC


@pytest.fixture(scope="module")
def bundle_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle")
    write_bundle(generate_synthetic(SMALL_SPEC), out)
    return out


def _eval_args(d, *extra):
    return [
        "evaluate",
        "--base-emb", str(d / "base.emb"),
        "--novel-emb", str(d / "novel.emb"),
        "--fs-weights", str(d / "fs-base.classifier.json"),
        "--zs-weights", str(d / "zs-base.classifier.json"),
        "--novel-fs-weights", str(d / "fs-novel.classifier.json"),
        "--novel-zs-weights", str(d / "zs-novel.classifier.json"),
        *extra,
    ]


class TestEvaluate:
    def test_csv_report(self, bundle_dir, capsys):
        assert main(_eval_args(bundle_dir)) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "config,base_acc,novel_acc,h"
        config, base, novel, h = out[1].split(",")
        assert config == "method=entropy;alpha=64;target=weights"
        assert 0.0 <= float(base) <= 100.0
        assert 0.0 <= float(h) <= 100.0

    def test_json_doc_report(self, bundle_dir, capsys):
        assert main(_eval_args(bundle_dir, "--format", "json-doc")) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["config"]["method"] == "entropy"
        assert doc["config"]["alpha"] == 64.0
        assert 0.0 <= doc["harmonic_mean"] <= 1.0

    def test_static_one_matches_fewshot_only_run(self, bundle_dir, capsys):
        d = bundle_dir
        assert main(_eval_args(d, "--static", "1.0")) == 0
        static_run = capsys.readouterr().out
        args = [
            "evaluate",
            "--base-emb", str(d / "base.emb"),
            "--novel-emb", str(d / "novel.emb"),
            "--fs-weights", str(d / "fs-base.classifier.json"),
            "--zs-weights", str(d / "fs-base.classifier.json"),
            "--novel-fs-weights", str(d / "fs-novel.classifier.json"),
            "--novel-zs-weights", str(d / "fs-novel.classifier.json"),
            "--static", "1.0",
        ]
        assert main(args) == 0
        fewshot_only = capsys.readouterr().out
        assert static_run == fewshot_only

    def test_trace_file(self, bundle_dir, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        assert main(_eval_args(bundle_dir, "--alpha", "inf",
                               "--trace", str(trace))) == 0
        capsys.readouterr()
        lines = trace.read_text().splitlines()
        assert lines[0] == "sample_id,s,predicted,correct"
        assert len(lines) == 1 + 2 * SMALL_SPEC.n_base_classes * SMALL_SPEC.per_class_count
        for line in lines[1:]:
            _, s, _, correct = line.split(",")
            assert float(s) in (0.0, 0.5, 1.0)
            assert correct in ("0", "1")

    def test_infinite_alpha_spelled_inf(self, bundle_dir, capsys):
        assert main(_eval_args(bundle_dir, "--alpha", "inf")) == 0
        out = capsys.readouterr().out
        assert "alpha=inf" in out

    def test_posterior_target(self, bundle_dir, capsys):
        assert main(_eval_args(bundle_dir, "--target", "posteriors")) == 0
        assert "target=posteriors" in capsys.readouterr().out


class TestDomainEval:
    def test_csv_rows(self, bundle_dir, capsys):
        d = bundle_dir
        args = [
            "domain-eval",
            "--source-emb", str(d / "base.emb"),
            "--target-emb", str(d / "base.emb"),
            "--target-emb", str(d / "base.emb"),
            "--fs-weights", str(d / "fs-base.classifier.json"),
            "--zs-weights", str(d / "zs-base.classifier.json"),
        ]
        assert main(args) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "config,set,accuracy"
        assert out[1].split(",")[1] == "source:base"
        assert out[-1].split(",")[1] == "target-mean"
        # identical target sets: all four accuracy cells equal
        assert len({line.split(",")[2] for line in out[1:]}) == 1


class TestSweeps:
    def test_alpha_sweep_rows_and_best(self, bundle_dir, capsys):
        assert main(["sweep-alpha"] + _eval_args(bundle_dir)[1:]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "config,base_acc,novel_acc,h"
        assert len(out) == 1 + 10 + 1  # header, ten alphas, best line
        assert out[-1].startswith("best_alpha,")

    def test_alpha_sweep_custom_list(self, bundle_dir, capsys):
        args = ["sweep-alpha"] + _eval_args(bundle_dir)[1:] + ["--alphas", "8,inf"]
        assert main(args) == 0
        out = capsys.readouterr().out.splitlines()
        assert len(out) == 4
        assert "alpha=8" in out[1] and "alpha=inf" in out[2]

    def test_static_sweep_default_grid(self, bundle_dir, capsys):
        args = ["sweep-static"] + _eval_args(bundle_dir)[1:]
        assert main(args) == 0
        out = capsys.readouterr().out.splitlines()
        assert len(out) == 1 + 5
        assert "static=0.05" in out[1] and "static=0.95" in out[5]


class TestAnalysisCommands:
    def test_analyze_hmean_prints_four_decimals(self, capsys):
        args = ["analyze-hmean", "--p0", "0.6", "--p1", "0.9", "--q0", "0.8",
                "--q1", "0.6", "--rb", "1", "--rn", "0"]
        assert main(args) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "rb,rn,pb,pn,h"
        assert out[1] == "1.0000,0.0000,0.9000,0.8000,0.8471"

    def test_analyze_hmean_json_doc_full_precision(self, capsys):
        args = ["analyze-hmean", "--p0", "0.6", "--p1", "0.9", "--q0", "0.8",
                "--q1", "0.6", "--rb", "1", "--rn", "0", "--format", "json-doc"]
        assert main(args) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["h"] == pytest.approx(0.8470588235294118, abs=1e-15)

    def test_contour_row_major_order(self, capsys):
        args = ["contour", "--p0", "0.6", "--p1", "0.9", "--q0", "0.8",
                "--q1", "0.6", "--resolution", "2"]
        assert main(args) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "rb,rn,pb,pn,h"
        assert len(out) == 5
        # rows iterate rb, columns rn
        assert [line.split(",")[:2] for line in out[1:]] == [
            ["0.0000", "0.0000"], ["0.0000", "1.0000"],
            ["1.0000", "0.0000"], ["1.0000", "1.0000"],
        ]

    def test_simulate_reports_exact_counts(self, capsys):
        args = ["simulate", "--p0", "0.6", "--p1", "0.9", "--q0", "0.8",
                "--q1", "0.6", "--rb", "0.8", "--rn", "0.3",
                "--n-base", "1000", "--n-novel", "1000", "--seed", "7"]
        assert main(args) == 0
        out = capsys.readouterr().out
        assert "base_correct,845" in out
        assert "novel_correct,728" in out
        assert "generator,pcg64" in out
        assert "seed,7" in out


class TestGenSyntheticAndInspect:
    def test_generate_then_inspect(self, tmp_path, capsys):
        out_dir = tmp_path / "gen"
        args = ["gen-synthetic", "--out-dir", str(out_dir), "--seed", "3",
                "--n-base-classes", "3", "--n-novel-classes", "3",
                "--dim", "8", "--per-class-count", "4"]
        assert main(args) == 0
        wrote = capsys.readouterr().out.splitlines()
        assert len(wrote) == 7 and all(line.startswith("wrote ") for line in wrote)

        assert main(["inspect", str(out_dir / "base.emb")]) == 0
        out = capsys.readouterr().out.splitlines()
        assert "format,embedding-binary" in out
        assert "dim,8" in out and "count,12" in out

        assert main(["inspect", str(out_dir / "fs-base.classifier.json")]) == 0
        out = capsys.readouterr().out
        assert "format,classifier" in out and "kind,few_shot" in out

        assert main(["inspect", str(out_dir / "spec.json")]) == 0
        assert "format,synthetic-spec" in capsys.readouterr().out

    def test_spec_file_with_flag_overrides(self, tmp_path, capsys):
        spec_path = tmp_path / "s.json"
        spec_path.write_text(json.dumps({"n_base_classes": 3, "n_novel_classes": 3,
                                         "dim": 8, "per_class_count": 2, "seed": 1}))
        out_dir = tmp_path / "gen2"
        assert main(["gen-synthetic", "--spec", str(spec_path),
                     "--out-dir", str(out_dir), "--seed", "9"]) == 0
        capsys.readouterr()
        assert main(["inspect", str(out_dir / "spec.json")]) == 0
        out = capsys.readouterr().out
        assert "seed,9" in out and "dim,8" in out


class TestErrorHandling:
    def test_unknown_flag_exits_2(self, bundle_dir, capsys):
        with pytest.raises(SystemExit) as exc:
            main(_eval_args(bundle_dir, "--bogus-flag", "1"))
        assert exc.value.code == 2
        err = capsys.readouterr().err
        assert err.startswith("error[usage]:")

    def test_missing_file_exits_3(self, bundle_dir, capsys):
        args = _eval_args(bundle_dir)
        args[args.index("--base-emb") + 1] = "/nonexistent/file.emb"
        assert main(args) == 3
        assert capsys.readouterr().err.startswith("error[format]:")

    def test_corrupt_file_exits_3(self, tmp_path, bundle_dir, capsys):
        bad = tmp_path / "bad.emb"
        bad.write_bytes(b"NOTMAGIC" + b"\x00" * 32)
        args = _eval_args(bundle_dir)
        args[args.index("--base-emb") + 1] = str(bad)
        assert main(args) == 3
        assert capsys.readouterr().err.startswith("error[format]:")

    def test_invariant_violation_exits_4(self, bundle_dir, capsys):
        assert main(_eval_args(bundle_dir, "--alpha", "-4")) == 4
        assert capsys.readouterr().err.startswith("error[invariant]:")

    def test_temperature_mismatch_exits_4(self, bundle_dir, tmp_path, capsys):
        import fuselens
        from fuselens.data import read_classifier, write_classifier

        fs, _ = read_classifier(bundle_dir / "fs-base.classifier.json")
        other = fuselens.ClassifierWeights(fs.weights, fs.class_names,
                                           fs.temperature * 2, fs.kind)
        retagged = tmp_path / "other-tau.classifier.json"
        write_classifier(retagged, other)
        args = _eval_args(bundle_dir)
        args[args.index("--zs-weights") + 1] = str(retagged)
        assert main(args) == 4
        assert "temperature" in capsys.readouterr().err

    def test_reports_go_to_stdout_only(self, bundle_dir, capsys):
        assert main(_eval_args(bundle_dir)) == 0
        captured = capsys.readouterr()
        assert captured.out
        assert captured.err == ""
