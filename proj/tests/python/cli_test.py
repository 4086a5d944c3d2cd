"""End-to-end CLI checks: classify -> evaluate -> generate over the bundled
corpus with the offline mock backends, plus exit-code behavior."""

import json
import os
import pathlib
import subprocess
import sys
import tempfile

CLI = os.environ["TESTSIFT_CLI"]
DATA = pathlib.Path(os.environ["TESTSIFT_DATA"])


def run(*args, cwd):
    return subprocess.run([CLI, *args], cwd=cwd, capture_output=True, text=True)


def write_config(path, out_dir):
    config = {
        "adapter": "brace",
        "source_root": str(DATA / "fixture"),
        "backend": {"kind": "mock-rule"},
        "rag": {"enabled": "auto", "index_path": str(out_dir / "index.bin")},
        "output_dir": str(out_dir),
        "concurrency": 2,
        "seed": 42,
    }
    path.write_text(json.dumps(config))


def main():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        config = tmp / "config.json"
        write_config(config, tmp)
        corpus = str(DATA / "mini_corpus.jsonl")

        r = run("classify", corpus, "--config", str(config), cwd=tmp)
        assert r.returncode == 0, r.stdout + r.stderr
        predictions = tmp / "predictions.jsonl"
        rows = [json.loads(line) for line in predictions.read_text().splitlines()]
        assert len(rows) == 12
        assert all(not row["unclassified"] for row in rows)
        print("ok: classify")

        # Deterministic rerun.
        first = predictions.read_bytes()
        r = run("classify", corpus, "--config", str(config), cwd=tmp)
        assert r.returncode == 0
        assert predictions.read_bytes() == first
        print("ok: classify determinism")

        r = run("evaluate", str(predictions), corpus, "--config", str(config),
                "--baseline", "--accounting", str(tmp / "audit.jsonl"), cwd=tmp)
        assert r.returncode == 0, r.stdout + r.stderr
        metrics = (tmp / "metrics.csv").read_text()
        assert "total,avg_f1,1.000000" in metrics
        assert (tmp / "baseline.csv").exists()
        accounting = (tmp / "accounting.csv").read_text()
        assert accounting.startswith("model,mode,rag,metric")
        assert "prompt_tokens" in accounting
        print("ok: evaluate")

        r = run("generate", str(predictions), corpus, "--config", str(config),
                "--backend", "mock-script", "--script",
                str(DATA / "scripts" / "generate_demo.json"), cwd=tmp)
        assert r.returncode == 0, r.stdout + r.stderr
        outcomes = [json.loads(line)
                    for line in (tmp / "generated" / "outcomes.jsonl").read_text().splitlines()]
        assert len(outcomes) == 8  # need-test and error-prone predictions only
        assert all(o["generated"] for o in outcomes)
        print("ok: generate")

        r = run("extract", corpus, "--config", str(config), cwd=tmp)
        assert r.returncode == 0
        assert len((tmp / "ingredients.jsonl").read_text().splitlines()) == 12
        print("ok: extract")

        r = run("index", "--config", str(config), cwd=tmp)
        assert r.returncode == 0
        assert (tmp / "index.bin").exists()
        print("ok: index")

        r = run("finetune-export", corpus, "--config", str(config), cwd=tmp)
        assert r.returncode == 0
        manifest = json.loads((tmp / "finetune_manifest.json").read_text())
        assert len(manifest["finetune"]) + len(manifest["validation"]) == 12
        print("ok: finetune-export")

        # Config errors exit 2; input errors exit 3.
        r = run("classify", corpus, "--config", str(config), "--shots", "4", cwd=tmp)
        assert r.returncode == 2, r.returncode
        r = run("classify", str(tmp / "missing.jsonl"), "--config", str(config), cwd=tmp)
        assert r.returncode == 3, r.returncode
        print("ok: exit codes")

    print("cli tests passed")


if __name__ == "__main__":
    sys.exit(main())
