"""Command line behavior: exit codes, config files, env seed, sidecars."""

import json
import os

import numpy as np
import pytest

from makeover import assets
from makeover.cli import EXIT_OK, EXIT_USAGE, SEED_ENV_VAR, main


@pytest.fixture(autouse=True)
def clean_seed_env(monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)


def fixture_path(corpus_dir, stem):
    return str(corpus_dir / f"{stem}.png")


def test_no_command_prints_help_and_fails(capsys):
    assert main([]) == EXIT_USAGE
    assert "usage" in capsys.readouterr().out.lower()


def test_unknown_flag_is_usage_error(capsys):
    assert main(["transfer", "--bogus"]) == EXIT_USAGE


def test_unknown_command_is_usage_error():
    assert main(["polish"]) == EXIT_USAGE


def test_missing_required_option_is_usage_error(capsys):
    assert main(["transfer"]) == EXIT_USAGE
    assert "checkpoint" in capsys.readouterr().err


def test_make_fixtures_writes_corpus(tmp_path):
    out = tmp_path / "fx"
    assert main(["make-fixtures", "--out", str(out), "--seeds", "3", "--size", "64"]) == EXIT_OK
    manifest = assets.load_manifest(out / "manifest.jsonl")
    assert len(manifest.records) == 2  # one styled and one plain per seed
    for record in manifest.records:
        assert (out / record.image_path).is_file()


def test_train_and_transfer_pipeline(tmp_path, corpus_dir, capsys):
    run_dir = tmp_path / "run"
    code = main(
        [
            "train",
            "--manifest",
            str(corpus_dir / "manifest.jsonl"),
            "--out",
            str(run_dir),
            "--epochs",
            "1",
            "--max-steps",
            "1",
            "--image-size",
            "64",
            "--base-width",
            "16",
        ]
    )
    assert code == EXIT_OK
    assert (run_dir / "model.pt").is_file()
    assert (run_dir / "metrics.jsonl").is_file()

    out_png = tmp_path / "result.png"
    code = main(
        [
            "transfer",
            "--checkpoint",
            str(run_dir / "model.pt"),
            "--source",
            fixture_path(corpus_dir, "face000p"),
            "--reference",
            fixture_path(corpus_dir, "face000m"),
            "--out",
            str(out_png),
        ]
    )
    assert code == EXIT_OK
    assert out_png.is_file()


def test_transfer_flags_equal_config_file(tmp_path, corpus_dir, checkpoint_path):
    by_flags = tmp_path / "flags.png"
    assert (
        main(
            [
                "transfer",
                "--checkpoint",
                str(checkpoint_path),
                "--source",
                fixture_path(corpus_dir, "face000p"),
                "--reference",
                fixture_path(corpus_dir, "face000m"),
                "--alpha",
                "0.5",
                "--out",
                str(by_flags),
            ]
        )
        == EXIT_OK
    )
    cfg = tmp_path / "transfer.cfg"
    by_file = tmp_path / "file.png"
    cfg.write_text(
        f"checkpoint = {checkpoint_path}\n"
        f"source = {fixture_path(corpus_dir, 'face000p')}\n"
        f"reference = {fixture_path(corpus_dir, 'face000m')}\n"
        "alpha = 0.5\n"
        f"out = {by_file}\n"
    )
    assert main(["transfer", "--config", str(cfg)]) == EXIT_OK
    assert by_file.read_bytes() == by_flags.read_bytes()


def test_transfer_two_references_with_regions(tmp_path, corpus_dir, checkpoint_path):
    out_png = tmp_path / "split.png"
    code = main(
        [
            "transfer",
            "--checkpoint",
            str(checkpoint_path),
            "--source",
            fixture_path(corpus_dir, "face000p"),
            "--reference",
            fixture_path(corpus_dir, "face000m"),
            "--reference",
            fixture_path(corpus_dir, "face001m"),
            "--regions",
            "lip,eye",
            "--out",
            str(out_png),
        ]
    )
    assert code == EXIT_OK
    assert out_png.is_file()


def test_transfer_rejects_three_references(tmp_path, corpus_dir, checkpoint_path, capsys):
    args = ["transfer", "--checkpoint", str(checkpoint_path), "--source",
            fixture_path(corpus_dir, "face000p"), "--out", str(tmp_path / "x.png")]
    for stem in ("face000m", "face001m", "face000m"):
        args += ["--reference", fixture_path(corpus_dir, stem)]
    assert main(args) == EXIT_USAGE
    assert "one or two" in capsys.readouterr().err


def test_remove_subcommand(tmp_path, corpus_dir, checkpoint_path):
    out_png = tmp_path / "clean.png"
    code = main(
        [
            "remove",
            "--checkpoint",
            str(checkpoint_path),
            "--source",
            fixture_path(corpus_dir, "face000m"),
            "--out",
            str(out_png),
        ]
    )
    assert code == EXIT_OK
    assert out_png.is_file()


def test_remove_subcommand_refuses_reference(corpus_dir, checkpoint_path):
    # the remove form defines no --reference flag at all
    code = main(
        [
            "remove",
            "--checkpoint",
            str(checkpoint_path),
            "--source",
            fixture_path(corpus_dir, "face000m"),
            "--reference",
            fixture_path(corpus_dir, "face000m"),
            "--out",
            "/tmp/never.png",
        ]
    )
    assert code == EXIT_USAGE


def test_transfer_remove_flag_conflicts_with_alpha(tmp_path, corpus_dir, checkpoint_path, capsys):
    code = main(
        [
            "transfer",
            "--checkpoint",
            str(checkpoint_path),
            "--source",
            fixture_path(corpus_dir, "face000m"),
            "--remove",
            "--alpha",
            "0.5",
            "--out",
            str(tmp_path / "x.png"),
        ]
    )
    assert code == EXIT_USAGE
    assert "remove mode" in capsys.readouterr().err


def test_remove_equals_transfer_remove_flag(tmp_path, corpus_dir, checkpoint_path):
    via_remove = tmp_path / "a.png"
    via_flag = tmp_path / "b.png"
    base = ["--checkpoint", str(checkpoint_path), "--source", fixture_path(corpus_dir, "face000m")]
    assert main(["remove", *base, "--out", str(via_remove)]) == EXIT_OK
    assert main(["transfer", *base, "--remove", "--out", str(via_flag)]) == EXIT_OK
    assert via_remove.read_bytes() == via_flag.read_bytes()


def test_env_seed_overrides_flag(tmp_path, corpus_dir, monkeypatch):
    manifest = str(corpus_dir / "manifest.jsonl")
    base = ["train", "--manifest", manifest, "--epochs", "1", "--max-steps", "1",
            "--image-size", "64", "--base-width", "16"]

    def metrics(out_dir):
        return [json.loads(line) for line in (out_dir / "metrics.jsonl").read_text().splitlines()]

    out_a = tmp_path / "a"
    monkeypatch.setenv(SEED_ENV_VAR, "7")
    assert main([*base, "--out", str(out_a), "--seed", "0"]) == EXIT_OK

    out_b = tmp_path / "b"
    monkeypatch.delenv(SEED_ENV_VAR)
    assert main([*base, "--out", str(out_b), "--seed", "7"]) == EXIT_OK

    out_c = tmp_path / "c"
    assert main([*base, "--out", str(out_c), "--seed", "0"]) == EXIT_OK

    assert metrics(out_a) == metrics(out_b)  # env var took precedence
    assert metrics(out_a) != metrics(out_c)


def test_train_resume_appends_metrics(tmp_path, corpus_dir):
    manifest = str(corpus_dir / "manifest.jsonl")
    out = tmp_path / "run"
    base = ["train", "--manifest", manifest, "--out", str(out), "--image-size", "64",
            "--base-width", "16"]
    assert main([*base, "--epochs", "1", "--max-steps", "1"]) == EXIT_OK
    ckpt = out / "model.pt"  # carries optimizer and sampler state
    assert main([*base, "--epochs", "1", "--max-steps", "2", "--resume", str(ckpt)]) == EXIT_OK
    lines = [json.loads(line) for line in (out / "metrics.jsonl").read_text().splitlines()]
    assert [entry["step"] for entry in lines] == [1, 2]


def test_video_transfer_writes_frames(tmp_path, corpus_dir, checkpoint_path, capsys):
    frames_dir = tmp_path / "frames"
    frames_dir.mkdir()
    for stem in ("face000p", "face001p"):
        for suffix in (".png", ".parsing.png", ".landmarks.json"):
            data = (corpus_dir / f"{stem}{suffix}").read_bytes()
            (frames_dir / f"{stem}{suffix}").write_bytes(data)
    # one frame without metadata gets skipped, not fatal
    (frames_dir / "broken.png").write_bytes((corpus_dir / "face000p.png").read_bytes())

    out_dir = tmp_path / "styled"
    with pytest.warns(RuntimeWarning):
        code = main(
            [
                "transfer",
                "--checkpoint",
                str(checkpoint_path),
                "--video-dir",
                str(frames_dir),
                "--reference",
                fixture_path(corpus_dir, "face000m"),
                "--blend-bg",
                "--out",
                str(out_dir),
            ]
        )
    assert code == EXIT_OK
    assert (out_dir / "face000p.png").is_file()
    assert (out_dir / "face001p.png").is_file()
    assert not (out_dir / "broken.png").exists()
    assert "2 of 3" in capsys.readouterr().out

    # background pixels survive the round trip bit-exact
    src = assets.load_asset_with_sidecars(frames_dir / "face000p.png")
    styled = assets.load_image(out_dir / "face000p.png")
    background = src.parsing == 0
    np.testing.assert_array_equal(styled[:, background], src.image[:, background])


def test_eval_command_writes_report(tmp_path, corpus_dir, checkpoint_path):
    report = tmp_path / "report.jsonl"
    code = main(
        [
            "eval",
            "--checkpoint",
            str(checkpoint_path),
            "--manifest",
            str(corpus_dir / "manifest.jsonl"),
            "--out",
            str(report),
        ]
    )
    assert code == EXIT_OK
    lines = [json.loads(line) for line in report.read_text().splitlines()]
    assert len(lines) == 4  # two plain times two styled
    assert all("cos_sim" in entry and "region_distances" in entry for entry in lines)


def test_missing_checkpoint_file_is_usage_error(tmp_path, corpus_dir, capsys):
    code = main(
        [
            "transfer",
            "--checkpoint",
            str(tmp_path / "absent.pt"),
            "--source",
            fixture_path(corpus_dir, "face000p"),
            "--reference",
            fixture_path(corpus_dir, "face000m"),
            "--out",
            str(tmp_path / "x.png"),
        ]
    )
    assert code == EXIT_USAGE


def test_dump_attention_flag(tmp_path, corpus_dir, checkpoint_path):
    attn_dir = tmp_path / "attn"
    code = main(
        [
            "transfer",
            "--checkpoint",
            str(checkpoint_path),
            "--source",
            fixture_path(corpus_dir, "face000p"),
            "--reference",
            fixture_path(corpus_dir, "face000m"),
            "--dump-attention",
            str(attn_dir),
            "--out",
            str(tmp_path / "o.png"),
        ]
    )
    assert code == EXIT_OK
    assert list(attn_dir.glob("*.png"))
