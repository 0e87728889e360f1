import numpy as np
import pytest

from histoclahe.cli import main
from histoclahe.clahe import ClaheParams, clahe
from histoclahe.dataset import SynthParams, generate_synthetic_dataset, write_dataset
from histoclahe.raster_io import encode_image, read_gray


@pytest.fixture
def data_dir(tmp_path):
    root = tmp_path / "data"
    write_dataset(generate_synthetic_dataset(SynthParams(per_class=6, size=32), 1), root)
    return root


def test_enhance(tmp_path, rng, capsys):
    src = tmp_path / "in"
    (src / "sub").mkdir(parents=True)
    img = rng.integers(0, 256, (24, 24), dtype=np.uint8)
    (src / "sub" / "a.png").write_bytes(encode_image(img, "png"))
    (src / "b.pgm").write_bytes(encode_image(img, "pgm"))
    rc = main(["enhance", "--input", str(src), "--output", str(tmp_path / "out"), "--tiles", "3x3",
               "--clip", "1.5", "--dump-histograms", str(tmp_path / "h")])
    assert rc == 0
    expected = clahe(img, ClaheParams(3, 3, 1.5))
    assert np.array_equal(read_gray(tmp_path / "out" / "sub" / "a.png"), expected)
    assert np.array_equal(read_gray(tmp_path / "out" / "b.pgm"), expected)
    hist = (tmp_path / "h" / "b.hist.csv").read_text().splitlines()
    assert hist[0] == "bin,count" and len(hist) == 257


def test_synth_writes_layout(tmp_path):
    rc = main(["synth", "--out", str(tmp_path), "--per-class", "3", "--size", "16", "--seed", "2"])
    assert rc == 0
    assert len(list((tmp_path / "healthy").glob("*.pgm"))) == 3
    assert len(list((tmp_path / "diseased").glob("*.pgm"))) == 3


def test_train_eval_report(data_dir, tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(["train", "--data", str(data_dir), "--clahe", "on", "--tiles", "2x2", "--clip", "2.0",
               "--split", "0.5", "--seed", "3", "--epochs", "2", "--lr", "0.05", "--out", str(out)])
    assert rc == 0
    assert (out / "model.bin").exists() and (out / "loss.csv").read_text().startswith("epoch,loss\n0,")
    rc = main(["eval", "--model", str(out / "model.bin"), "--data", str(data_dir),
               "--report", str(tmp_path / "eval.csv"), "--clahe", "on", "--name", "clahe"])
    assert rc == 0
    rows = (tmp_path / "eval.csv").read_text().splitlines()
    counts = [int(v) for v in rows[1].split(",")[1:5]]
    assert rows[1].startswith("clahe,") and sum(counts) == 12
    assert (tmp_path / "eval.json").exists()

    rc = main(["report", "--inputs", str(out / "metrics.csv"), str(tmp_path / "eval.csv"),
               "--out", str(tmp_path / "all.csv")])
    assert rc == 2  # both files carry a row named "clahe"
    (tmp_path / "other.csv").write_text(
        "name,tp,tn,fp,fn,accuracy,sensitivity,specificity,precision,f1\n"
        "no_clahe,40,44,4,2,0,0,0,0,0\n"
    )
    rc = main(["report", "--inputs", str(tmp_path / "other.csv"), str(tmp_path / "eval.csv"),
               "--out", str(tmp_path / "all.csv")])
    assert rc == 0
    merged = (tmp_path / "all.csv").read_text().splitlines()
    assert merged[1] == "no_clahe,40,44,4,2,0.933333,0.952381,0.916667,0.909091,0.930233"
    assert merged[2].startswith("clahe,")


def test_experiment_command(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "seed = 2\noutput_dir = out\ndataset.per_class = 6\ndataset.size = 32\n"
        "clahe.tiles = 2x2\ntrain.epochs = 1\ntrain.input_size = 16\n"
    )
    assert main(["experiment", "--config", str(cfg)]) == 0
    assert (tmp_path / "out" / "metrics.csv").exists()
    assert "no_clahe," in capsys.readouterr().out


def test_exit_codes(tmp_path, data_dir):
    assert main(["enhance", "--input", str(tmp_path), "--output", str(tmp_path / "o"), "--tiles", "eight"]) == 1
    with pytest.raises(SystemExit) as info:
        main(["train"])
    assert info.value.code == 1
    assert main(["eval", "--model", str(tmp_path / "missing.bin"), "--data", str(data_dir),
                 "--report", str(tmp_path / "r.csv")]) == 2
    assert main(["train", "--data", str(tmp_path / "nowhere"), "--out", str(tmp_path / "o")]) == 2
    assert main(["train", "--data", str(data_dir), "--lr", "1e300", "--epochs", "3",
                 "--out", str(tmp_path / "div")]) == 3
