import json
import os
import subprocess

import numpy as np
import pytest

import wildfire_risk as wr


def test_labels():
    assert [wr.label_static(a) for a in (9.999, 10, 4999.99, 5000)] == [0, 1, 1, 2]
    assert wr.label_dynamic([299.99]) == 0
    assert wr.label_dynamic([12.0, 300.0]) == 1
    with pytest.raises(wr.WildfireError):
        wr.label_static(-1.0)


def test_metrics_on_imbalanced_counts():
    pred = [1] * 137 + [1] * 3177 + [0] * 97 + [0] * 13557
    truth = [1] * 137 + [0] * 3177 + [1] * 97 + [0] * 13557
    report = wr.metrics(pred, truth)["metrics"]
    assert report["accuracy"] == pytest.approx(0.8070, abs=1e-4)
    recall = [c for c in report["per_class"] if c["label"] == 1][0]["recall"]
    assert recall == pytest.approx(0.5855, abs=1e-4)


def test_smote_balances():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(30, 4))
    y = [1] * 5 + [0] * 25
    xs, ys, parents = wr.smote(x, y, k_neighbors=3, seed=1)
    assert (ys == 1).sum() == (ys == 0).sum() == 25
    assert len(parents) == 20
    np.testing.assert_array_equal(xs[:30], x)


def test_fit_predict_and_hash(tmp_path):
    x, y = wr.synthetic_dataset(seed=3, n_rows=10, n_cols=10, base_rate=0.2)
    model = wr.fit("logreg", x, y, seed=4)
    proba = model.predict_proba(x)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    np.testing.assert_array_equal(model.predict(x), proba.argmax(axis=1))
    path = tmp_path / "m.json"
    model.save(str(path))
    again = wr.Model.load(str(path))
    assert again.hash == model.hash == model.info["hash"]
    base, wetter = model.risk_cells(x, "pdsi_delta", 4.0)
    assert base == int(model.predict(x).sum())
    assert wetter <= base


def test_cross_validate_is_deterministic():
    x, y = wr.synthetic_dataset(seed=5, n_rows=10, n_cols=10, base_rate=0.2)
    a = wr.cross_validate("rf", x, y, k=3, seed=9)
    b = wr.cross_validate("rf", x, y, k=3, seed=9)
    assert a == b
    assert a["macro_f1"]["mean"] > 0.5


def test_cli_in_process_matches_binary(tmp_path):
    code, out, _ = wr.run_cli("synth", "--seed", "7", "--rows", "5", "--cols", "5", "--out", str(tmp_path / "a"))
    assert code == 0
    binary = os.environ.get("WILDFIRE_CLI")
    if binary:
        subprocess.run([binary, "synth", "--seed", "7", "--rows", "5", "--cols", "5", "--out", str(tmp_path / "b")],
                       check=True, capture_output=True)
        for name in ("predictors.csv", "incidents.csv", "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert wr.run_cli("synth", "--out", str(tmp_path / "c"))[0] == 1
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest
