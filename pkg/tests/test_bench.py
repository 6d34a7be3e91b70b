import json

import numpy as np
import pytest

from kronmle.bench.config import spec_from_dict
from kronmle.bench.experiment import (
    ExperimentSpec,
    columns,
    loglog_slope,
    normalized_frob_sq,
    rows_to_csv,
    run_experiment,
    run_trial,
    scaling_study,
)
from kronmle.bench.generators import (
    FactorSpec,
    GeneratorSpec,
    generate,
    generate_factors,
    multigraph_laplacian,
)
from kronmle.cli import main
from kronmle.data import Seed, load
from kronmle.errors import InvalidInput
from kronmle.manifold import KronPoint


def test_identity_generator():
    p = generate(GeneratorSpec.uniform("identity", (3, 4)), Seed(0))
    for f in p.factors:
        np.testing.assert_array_equal(f.array, np.eye(f.dim))


def test_spiked_strength_zero_is_identity():
    p = generate(GeneratorSpec.uniform("spiked", (3, 4), strength=0.0), Seed(0))
    for f in p.factors:
        np.testing.assert_allclose(f.array, np.eye(f.dim), atol=1e-14)


def test_spiked_single_large_eigenvalue():
    mats, on_cov = generate_factors(GeneratorSpec.uniform("spiked", (25,), strength=10.0), Seed(3))
    assert on_cov[0]
    w = np.linalg.eigvalsh(mats[0])
    assert np.sum(w > 2) == 1
    assert np.trace(mats[0]) == pytest.approx(25, abs=1e-9)


@pytest.mark.parametrize("kind", ["spiked", "sparse_laplacian"])
def test_generator_invariants_many_draws(kind):
    spec = GeneratorSpec.uniform(kind, (5, 7))
    for i in range(1000):
        mats, _ = generate_factors(spec, Seed(i))
        for m, d in zip(mats, spec.dims):
            assert abs(np.trace(m) - d) <= 1e-9
            assert np.linalg.eigvalsh(m)[0] > 0


def test_multigraph_laplacian_structure():
    lap = multigraph_laplacian(6, 10, np.random.default_rng(0))
    np.testing.assert_allclose(lap.sum(axis=1), 0, atol=1e-12)
    assert np.trace(lap) == pytest.approx(2 * 10)
    assert np.all(lap - np.diag(np.diag(lap)) <= 0)


def test_wishart_needs_rank():
    with pytest.raises(InvalidInput):
        generate(GeneratorSpec.uniform("wishart", (4,), rank=2), Seed(0))
    p = generate(GeneratorSpec.uniform("wishart", (4,), rank=8), Seed(0))
    assert p.factors[0].eigenvalues[0] > 0


def test_generator_deterministic_and_roundtrip():
    spec = GeneratorSpec((3, 4), (FactorSpec("spiked", strength=5.0), FactorSpec("sparse_laplacian")))
    a, b = generate(spec, Seed(9)), generate(spec, Seed(9))
    for f, g in zip(a.factors, b.factors):
        assert f.array.tobytes() == g.array.tobytes()
    assert GeneratorSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(InvalidInput):
        FactorSpec("banana")


def test_normalized_frob_sq_trace_matching():
    t = np.diag([2.0, 1.0])
    assert normalized_frob_sq(3 * t, t) == pytest.approx(0.0, abs=1e-15)


def _small_spec(tmp_path, **kw):
    base = dict(generator=GeneratorSpec.uniform("spiked", (3, 4)), n_list=(5, 20), trials=3, seed=17,
                sweep=(0.0, 0.5), csv_path=str(tmp_path / "out.csv"), svg_path=str(tmp_path / "out.svg"))
    base.update(kw)
    return ExperimentSpec(**base)


def test_run_experiment_deterministic_and_replayable(tmp_path):
    spec = _small_spec(tmp_path)
    text = run_experiment(spec)
    first = (tmp_path / "out.csv").read_bytes()
    run_experiment(spec)
    assert (tmp_path / "out.csv").read_bytes() == first
    assert (tmp_path / "out.svg").read_bytes().startswith(b"<?xml")
    lines = text.splitlines()
    assert lines[0].split(",") == columns(2)
    assert len(lines) == 1 + 3 * 2 * 2
    rows = run_trial(spec, 1)
    replay = "\n".join(lines[1 + 4:1 + 8])
    assert rows_to_csv(rows, 2).splitlines()[1:] == replay.splitlines()


def test_parallel_matches_serial(tmp_path):
    a = run_experiment(_small_spec(tmp_path, csv_path=None, svg_path=None))
    b = run_experiment(_small_spec(tmp_path, csv_path=None, svg_path=None, jobs=2))
    assert a == b


def test_spec_validation():
    g = GeneratorSpec.uniform("identity", (2, 2))
    with pytest.raises(InvalidInput):
        ExperimentSpec(generator=g, n_list=(), trials=1, seed=0)
    with pytest.raises(InvalidInput):
        ExperimentSpec(generator=g, n_list=(3,), trials=0, seed=0)
    with pytest.raises(InvalidInput):
        ExperimentSpec(generator=g, n_list=(3,), trials=1, seed=0, sweep=(2.0,))
    with pytest.raises(InvalidInput):
        spec_from_dict({"generator": {"dims": [2, 2]}, "n_list": [3]})
    spec = spec_from_dict({"generator": {"dims": [2, 2], "kind": "spiked"}, "n_list": [3], "seed": 1,
                           "sweep": {"delta": [1e-6, 1e-8]}}, trials=4)
    assert spec.trials == 4 and spec.sweep_kind == "delta"


def test_scaling_study_validation_and_slope():
    g = GeneratorSpec.uniform("identity", (2, 2))
    with pytest.raises(InvalidInput):
        scaling_study(g, [], 2, 0)
    with pytest.raises(InvalidInput):
        scaling_study(g, [50, 10], 2, 0)
    assert loglog_slope([1, 10, 100], [1.0, 0.1, 0.01]) == pytest.approx(-1.0)
    res = scaling_study(g, [20, 80], 5, 0)
    assert res.median_geodesic[1] < res.median_geodesic[0]
    text = res.to_csv()
    assert text.splitlines()[0].startswith("n,trials")
    assert "np." not in text


def test_cli_roundtrip(tmp_path, capsys):
    data, truth, est = tmp_path / "x.tn", tmp_path / "t.json", tmp_path / "e.json"
    assert main(["sample", "--dims", "3,4", "--generator", "spiked", "--n", "50", "--seed", "1",
                 "--out", str(data), "--truth", str(truth)]) == 0
    assert load(data).n == 50
    assert main(["fit", str(data), "--out", str(est)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["termination"] == "Converged"
    assert main(["eval", str(est), str(truth)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["geodesic"] > 0
    assert main(["diagnose", str(data), "--modes", "0,1"]) == 0
    rec = json.loads(capsys.readouterr().out.splitlines()[0])
    assert rec["modes"] == [0, 1] and "spectral_gap" in rec
    KronPoint.from_json(json.loads(est.read_text()))


def test_cli_exit_codes(tmp_path, capsys):
    data = tmp_path / "x.tn"
    main(["sample", "--dims", "25,50", "--n", "1", "--seed", "2", "--out", str(data)])
    assert main(["fit", str(data)]) == 3
    assert main(["fit", str(data), "--alpha", "0.5"]) == 0
    assert main(["diagnose", str(data), "--modes", "0,0", "--no-gap"]) == 2
    assert main(["diagnose", str(data), "--modes", "0"]) == 2
    assert main(["fit", str(tmp_path / "missing.tn")]) == 2
    assert main(["fit", str(data), "--alpha", "2"]) == 2
    with pytest.raises(SystemExit):
        main(["bench", "--dims", "2,2"])  # --seed is mandatory


def test_cli_bench_config(tmp_path, capsys):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text("generator:\n  dims: [3, 3]\n  kind: spiked\nn_list: [4]\ntrials: 2\n"
                   "sweep:\n  alpha: [0.2, 1.0]\n")
    out = tmp_path / "a.csv"
    assert main(["bench", "--config", str(cfg), "--seed", "5", "--csv", str(out)]) == 0
    first = out.read_bytes()
    assert main(["bench", "--config", str(cfg), "--seed", "5", "--csv", str(out)]) == 0
    assert out.read_bytes() == first
    assert len(first.decode().splitlines()) == 1 + 2 * 2
