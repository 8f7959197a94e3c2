import math

import numpy as np
import pytest

from dualcheb import train as tr
from dualcheb.errors import ConfigError, NonFiniteError
from dualcheb.train import AdamState, TrainConfig, adam_step


def test_adam_momentum_free_limit():
    theta = np.array([1.0, 2.0, -3.0])
    d = np.array([0.5, -2.0, 1e-3])
    new, _ = adam_step(AdamState.zeros(3), theta, d, 0.1, (0.0, 0.0), 1e-8)
    np.testing.assert_allclose(new, theta - 0.1 * d / (np.abs(d) + 1e-8), rtol=1e-15)


def test_adam_first_step_magnitude():
    theta = np.zeros(4)
    new, st = adam_step(AdamState.zeros(4), theta, np.ones(4), 3e-4)
    np.testing.assert_allclose(theta - new, 3e-4 / (1 + 1e-8), rtol=1e-12)
    assert st.t == 1


def test_adam_zero_direction_with_fresh_state():
    theta = np.array([0.3, -0.1])
    new, _ = adam_step(AdamState.zeros(2), theta, np.zeros(2), 1e-3)
    np.testing.assert_array_equal(new, theta)


def test_adam_does_not_mutate_inputs():
    state = AdamState.zeros(2)
    theta = np.ones(2)
    adam_step(state, theta, np.ones(2), 0.1)
    np.testing.assert_array_equal(state.m, 0.0)
    np.testing.assert_array_equal(theta, 1.0)


def test_config_defaults():
    cfg = TrainConfig()
    assert (cfg.beta1, cfg.beta2, cfg.eps_adam, cfg.lr, cfg.eps) == (0.9, 0.999, 1e-8, 3e-4, 1e-6)
    assert (cfg.n_r, cfg.n_b, cfg.n_i) == (1024, 256, 256)


def test_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('problem = "helmholtz2d"\nlearning_rate = 0.1\n')
    with pytest.raises(ConfigError, match="learning_rate"):
        TrainConfig.from_toml(path)


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="ours"):
        TrainConfig(method="pcgrad")
    with pytest.raises(ConfigError):
        TrainConfig(lr=-1)
    with pytest.raises(ConfigError):
        TrainConfig(problem="kleingordon1d", method="dcgd_center")
    bad = tmp_path / "bad.toml"
    bad.write_text("steps = [\n")
    with pytest.raises(ConfigError):
        TrainConfig.from_toml(bad)
    nested = tmp_path / "nested.toml"
    nested.write_text("[train]\nsteps = 3\n")
    with pytest.raises(ConfigError):
        TrainConfig.from_toml(nested)


def test_config_p_infinity(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('p = "inf"\n')
    assert math.isinf(TrainConfig.from_toml(path).p)
    assert TrainConfig(p="inf").to_dict()["p"] == "inf"


def test_quadratic_plain_sgd_terminates_at_minimizer():
    q = tr.pb.QuadraticProblem()
    cfg = TrainConfig(problem="quadratic2", plain_sgd=True, lr=1.0 / q.beta(), steps=2000, log_every=1)
    res = tr.train(cfg, write=False)
    assert res.terminated and res.final.terminated
    np.testing.assert_allclose(res.theta, [1.0, -1.0], atol=1e-6)
    assert res.monotone
    totals = [sum(r.losses) for r in res]
    assert all(b <= a + 1e-12 for a, b in zip(totals, totals[1:]))
    # only the final record is flagged
    assert [r.terminated for r in res].count(True) == 1


@pytest.mark.parametrize("method", tr.METHODS)
def test_every_method_runs(method):
    cfg = TrainConfig(problem="quadratic2", method=method, lr=0.05, steps=30, log_every=10)
    res = tr.train(cfg, write=False)
    assert res.final.step in (30, res.steps_run)
    assert np.all(np.isfinite(res.theta))


def test_csv_bitwise_deterministic(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        cfg = TrainConfig(problem="helmholtz2d", steps=6, log_every=2, n_r=32, n_b=16, hidden=(8, 8),
                          output=str(p), timing=False)
        tr.train(cfg)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    rows = tr.read_csv(paths[0])
    assert list(rows[0]) == ["step", "loss_1", "loss_2", "r_star", "rel_l2", "terminated", "elapsed_s"]
    assert [int(r["step"]) for r in rows] == [0, 2, 4, 6]
    meta = tr.meta_path(paths[0])
    assert meta.exists() and '"eval_grid"' in meta.read_text()


def test_kg_csv_has_three_losses(tmp_path):
    out = tmp_path / "kg.csv"
    tr.train(TrainConfig(problem="kleingordon1d", steps=2, log_every=1, n_r=16, n_b=8, n_i=8, hidden=(6,),
                         output=str(out)))
    header = out.read_text().splitlines()[0].split(",")
    assert header[1:4] == ["loss_1", "loss_2", "loss_3"]


def test_nan_guard(tmp_path):
    out = tmp_path / "nan.csv"
    cfg = TrainConfig(problem="quadratic2", method="adam", plain_sgd=True, lr=1e200, steps=50, log_every=1,
                      output=str(out))
    with pytest.raises(NonFiniteError) as info:
        tr.train(cfg)
    rows = tr.read_csv(out)
    assert int(rows[-1]["step"]) == info.value.step


def test_select_direction_scalings():
    G = np.array([[2.0, 0.0], [0.0, 1.0]])
    ours = tr.select_direction("ours", G)
    v = np.array([1.0, 1.0]) / math.sqrt(2)
    np.testing.assert_allclose(ours.d, (G.sum(0) @ v) * v)
    np.testing.assert_allclose(tr.select_direction("dcgd_center", G).d, ours.d)
    np.testing.assert_allclose(tr.select_direction("config", G).d, ours.d)
    np.testing.assert_array_equal(tr.select_direction("adam", G).d, [2.0, 1.0])
    assert tr.select_direction("ours", np.array([[1.0, 0.0], [0.0, 0.0]])).terminated


def test_compare_and_ablate(tmp_path):
    base = TrainConfig(problem="quadratic2", steps=20, log_every=10)
    configs = [base.replace(seed=s, output=str(tmp_path / f"r{s}.csv")) for s in range(3)]
    rows = tr.compare(configs)
    assert len(rows) == 1 and rows[0]["runs"] == 3
    rel = [float(tr.read_csv(c.output)[-1]["rel_l2"]) for c in configs]
    assert rows[0]["rel_l2_std"] == pytest.approx(np.std(rel, ddof=1))
    rows = tr.ablate_p(base, (1.5, 2.0, 3.0))
    assert [r["p"] for r in rows] == [1.5, 2.0, 3.0]
