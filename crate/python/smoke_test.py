"""Smoke test for the v2xsim Python extension.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`,
then run `python python/smoke_test.py`.
"""

import math

import v2xsim


def check_consensus():
    ch = v2xsim.ChannelSpec(0, 7, 0.2)
    assert ch.fault_margin == 2
    q = ch.quorum_success_prob()
    exact = sum(math.comb(7, k) * 0.2**k * 0.8 ** (7 - k) for k in range(3))
    assert abs(q - exact) < 1e-12, (q, exact)
    assert 0.0 < ch.success_prob() <= q
    tx = ch.simulate(seed=1)
    assert set(tx) == {"endorsed", "ec_success", "latency_slots", "retries_used"}
    try:
        v2xsim.ChannelSpec(1, 5, 1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("fault_prob 1.5 accepted")


def check_gossip_and_geometry():
    assert [v2xsim.gossip_rounds(n) for n in (5, 10, 50, 100)] == [4, 6, 10, 12]
    traj = v2xsim.analytic_trajectory(10, 6)
    mc = v2xsim.monte_carlo_mean_uninformed(10, 6, 2000, 3)
    assert len(traj) == len(mc) == 7
    assert max(abs(a - b) for a, b in zip(traj, mc)) < 0.05
    assert v2xsim.dwell_time(1000.0, 20.0) == 50.0
    assert v2xsim.compute_reward(True, 3.0, 2.0) == (1, 0, 0)
    scene = v2xsim.sample_scene(seed=4)
    assert len(scene.rsu_positions) > 0 and len(scene.vehicles) > 0
    x, y, _, _ = scene.vehicles[0]
    assert scene.closest_rsu(x, y) is not None


def check_bandit_and_oracle():
    channels = [v2xsim.ChannelSpec(k, 7, pf) for k, pf in enumerate([0.45, 0.4, 0.0, 0.5])]
    table = v2xsim.solve_oracle(channels, [100.0], reps=2000, seed=1)
    assert table.best_channel() == 2
    assert len(table.expected_rewards()) == 4

    b = v2xsim.BanditState(4, policy="thompson", seed=2)
    for _ in range(200):
        arm = b.select_arm()
        b.update(0, arm, 1 if arm == 2 else 0)
    assert b.total_observations() == 200
    alpha, beta = b.posterior(0, 2)
    assert alpha > beta

    records = v2xsim.run_session(channels, horizon_slots=1500, seed=3, t_train_slots=40, oracle_reps=2000)
    assert records and all(r.slot_submitted >= 40 for r in records)
    late = [r for r in records if r.slot_submitted >= 1000]
    share = sum(r.channel_id == 2 for r in late) / len(late)
    assert share > 0.9, share
    oracle = v2xsim.run_session(channels, horizon_slots=500, seed=3, mode="oracle", t_train_slots=0, oracle_reps=2000)
    assert all(r.regret == 0 for r in oracle)


def check_experiments():
    cfg = v2xsim.ScenarioConfig(
        """
        replications = 2
        oracle_reps = 500
        [regret]
        t_train_grid = [10, 20]
        n_ch_grid = [10, 20]
        horizon_slots = 100
        """
    )
    cfg.master_seed = 9
    log = v2xsim.run_regret(cfg)
    assert len(log) == 2 * 2 * 2 * 2
    text = log.csv("regret")
    assert text.startswith("policy,t_train_slots,n_channels,replications,mean_regret\n")
    assert len(text.strip().splitlines()) == 1 + 2 * 2 * 2
    assert log.csv("regret") == v2xsim.run_regret(cfg).csv("regret")
    rows = v2xsim.run_scalability(cfg, n_clients_grid=[2]).replications()
    assert {r["policy"] for r in rows} == {"thompson", "random", "oracle"}
    assert len(cfg.build_network(seed=0)) == cfg.n_channels
    try:
        v2xsim.ScenarioConfig("n_channels = 0")
    except ValueError:
        pass
    else:
        raise AssertionError("n_channels = 0 accepted")


if __name__ == "__main__":
    check_consensus()
    check_gossip_and_geometry()
    check_bandit_and_oracle()
    check_experiments()
    print(f"v2xsim {v2xsim.__version__}: smoke test passed")
