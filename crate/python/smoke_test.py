"""Smoke test for the pymixcert extension module.

Build and install first, e.g.

    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/pymixcert-*.whl
"""

import json
import math

import pymixcert as mc


def main():
    chain = mc.Process.symmetric_chain(0.9, [0.5, 0.5])
    assert abs(chain.phi(1, 10) - 0.4) < 1e-12
    assert abs(chain.phi(3, 10) - 0.256) < 1e-12
    assert chain.stationary() == [0.5, 0.5]

    proc = mc.Process.drifted_two_state()
    profile = json.loads(proc.mixing_profile(200))
    assert profile["delta_inf"] >= 1.0
    assert len(profile["mu"]) == 200

    data = proc.sample_sequence(300, 7)
    assert len(data) == 300 and data.kind == "sequence"
    again = mc.Dataset.from_text(data.to_text())
    assert again.digest() == data.digest()

    assert abs(mc.spectral_norm([[0.0, 2.0], [0.0, 0.0]]) - 2.0) < 1e-12
    assert mc.ramp_loss(0.5, 1.0) == 1.0 and mc.ramp_loss(-1.0, 1.0) == 0.0
    assert mc.margin([0.2, 0.9], 2) > 0
    assert abs(mc.mcdiarmid_tail_bound(0.1, 100, 0.01, 1.0) - 2 * math.exp(-2)) < 1e-15
    assert mc.rademacher_exact([[0.0, 0.0], [1.0, 1.0]]) == 0.25

    arch = json.dumps({"dims": [2, 8, 2], "activations": ["relu", "identity"]})
    train = json.dumps({"learning_rate": 0.05, "epochs": 3, "batch_size": 16, "seed": 1})
    net = mc.train(data, arch, train)
    assert len(net.forward([0.5, -0.5])) == 2
    report = json.loads(mc.network_certificate(data, net, 1.0, proc, 0.05))
    total = sum(
        report[k]
        for k in ("empirical_ramp_loss", "mu_mean", "concentration_term", "small_term", "complexity_term")
    )
    assert abs(total - report["total_bound"]) <= 1e-12 * report["total_bound"]

    hand = mc.Network.from_layers([[[1.0, 0.0], [0.0, 1.0]]], ["identity"])
    assert mc.Network.from_text(hand.to_text()).forward([1.0, 2.0]) == [1.0, 2.0]

    config = json.loads(mc.default_config())
    config.update(n_train=100, m_target=200, seeds=[1, 2])
    config["train"]["epochs"] = 1
    reports = json.loads(mc.run_certification(json.dumps(config)))
    assert len(reports) == 2 * len(config["gamma_list"])

    print("pymixcert smoke test passed")


if __name__ == "__main__":
    main()
