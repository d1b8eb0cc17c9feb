"""Smoke test for the d2dsim extension module.

Build and install first:  maturin develop --release -m crates/py/Cargo.toml
"""

import json

import d2dsim


def main():
    params = d2dsim.RadioParams()
    assert params.cell_radius == 500.0
    try:
        d2dsim.RadioParams(cell_radius=-1.0)
    except ValueError as e:
        assert "cell_radius" in str(e)
    else:
        raise AssertionError("negative radius accepted")

    drop = d2dsim.Drop(cues=3, pairs=3, seed=7, params=params)
    rbs, rate, rounds, calls = drop.auction()
    best_rbs, best = drop.exhaustive_best()
    assert len(rbs) == drop.pair_count == len(best_rbs)
    assert 0.0 < rate <= best * (1 + 1e-12)
    assert abs(drop.sum_rate(best_rbs) - best) < 1e-9 * best
    print(f"auction {rate:.2f} of optimum {best:.2f} in {rounds} rounds, {calls} valuations")
    print(f"random {drop.random_sum_rate(1):.2f}, all-cellular {drop.all_cellular_sum_rate():.2f}")

    lam, p, u_leader, u_follower = drop.stackelberg(pair=0, rb=0, grid_points=500)
    assert lam >= 0.0 and p >= 0.0
    print(f"stackelberg price {lam:.4g}, power {p:.4g} W")

    cross = [[0.0, 0.1], [0.1, 0.0]]
    iterates, converged = d2dsim.power_game([1.0, 1.0], cross, [0.01, 0.01], [2.0, 2.0], 1.0, max_iters=10000)
    exact = d2dsim.solve_min_power([1.0, 1.0], cross, [0.01, 0.01], [2.0, 2.0], 1.0)
    assert converged
    assert all(abs(a - b) <= 1e-6 * b for a, b in zip(iterates[-1], exact))
    print(f"power game converged in {len(iterates) - 1} steps to {exact}")

    coal = d2dsim.content_distribution("coalition", rounds=10, seed=3)
    nonc = d2dsim.content_distribution("noncooperative", rounds=10, seed=3)
    assert coal[0] == nonc[0] and len(coal) == 11
    print(f"content after 10 rounds: coalition {coal[-1]}, noncooperative {nonc[-1]}")

    config = d2dsim.default_config("sumrate-vs-pairs").replace("drops = 200", "drops = 2")
    name, csv, summary = d2dsim.run_experiment(config)
    assert name == "sumrate.csv"
    assert csv.splitlines()[0] == "n_pairs,scheme,drop_seed,sum_rate_bps_hz,rounds,valuation_calls"
    assert csv == d2dsim.run_experiment(config)[1]
    print(f"{len(json.loads(summary)['groups'])} summary groups")

    passed, report = d2dsim.oracle_check(seed=1, instances=3)
    assert passed, report
    print("oracle check passed:", [p["property"] for p in json.loads(report)["properties"]])


if __name__ == "__main__":
    main()
