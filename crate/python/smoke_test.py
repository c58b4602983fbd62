"""Smoke test for the ntn_ric extension module."""

import math
import tempfile
from pathlib import Path

import ntn_ric


def main() -> None:
    assert abs(ntn_ric.fspl_db(100.0, 2650.0) - 80.91270070061952) < 1e-9
    assert ntn_ric.rma_nlos_db(1000.0, 35.0, 1.5, 2650.0) >= ntn_ric.rma_los_db(1000.0, 35.0, 1.5, 2650.0)
    assert abs(ntn_ric.noise_floor_dbm(20e6, 7.0) + 93.98970004336019) < 1e-9

    cfg = ntn_ric.Config("[dqn]\nbaseline_days = 1\n")
    assert len(cfg.hash()) == 64
    try:
        ntn_ric.Config("no_such_key = 1")
    except ValueError:
        pass
    else:
        raise AssertionError("bad config accepted")

    net = ntn_ric.Network(7, cfg)
    assert net.n_cells == 10 and net.n_ues == 50
    assert net.cell_power_w(0, True) > net.cell_power_w(1, True)

    base = net.simulate("always_on", days=1)
    greedy = net.simulate("greedy_idle", days=1)
    assert math.isclose(base["daily_energy_wh"][0], 18355.2, abs_tol=0.05)
    assert greedy["daily_energy_wh"][0] < base["daily_energy_wh"][0]
    assert greedy == net.simulate("greedy_idle", days=1)

    q, curve = net.train(7, episodes=2)
    assert q.layer_sizes() == [42, 64, 64, 64, 10]
    assert curve.splitlines()[0] == "episode,mean_efficiency,epsilon,loss"
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "checkpoint.bin"
        q.save(str(path))
        assert ntn_ric.QNetwork.load(str(path)).to_bytes() == q.to_bytes()
        table = net.evaluate(["greedy_idle", f"dqn:{path}"], days=2)
    rows = [line.split(",")[0] for line in table.splitlines()[1:]]
    assert rows == ["always_on", "greedy_idle", "dqn"], rows
    print("ntn_ric", ntn_ric.__version__, "smoke test ok")


if __name__ == "__main__":
    main()
