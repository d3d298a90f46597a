import csv

import pytest

from deadline_offload import cli

TABLE1 = """\
N = 3
p_u = 0.7
mu = 0.7
C_o = 1.0
C_p = 3.0
p0 = 0.5
arrival = "uniform"
T = {T}
initial_state = [0, 0, 3]
episodes = {episodes}
seed = {seed}
"""


def write_config(tmp_path, name="cfg.toml", T=60, episodes=40, seed=123, body=None):
    path = tmp_path / name
    path.write_text(body if body is not None else
                    TABLE1.format(T=T, episodes=episodes, seed=seed))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_load_config_uniform(tmp_path):
    cfg = cli.load_config(write_config(tmp_path))
    assert cfg.params.N == 3
    assert cfg.params.arrival == (0.5, 1 / 6, 1 / 6, 1 / 6)
    assert cfg.T == 60 and cfg.initial_state == (0, 0, 3)


def test_load_config_explicit_arrival(tmp_path):
    body = TABLE1.format(T=10, episodes=5, seed=1).replace(
        'p0 = 0.5\narrival = "uniform"',
        "arrival = [0.5, 0.1666666667, 0.1666666667, 0.1666666666]")
    cfg = cli.load_config(write_config(tmp_path, body=body))
    assert sum(cfg.params.arrival) == pytest.approx(1.0, abs=1e-15)


def test_config_rejections(tmp_path):
    bad_costs = TABLE1.format(T=10, episodes=5, seed=1).replace("C_p = 3.0", "C_p = 0.5")
    assert cli.main(["solve", "--config", write_config(tmp_path, body=bad_costs)]) == 2

    bad_probs = TABLE1.format(T=10, episodes=5, seed=1).replace(
        'p0 = 0.5\narrival = "uniform"', "arrival = [0.5, 0.3, 0.3, 0.3]")
    assert cli.main(["solve", "--config", write_config(tmp_path, body=bad_probs)]) == 2

    missing = TABLE1.format(T=10, episodes=5, seed=1).replace("mu = 0.7\n", "")
    assert cli.main(["solve", "--config", write_config(tmp_path, body=missing)]) == 2

    assert cli.main(["solve", "--config", str(tmp_path / "absent.toml")]) == 2


def test_solve_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    rc = cli.main(["solve", "--config", write_config(tmp_path, T=40),
                   "--out", str(out)])
    assert rc == 0
    rows = read_csv(out / "solve.csv")
    assert rows[0] == ["total_cost", "average_cost", "L_star", "L_g", "L_r"]
    total, average, l_star, l_g, l_r = rows[1]
    assert float(total) > 0
    assert float(average) == pytest.approx(float(total) / 40, rel=1e-9)
    assert int(l_star) == int(l_g) + int(l_r)
    assert "optimal offload count" in capsys.readouterr().out


def test_policy_map_slice(tmp_path):
    out = tmp_path / "out"
    rc = cli.main(["policy-map", "--config", write_config(tmp_path, T=200),
                   "--out", str(out), "--slice", "n3=1", "--box-max", "5"])
    assert rc == 0
    rows = read_csv(out / "policy_map.csv")
    assert rows[0] == ["n_1", "n_2", "n_3", "T", "L_star", "offloading_flag"]
    body = rows[1:]
    assert len(body) == 36
    nonoff = [tuple(map(int, r[:3])) for r in body if r[5] == "0"]
    assert nonoff == [(0, 0, 1)]
    for r in body:
        assert r[2] == "1" and r[3] == "200"


def test_policy_map_base_slice(tmp_path):
    out = tmp_path / "out"
    rc = cli.main(["policy-map", "--config", write_config(tmp_path, T=200),
                   "--out", str(out), "--slice", "n3=0", "--box-max", "5"])
    assert rc == 0
    body = read_csv(out / "policy_map.csv")[1:]
    nonoff = sorted(tuple(map(int, r[:3])) for r in body if r[5] == "0")
    assert nonoff == [(0, 0, 0), (0, 1, 0)]


def test_policy_map_empty_box(tmp_path):
    out = tmp_path / "out"
    rc = cli.main(["policy-map", "--config", write_config(tmp_path, T=30),
                   "--out", str(out), "--box-max", "-1"])
    assert rc == 0
    assert read_csv(out / "policy_map.csv") == [
        ["n_1", "n_2", "n_3", "T", "L_star", "offloading_flag"]]


def test_policy_map_budget(tmp_path):
    rc = cli.main(["policy-map", "--config", write_config(tmp_path, T=10),
                   "--out", str(tmp_path / "o"), "--box-max", "100"])
    assert rc == 2


def test_adjacent_scan(tmp_path):
    body = TABLE1.format(T=300, episodes=5, seed=1).replace(
        "N = 3", "N = 5").replace("initial_state = [0, 0, 3]",
                                  "initial_state = [0, 1, 1, 0, 2]").replace(
        "p_u = 0.7", "p_u = 0.5").replace("mu = 0.7", "mu = 0.5")
    cfg = write_config(tmp_path, body=body)
    out = tmp_path / "out"
    rc = cli.main(["adjacent-scan", "--config", cfg, "--out", str(out),
                   "--chain", "0,0,0,0,1;0,0,0,0,2;0,0,1,0,2;0,1,1,0,2"])
    assert rc == 0
    rows = read_csv(out / "adjacent_scan.csv")
    assert rows[0] == ["state_index", "state", "L", "forced_cost", "is_argmin"]
    argmins = {}
    for idx, state, L, cost, best in rows[1:]:
        if best == "1":
            argmins[int(idx)] = int(L)
    assert argmins == {1: 0, 2: 0, 3: 1, 4: 2}


def test_adjacent_scan_single_state(tmp_path):
    out = tmp_path / "out"
    rc = cli.main(["adjacent-scan", "--config", write_config(tmp_path, T=50),
                   "--out", str(out), "--chain", "0,0,2"])
    assert rc == 0
    rows = read_csv(out / "adjacent_scan.csv")[1:]
    assert [r[0] for r in rows] == ["1", "1", "1"]  # one curve, L = 0..2


def test_adjacent_scan_rejects_nonadjacent(tmp_path, capsys):
    rc = cli.main(["adjacent-scan", "--config", write_config(tmp_path, T=20),
                   "--out", str(tmp_path / "o"), "--chain", "0,1,0;0,1,1"])
    assert rc == 2
    assert "not adjacent" in capsys.readouterr().err


def test_memory_report(tmp_path):
    out = tmp_path / "out"
    rc = cli.main(["memory-report", "--config", write_config(tmp_path),
                   "--out", str(out), "--horizon", "14"])
    assert rc == 0
    rows = read_csv(out / "memory.csv")
    assert rows[0] == ["T", "naive_entries", "lean_entries"]
    assert len(rows) == 15
    for t, naive, lean in rows[1:]:
        assert int(lean) <= int(naive)
    assert rows[1][1] == rows[1][2]  # no compression opportunity at T = 1


def test_simulate_deterministic(tmp_path):
    cfg = write_config(tmp_path, T=30, episodes=25, seed=99)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["simulate", "--config", cfg, "--out", str(out_a)]) == 0
    assert cli.main(["simulate", "--config", cfg, "--out", str(out_b)]) == 0
    for name in ("episodes.csv", "summary.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
    header = read_csv(out_a / "episodes.csv")[0]
    assert header == ["episode", "total_cost", "offloaded", "expired", "processed"]


def test_simulate_rejects_zero_episodes(tmp_path):
    rc = cli.main(["simulate", "--config", write_config(tmp_path, episodes=0),
                   "--out", str(tmp_path / "o")])
    assert rc == 2


def test_verify_pass_and_report(tmp_path):
    out = tmp_path / "out"
    rc = cli.main(["verify", "--out", str(out), "--max-sum", "3", "--max-n", "3",
                   "--max-t", "4", "--samples", "25"])
    assert rc == 0
    rows = read_csv(out / "verify.csv")
    assert rows[0] == ["property", "instances", "violations", "status"]
    assert len(rows) == 10
    assert all(r[3] == "pass" for r in rows[1:])


def test_verify_negative_control(tmp_path):
    rc = cli.main(["verify", "--out", str(tmp_path / "o"), "--max-sum", "3",
                   "--max-n", "3", "--max-t", "4", "--samples", "25",
                   "--property", "proposition_1", "--corrupt-g2m"])
    assert rc == 1


def test_verify_unknown_property(tmp_path):
    rc = cli.main(["verify", "--out", str(tmp_path / "o"), "--property", "lemma_42"])
    assert rc == 2
