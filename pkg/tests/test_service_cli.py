import io
import json
import socket
import threading

import pytest

from lppo.cli import main
from lppo.config import RunConfig, dump_config
from lppo.dataset import Pool, save_dataset
from lppo.service import SchedulerService, make_server, parse_address

from conftest import chain_problem


@pytest.fixture
def service(tmp_path):
    problems = [chain_problem("e1", [0, 1, 2]), chain_problem("s1", [1, 1], eligible=False)]
    return SchedulerService(problems, RunConfig(), tmp_path / "snaps")


def ask(svc, **req):
    return json.loads(svc.handle_line(json.dumps(req)))


def test_report_dispositions(service):
    assert ask(service, op="report", id="e1", pass_rate=0.0, epoch=1)["disposition"] == "queue_prefix"
    assert ask(service, op="report", id="s1", pass_rate=0.0, epoch=1)["disposition"] == "skip"
    r = ask(service, op="report", id="s1", pass_rate=1.0, epoch=2)
    assert r["disposition"] == "retire" and r["weight"] > 1.0
    assert "s1" in service.sched.state.retired_ids and service.tracker["s1"].excluded


def test_first_report_weight_is_one(service):
    assert ask(service, op="report", id="x", pass_rate=0.4, epoch=1, pool="standard")["weight"] == 1.0
    assert ask(service, op="weight", id="x") == {"id": "x", "weight": 1.0}


def test_prefix_requests(service):
    r = ask(service, op="prefix", id="e1")
    assert set(r) == {"id", "prefix_text", "prefix_len", "lambda"} and r["id"] == "e1"
    assert r["prefix_text"].endswith("\n") or r["prefix_len"] == 0
    assert "no expert solution" in ask(service, op="prefix", id="s1")["error"]


@pytest.mark.parametrize("line, needle", [
    ('{"op": "fly"}', "unknown op"),
    ("not json", "unparseable"),
    ("[1, 2]", "JSON object"),
    ('{"op": "report", "id": "e1"}', "pass_rate"),
    ('{"op": "report", "id": "e1", "pass_rate": 2, "epoch": 1}', "[0, 1]"),
    ('{"op": "weight", "id": "ghost"}', "ghost"),
])
def test_errors_do_not_end_session(service, line, needle):
    assert needle in json.loads(service.handle_line(line))["error"]
    assert "weight" in ask(service, op="report", id="e1", pass_rate=0.5, epoch=1)


def test_snapshot_round_trip(service):
    ask(service, op="report", id="e1", pass_rate=0.5, epoch=1)
    path = ask(service, op="snapshot")["path"]
    assert path.endswith("tracker-0001.jsonl")
    assert json.loads(open(path).readline())["id"] == "e1"


def test_serve_stream(service):
    out = io.StringIO()
    service.serve_stream(io.StringIO('{"op": "weight", "id": "nobody"}\n\n{"op": "snapshot"}\n'), out)
    lines = out.getvalue().splitlines()
    assert len(lines) == 2 and "error" in json.loads(lines[0])


def test_parse_address():
    assert parse_address("localhost:9000") == ("localhost", 9000)
    assert parse_address(":9000") == ("127.0.0.1", 9000)
    with pytest.raises(ValueError):
        parse_address("nowhere")


def test_tcp_server_single_client(service):
    server = make_server(service, "127.0.0.1:0")
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        addr = server.server_address
        with socket.create_connection(addr, timeout=5) as a:
            fa = a.makefile("rw")
            fa.write('{"op": "report", "id": "e1", "pass_rate": 0.5, "epoch": 1}\n')
            fa.flush()
            assert json.loads(fa.readline())["disposition"] == "use"
            with socket.create_connection(addr, timeout=5) as b:
                assert "busy" in json.loads(b.makefile("r").readline())["error"]
    finally:
        server.shutdown()
        server.server_close()


@pytest.fixture
def cfg_file(tmp_path):
    cfg = RunConfig(n_problems=8, steps_range=[2, 3], branching=3, group_size=4, batch_size=4,
                    mini_batch=2, steps=4, learning_rate=5.0)
    path = tmp_path / "cfg.txt"
    path.write_text(dump_config(cfg))
    return path


def test_cli_train_and_report(tmp_path, cfg_file, capsys):
    assert main(["train", "--config", str(cfg_file), "--out", str(tmp_path / "run")]) == 0
    assert main(["report", "--in", str(tmp_path / "run" / "metrics.jsonl"), "--out", str(tmp_path / "r.csv")]) == 0
    assert (tmp_path / "r.csv").read_text() == (tmp_path / "run" / "metrics.csv").read_text()
    assert "4 rows" in capsys.readouterr().out


def test_cli_ablate(tmp_path, cfg_file, capsys):
    out = tmp_path / "abl.csv"
    assert main(["ablate", "--config", str(cfg_file), "--arms", "lppo,pg_only", "--seeds", "0-1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[1].startswith("arm,") and len(lines) == 4


def test_cli_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("alpha = 7\n")
    assert main(["train", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert "alpha" in capsys.readouterr().err
    assert main(["train", "--config", str(tmp_path / "missing.txt")]) == 2


def test_cli_serve_stdin(tmp_path, monkeypatch, capsys):
    ds = tmp_path / "d.jsonl"
    save_dataset([chain_problem("e1", [0, 1])], ds)
    monkeypatch.setattr("sys.stdin", io.StringIO('{"op": "prefix", "id": "e1"}\n'))
    assert main(["serve", "--dataset", str(ds), "--snapshot-dir", str(tmp_path)]) == 0
    assert json.loads(capsys.readouterr().out)["id"] == "e1"
