import io
import json
import sys
import time

import pytest

from analysis.attribute import arch_attribute
from analysis.detect import detect_pairs
from bridge.host import ModelHost
from core.space import Context, FeatureSet, PerturbationSpace
from custom_bridge_client import BridgeClient, bridge_open
from errors import (
    BridgeConfigurationError,
    BridgeError,
    BridgeProtocolError,
    BridgeTimeoutError,
    EvaluationError,
)
from synth.functions import make_function
from tests.helpers import black_box

pytestmark = pytest.mark.slow


def test_sum_host_in_vector_mode(host_command, repo_root):
    space = PerturbationSpace.create([1.0] * 40, [-1.0] * 40)
    with bridge_open(host_command("--function", "sum"), space, cwd=repo_root) as bb:
        assert bb.evaluate(Context.full(40)) == 40.0
        assert bb.evaluate(Context.of(40, range(10))) == -20.0
        assert bb.call_count == 2


def test_mask_mode_uses_the_host_vectors(host_command, repo_root):
    space = PerturbationSpace.create([1.0] * 4, [0.0] * 4)
    command = host_command("--function", "sum", "--target", "2,2,2,2", "--baseline", "0,0,0,0")
    with bridge_open(command, space, mode="mask", cwd=repo_root) as bb:
        assert bb.eval_batch([Context.full(4), Context.of(4, [1])]) == [8.0, 2.0]


def test_declared_feature_count_must_match(host_command, repo_root):
    space = PerturbationSpace.create([1.0] * 40, [-1.0] * 40)
    with pytest.raises(BridgeConfigurationError):
        bridge_open(host_command("--function", "F1", "--declare-p", "5"), space, cwd=repo_root)


def test_host_that_exits_fails_the_handshake(repo_root):
    space = PerturbationSpace.create([1.0], [0.0])
    with pytest.raises(BridgeError):
        bridge_open([sys.executable, "-c", "pass"], space, cwd=repo_root, timeout=10)


def test_host_evaluation_error_carries_masks(host_command, repo_root):
    space = PerturbationSpace.create([1.0, 1.0], [0.0, 0.0])
    with bridge_open(host_command("--expr", "x1 / x2"), space, cwd=repo_root) as bb:
        assert bb.evaluate(Context.full(2)) == 1.0
        with pytest.raises(EvaluationError) as info:
            bb.evaluate(Context.of(2, [0]))
    assert info.value.mask == 0b01


def test_bridged_f1_matches_in_process_f1(host_command, repo_root):
    fn = make_function("F1")
    local = black_box(fn, fn.target, fn.baseline)
    with bridge_open(host_command("--function", "F1"), fn.space(), cwd=repo_root) as bridged:
        remote_ranking = detect_pairs(bridged)
        remote_phi = arch_attribute(bridged, FeatureSet(tuple(range(10))))
    local_ranking = detect_pairs(local)
    assert [(ps.i, ps.j, ps.strength) for ps in remote_ranking.pairs] == \
        [(ps.i, ps.j, ps.strength) for ps in local_ranking.pairs]
    assert remote_phi == arch_attribute(local, FeatureSet(tuple(range(10))))


def test_model_host_messages():
    host = ModelHost(lambda v: float(sum(v)), [1.0, 2.0], [0.0, 0.0])
    assert host.handle({"type": "eval", "id": 1, "inputs": [[1, 1]]})["type"] == "error"
    assert host.handle({"type": "hello", "p": 2, "mode": "mask"}) == {"type": "ready", "p": 2}
    assert host.handle({"type": "eval", "id": 2, "inputs": [[1, 0], [1, 1]]}) == \
        {"type": "result", "id": 2, "outputs": [1.0, 3.0]}
    assert host.handle({"type": "bogus", "id": 3})["type"] == "error"


MISBEHAVING_HOST = '''
import json
import io
import json
import sys
import time
import time

behaviour = sys.argv[1]
evals = 0
for line in sys.stdin:
    message = json.loads(line)
    if message["type"] == "hello":
        print(json.dumps({"type": "ready", "p": message["p"]}), flush=True)
        continue
    evals += 1
    outputs = [sum(row) for row in message["inputs"]]
    reply = {"type": "result", "id": message["id"], "outputs": outputs}
    if behaviour == "slow_first" and evals == 1:
        time.sleep(1.5)
    elif behaviour == "garbage":
        print("not json", flush=True)
        continue
    elif behaviour == "wrong_id":
        reply["id"] = message["id"] + 100
    elif behaviour == "short":
        reply["outputs"] = outputs[:-1]
    elif behaviour == "array":
        print("[1]", flush=True)
        continue
    print(json.dumps(reply), flush=True)
'''


@pytest.fixture
def misbehaving_host(tmp_path):
    script = tmp_path / "misbehaving_host.py"
    script.write_text(MISBEHAVING_HOST)

    def command(behaviour):
        return [sys.executable, str(script), behaviour]
    return command


def test_timeout_does_not_break_later_requests(misbehaving_host):
    client = BridgeClient(misbehaving_host("slow_first"), 2, timeout=0.5)
    try:
        with pytest.raises(BridgeTimeoutError):
            client.evaluate([[1.0, 1.0]])
        time.sleep(1.5)
        assert client.evaluate([[1.0, 2.0], [0.0, 3.0]]) == [3.0, 3.0]
        assert client.evaluate([[4.0, 4.0]]) == [8.0]
    finally:
        client.close()


def test_timeout_surfaces_through_the_black_box(misbehaving_host):
    space = PerturbationSpace.create([1.0, 1.0], [0.0, 0.0])
    with bridge_open(misbehaving_host("slow_first"), space, timeout=0.5) as bb:
        with pytest.raises(BridgeTimeoutError) as info:
            bb.evaluate(Context.full(2))
        assert info.value.mask == 0b11
        time.sleep(1.5)
        assert bb.evaluate(Context.full(2)) == 2.0


@pytest.mark.parametrize("behaviour", ["garbage", "wrong_id", "short", "array"])
def test_protocol_violations_are_reported(misbehaving_host, behaviour):
    client = BridgeClient(misbehaving_host(behaviour), 2, timeout=10)
    try:
        with pytest.raises(BridgeProtocolError):
            client.evaluate([[1.0, 1.0], [0.0, 1.0]])
    finally:
        client.close()


def test_host_answers_non_object_requests_with_an_error(capsys):
    host = ModelHost(lambda v: float(sum(v)), [1.0, 2.0], [0.0, 0.0])
    host.serve(io.StringIO('[1]\n{"type": "hello", "p": 2}\n'))
    replies = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert replies[0]["type"] == "error"
    assert replies[0]["id"] is None
    assert replies[1] == {"type": "ready", "p": 2}
