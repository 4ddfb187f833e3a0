import json
import random
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from coverplan.alignment import (
    AdviceItem,
    AdviceRule,
    AlignmentScore,
    EvaluatorConfig,
    RULE_KINDS,
    external_evaluate,
    g_eval,
    score_advice,
)
from coverplan.domain import DistrictAllocation
from coverplan.errors import ConfigurationError, EvaluatorError, InputError, StructuralError

ALLOC_A = DistrictAllocation({1: 3, 2: 2, 3: 0, 4: 1})
ALLOC_B = DistrictAllocation({1: 0, 2: 0, 3: 4, 4: 2})
ALLOC_C = DistrictAllocation({1: 1, 2: 1, 3: 1, 4: 1})

# hand-derived per-rule scores for the 20-sentence fixture
EXPECTED_A = {
    "a01": 1.0, "a02": 1.0, "a03": 0.0, "a04": 1 / 3, "a05": 1.0,
    "a06": 1.0, "a07": 1.0, "a08": 1.0, "a09": 0.0, "a10": 1.0,
    "a11": 0.0, "a12": 0.0, "a13": 1.0, "a14": 1.0, "a15": 0.75,
    "a16": 0.625, "a17": 1.0, "a18": 1.0, "a19": 0.5, "a20": 1.0,
}
EXPECTED_B = {
    "a01": 0.0, "a02": 0.0, "a03": 1.0, "a04": 1.0, "a05": 1.0,
    "a06": 0.0, "a07": 0.0, "a08": 0.5, "a09": 1.0, "a10": 0.0,
    "a11": 0.0, "a12": 1.0, "a13": 0.0, "a14": 0.0, "a15": 0.5,
    "a16": 0.5, "a17": 0.0, "a18": 0.0, "a19": 1.0, "a20": 1.0,
}
EXPECTED_C = {
    "a01": 0.5, "a02": 1.0, "a03": 1 / 3, "a04": 1.0, "a05": 1.0,
    "a06": 0.0, "a07": 0.5, "a08": 1.0, "a09": 1.0, "a10": 1.0,
    "a11": 0.0, "a12": 0.0, "a13": 0.5, "a14": 1.0, "a15": 1.0,
    "a16": 0.5, "a17": 0.5, "a18": 0.5, "a19": 0.5, "a20": 1.0,
}


def expected_total(expected):
    return sum(expected[i] for i in sorted(expected)) / len(expected)


@pytest.mark.parametrize(
    "alloc,expected",
    [(ALLOC_A, EXPECTED_A), (ALLOC_B, EXPECTED_B), (ALLOC_C, EXPECTED_C)],
    ids=["mixed", "south-heavy", "uniform"],
)
def test_fixture_scores_match_hand_computation(advice20, alloc, expected):
    score = g_eval(advice20, alloc)
    assert score.per_advice == expected
    assert score.total == expected_total(expected)


def test_g_eval_order_invariant(advice20):
    rng = random.Random(3)
    shuffled = list(advice20)
    rng.shuffle(shuffled)
    assert g_eval(shuffled, ALLOC_A).total == g_eval(advice20, ALLOC_A).total


def test_g_eval_empty_and_duplicates(advice20):
    with pytest.raises(InputError):
        g_eval((), ALLOC_A)
    with pytest.raises(InputError):
        g_eval((advice20[0], advice20[0]), ALLOC_A)


def test_g_eval_bounds_random(advice20):
    rng = random.Random(17)
    for _ in range(200):
        alloc = DistrictAllocation({j: rng.randint(0, 6) for j in (1, 2, 3, 4)})
        score = g_eval(advice20, alloc)
        assert 0.0 <= score.total <= 1.0
        assert all(0.0 <= s <= 1.0 for s in score.per_advice.values())


def test_rule_unknown_district_raises(advice20):
    with pytest.raises(StructuralError):
        score_advice(advice20[0].rule, DistrictAllocation({7: 1}))


def test_rule_kind_and_arity_validation():
    assert len(RULE_KINDS) == 8
    with pytest.raises(InputError):
        AdviceRule("sometimes_maybe", (1,), (1,))
    with pytest.raises(InputError):
        AdviceRule("min_count", (1, 2), (1,))
    with pytest.raises(InputError):
        AdviceRule("presence", (1,), (1,))
    with pytest.raises(InputError):
        AdviceRule("prefer_district_over", (1,), ())
    with pytest.raises(InputError):
        AdviceRule("min_count", (1,), (-1,))


def test_exact_count_zero_threshold():
    rule = AdviceRule("exact_count", (1,), (0,))
    assert score_advice(rule, DistrictAllocation({1: 0})) == 1.0
    assert score_advice(rule, DistrictAllocation({1: 2})) == 0.0


def test_at_least_fraction_empty_allocation():
    rule = AdviceRule("at_least_fraction", (1,), (0.5,))
    assert score_advice(rule, DistrictAllocation({1: 0, 2: 0})) == 0.0


def test_prefer_district_both_zero():
    rule = AdviceRule("prefer_district_over", (1, 2), ())
    assert score_advice(rule, DistrictAllocation({1: 0, 2: 0})) == 0.5


def test_advice_item_roundtrip(advice20):
    for item in advice20:
        assert AdviceItem.from_dict(json.loads(json.dumps(item.to_dict()))) == item


def test_alignment_score_roundtrip(advice20):
    score = g_eval(advice20, ALLOC_C)
    clone = AlignmentScore.from_dict(json.loads(json.dumps(score.to_dict())))
    assert clone == score


# --- external evaluator hook ----------------------------------------------------


def _script_evaluator(tmp_path, body: str) -> EvaluatorConfig:
    script = tmp_path / "eval.py"
    script.write_text(body)
    return EvaluatorConfig(kind="command", target=(sys.executable, str(script)))


def test_external_command_evaluator(tmp_path):
    config = _script_evaluator(
        tmp_path,
        "import json, sys\n"
        "payload = json.load(sys.stdin)\n"
        "total = sum(payload['allocation'].values())\n"
        "print(json.dumps({'score': min(1.0, total / 10)}))\n",
    )
    assert external_evaluate(config, DistrictAllocation({1: 2, 2: 3})) == 0.5


def test_external_command_evaluator_bad_payloads(tmp_path):
    not_json = _script_evaluator(tmp_path, "print('score five')\n")
    with pytest.raises(EvaluatorError):
        external_evaluate(not_json, ALLOC_C)
    out_of_range = _script_evaluator(tmp_path, "print('{\"score\": 1.5}')\n")
    with pytest.raises(EvaluatorError):
        external_evaluate(out_of_range, ALLOC_C)
    crashing = _script_evaluator(tmp_path, "import sys\nsys.exit(3)\n")
    with pytest.raises(EvaluatorError):
        external_evaluate(crashing, ALLOC_C)


def test_external_evaluator_requires_config():
    with pytest.raises(ConfigurationError):
        external_evaluate(None, ALLOC_C)


def test_evaluator_config_validation():
    with pytest.raises(ConfigurationError):
        EvaluatorConfig(kind="carrier-pigeon", target="x")


class _ScoreHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length))
        total = sum(payload["allocation"].values())
        body = json.dumps({"score": min(1.0, total / 8)}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


def test_external_http_evaluator():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _ScoreHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        url = f"http://127.0.0.1:{server.server_address[1]}/score"
        config = EvaluatorConfig(kind="http", target=url)
        assert external_evaluate(config, DistrictAllocation({1: 2, 2: 2})) == 0.5
    finally:
        server.shutdown()
        server.server_close()
