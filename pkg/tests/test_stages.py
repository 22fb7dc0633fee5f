from __future__ import annotations

import pytest

from candor.domain import StageCode
from candor.errors import DomainValidationError, FixtureExhausted
from candor.stages import StageRequest, build_stage_prompt, classify_stage, extract_stages_field

from conftest import gateway_for


class TestStagePrompt:
    def test_contains_rules_and_definitions(self, templates):
        req = StageRequest("How could this happen?", 1, False)
        prompt = build_stage_prompt(req, templates)
        assert "Maximum two stages allowed" in prompt
        assert "START and END cannot exist together" in prompt
        assert "Information Seeking [IS]" in prompt
        assert prompt.rstrip().endswith("How could this happen?")

    def test_deterministic(self, templates):
        req = StageRequest("Same message.", 2, False)
        assert build_stage_prompt(req, templates) == build_stage_prompt(req, templates)

    def test_empty_message_rejected(self):
        with pytest.raises(DomainValidationError):
            StageRequest("   ", 1, False)

    def test_first_flag_must_agree_with_index(self):
        with pytest.raises(DomainValidationError):
            StageRequest("hi", 1, True)
        with pytest.raises(DomainValidationError):
            StageRequest("hi", 0, False)


class TestStagesFieldExtraction:
    def test_bare_string(self):
        assert extract_stages_field(" IS,EE \n") == "IS,EE"

    def test_json_object(self):
        assert extract_stages_field('{"stages": "EE,TA"}') == "EE,TA"

    def test_json_string(self):
        assert extract_stages_field('"R"') == "R"


class TestClassify:
    def test_valid_first_response(self, templates):
        gateway = gateway_for([("chat", "EE,TA")])
        req = StageRequest("How could you do this to me? I'm going to sue you.", 2, False)
        labels = classify_stage(req, gateway, templates)
        assert labels.codes == (StageCode.EE, StageCode.TA)
        assert len(gateway.captured) == 1

    def test_json_wrapped_response(self, templates):
        gateway = gateway_for([("chat", '{"stages": "IS"}')])
        labels = classify_stage(StageRequest("what happened?", 1, False), gateway, templates)
        assert labels.codes == (StageCode.IS,)

    def test_repair_recovers(self, templates):
        gateway = gateway_for([("chat", "IS,EE,TA"), ("chat", "IS,EE")])
        labels = classify_stage(StageRequest("why? how?", 1, False), gateway, templates)
        assert labels.codes == (StageCode.IS, StageCode.EE)
        assert len(gateway.captured) == 2
        assert "was invalid" in gateway.captured[1]["prompt"]

    def test_fallback_after_two_failures(self, templates):
        gateway = gateway_for([("chat", "IS,EE,TA"), ("chat", "IS,EE,TA")])
        labels = classify_stage(StageRequest("why? how?", 1, False), gateway, templates)
        assert labels.codes == (StageCode.IS,)
        assert len(gateway.captured) == 2

    def test_fallback_not_taken_after_single_failure(self, templates):
        gateway = gateway_for([("chat", "garbage"), ("chat", "TA")])
        labels = classify_stage(StageRequest("who did this?", 3, False), gateway, templates)
        assert labels.codes == (StageCode.TA,)

    def test_start_accepted_for_first_message(self, templates):
        gateway = gateway_for([("chat", "START")])
        labels = classify_stage(StageRequest("hello there", 0, True), gateway, templates)
        assert labels.codes == (StageCode.START,)

    def test_start_rejected_later_then_fallback(self, templates):
        gateway = gateway_for([("chat", "START"), ("chat", "START")])
        labels = classify_stage(StageRequest("hello again", 4, False), gateway, templates)
        assert labels.codes == (StageCode.IS,)

    def test_provider_errors_propagate(self, templates):
        gateway = gateway_for([])
        with pytest.raises(FixtureExhausted):
            classify_stage(StageRequest("hi", 1, False), gateway, templates)

    def test_fuzz_sample_always_legal(self, templates):
        import random

        rng = random.Random(7)
        pool = ["IS", "EE", "TA", "R", "START", "END", "", "??", "IS,EE,TA,R",
                '{"stages": 3}', "start", " en d", "[1,2]", "null"]
        for _ in range(200):
            raws = [
                "".join(rng.choice("ISETAR,{}\" ") for _ in range(rng.randrange(0, 12)))
                if rng.random() < 0.5
                else rng.choice(pool)
                for _ in range(2)
            ]
            gateway = gateway_for([("chat", raws[0]), ("chat", raws[1])])
            labels = classify_stage(StageRequest("msg", 1, False), gateway, templates)
            assert 1 <= len(labels.codes) <= 2
            assert StageCode.START not in labels.codes
