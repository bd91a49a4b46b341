from __future__ import annotations

import json

from polytrs.qi import parse_assignment
from polytrs.report import build_report, program_digest

from .conftest import CORPUS


def test_digest_stable(corpus):
    prog = corpus["append.trs"]
    assert program_digest(prog) == program_digest(corpus["append.trs"])
    assert program_digest(prog) != program_digest(corpus["add.trs"])


def test_report_json_deterministic(corpus):
    prog = corpus["mult.trs"]
    asg = parse_assignment((CORPUS / "mult.qi").read_text(), prog)
    a = build_report(prog, asg, sizes=range(1, 5)).to_json()
    b = build_report(prog, asg, sizes=range(1, 5)).to_json()
    assert a == b
    json.loads(a)  # well-formed


def test_verdicts_recomputable_from_stages(corpus):
    prog = corpus["mult.trs"]
    asg = parse_assignment((CORPUS / "mult.qi").read_text(), prog)
    report = build_report(prog, asg, sizes=range(1, 5))
    data = report.data
    stages = data["stages"]
    ppo_pass = stages["ordering"]["ppo"]["overall"]
    qi_valid = stages["qi"]["overall"] == "valid"
    assert (data["verdicts"]["p_criterion"] == "pass") == (ppo_pass and qi_valid)
    blind_pass = (
        data["verdicts"]["p_criterion"] == "pass"
        and stages["qi"]["uniform"]
        and stages["linearity"]["overall"]
    )
    assert (data["verdicts"]["blind_p"] == "pass") == blind_pass
    extended_pass = stages["extended"]["overall"] == "certified-p"
    assert (data["verdicts"]["extended_p"] == "pass") == extended_pass


def test_mult_report_passes_everything(corpus):
    prog = corpus["mult.trs"]
    asg = parse_assignment((CORPUS / "mult.qi").read_text(), prog)
    report = build_report(prog, asg, sizes=range(1, 5))
    assert report.verdicts == {
        "p_criterion": "pass",
        "blind_p": "pass",
        "extended_p": "pass",
    }
    assert report.exit_code() == 0


def test_running_report_fails_ppo_unknown_overall(corpus):
    prog = corpus["running.trs"]
    report = build_report(prog, sizes=range(1, 8))
    assert report.verdicts["p_criterion"] == "fail"  # no strict order exists
    assert report.data["stages"]["ordering"]["eppo"]["overall"] is True
    assert report.data["stages"]["extended"]["overall"] == "empirically-consistent"
    assert report.exit_code() in (1, 2)


def test_reverse_report_all_fail(corpus):
    prog = corpus["reverse.trs"]
    report = build_report(prog, sizes=range(1, 5), with_measurements=False)
    assert report.verdicts["p_criterion"] == "fail"
    assert report.verdicts["extended_p"] == "fail"
    assert report.exit_code() == 1
