import json
import sys
from pathlib import Path
from types import SimpleNamespace

import pytest

sys.path.insert(0, str(Path(__file__).parent / "golden"))

from runner import HERE, cases, run_case  # noqa: E402

from varinv.cli import InputError, main, parse_problem, run  # noqa: E402

CASES = list(cases())


def args(**kw):
    base = dict(case="auto", seed=None, samples=None, quad_order=None, ansatz_degree=None, format="text")
    base.update(kw)
    return SimpleNamespace(**base)


@pytest.mark.parametrize("name,command,problem,flags", CASES, ids=[c[0] for c in CASES])
def test_golden(name, command, problem, flags):
    expected = (HERE / "expected" / f"{name}.out").read_bytes()
    assert run_case(command, problem, flags) == expected


def test_el_transcendental_example_text():
    code, out = run("el", "n = 1\nm = 1\nf = exp(w1)/w1[1]\n", args())
    assert code == 0 and out == "e1 = 2*exp(w1)*(1 - w1[1,1]/w1[1]^2)/w1[1]\n"


def test_exit_codes():
    assert run("helmholtz", "n=1\nm=1\ne1 = w1[1]\n", args())[0] == 2
    assert run("solve", "n=2\nm=1\nF11[1,1] = w1[2]\n", args())[0] == 2
    assert run("solve", "n=1\nm=1\nF11[1,1] = exp(w1[1])\n", args())[0] == 3
    assert run("el", "n=1\nm=1\nf = w1 +\n", args())[0] == 4
    assert run("el", "n=1\nm=1\ng = w1\n", args())[0] == 4
    assert run("el", "m=1\nf = w1\n", args())[0] == 4
    assert run("solve", "n=2\nm=3\ne1 = 0\n", args())[0] == 4


def test_json_schema():
    code, out = run("solve", "n=1\nm=2\ne1 = w2[1]\ne2 = -w1[1]\n", args(format="json"))
    doc = json.loads(out)
    assert code == 0
    assert set(doc) == {"command", "verdict", "expressions", "conditions", "diagnostics"}
    assert doc["command"] == "solve" and "f" in doc["expressions"]
    assert all(set(c) == {"id", "status"} for c in doc["conditions"])
    assert doc["diagnostics"]["residual_contract"] == "Zero"


def test_errors_name_offending_token_or_condition():
    _, out = run("el", "n=1\nm=1\nf = w1 + foo\n", args())
    assert "foo" in out
    _, out = run("solve", "n=2\nm=1\nF11[1,1] = w1[2]\n", args())
    assert "(3.2)[1,1,2]" in out


def test_problem_parser():
    prob = parse_problem("# comment\nn = 2\nm = 2  # trailing\nF12[1,2] = x1\nc1[2] = x2\nc2 = 1\nseed = 4\n")
    assert (prob.n, prob.m, prob.seed) == (2, 2, 4)
    assert (1, 2, 1, 2) in prob.F2 and (1, 2) in prob.c1 and 2 in prob.c0
    with pytest.raises(InputError):
        parse_problem("n = 1\nm = 1\nF11[1,1] = 1\nF11[1,1] = 2\n")
    with pytest.raises(InputError):
        parse_problem("n = 1\nm = 1\nF13[1,1] = 1\n")
    with pytest.raises(InputError):
        parse_problem("n = x\nm = 1\n")


def test_flags_override_header(tmp_path):
    p = tmp_path / "z.vip"
    p.write_text("n = 1\nm = 1\nseed = 1\nf = w1 - w1[1]\n")
    a = run("zero-test", p.read_text(), args(seed=2))[1]
    b = run("zero-test", p.read_text(), args(seed=2))[1]
    assert a == b


def test_main_reads_file(tmp_path, capsys):
    p = tmp_path / "p.vip"
    p.write_text("n = 1\nm = 1\nf = w1*w1[1,1]\n")
    assert main(["reduce", str(p)]) == 0
    assert "final = -w1[1]^2" in capsys.readouterr().out
    assert main(["reduce", str(tmp_path / "missing.vip")]) == 4


def test_tonti_quad_order_flag():
    text = (HERE / "problems" / "tonti_transcendental.vip").read_text()
    code, out = run("tonti", text, args(quad_order=16))
    assert code == 0 and "quadrature order = 16" in out
