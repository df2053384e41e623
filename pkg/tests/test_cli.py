import json

import pytest

from hscale.cli import main, read_config
from hscale.errors import ParseError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_indices_power(capsys):
    code, out, _ = run(capsys, "indices", "--phi", "pow 1.5")
    assert code == 0
    assert out.splitlines()[0] == "sigma0=1.5 sigma1=1.5"


def test_indices_power_log(capsys):
    _, out, _ = run(capsys, "indices", "--phi", "* (pow 1) (logpow 1)")
    assert out.splitlines()[0] == "sigma0=1 sigma1=1"


@pytest.mark.parametrize("phi", ["pow", "* (pow 1)", "pow (1", "bogus 2"])
def test_malformed_expression_exit_2(capsys, phi):
    code, out, err = run(capsys, "indices", "--phi", phi)
    assert code == 2 and out == "" and "parse error" in err


def test_or_certify(capsys):
    _, out, _ = run(capsys, "or-certify", "--phi", "pow 1")
    assert out == "a=2 c=2 window=[1, 1e+06] grid=256\n"


def test_embed_verdicts(capsys):
    assert run(capsys, "embed", "--phi1", "pow 1", "--phi2", "pow 2")[1].startswith("COMPACT ")
    assert run(capsys, "embed", "--phi1", "pow 1",
               "--phi2", "pow 1")[1].startswith("CONTINUOUS_DENSE ")
    _, out, _ = run(capsys, "embed", "--phi", "* (pow 0.5) (logpow 1)", "--q", "0")
    assert out == "EMBEDS confidence=Exact integral=1.18988397034\n"


def test_cq_embed_fails(capsys):
    assert run(capsys, "cq-embed", "--phi", "pow 0.5")[1] == "FAILS confidence=Exact\n"


def test_interp_verify_default_setups(capsys):
    code, out, _ = run(capsys, "interp-verify", "--N", "64")
    rows = out.splitlines()
    assert code == 0 and rows[0] == "test,setup,deviation,tolerance,pass"
    assert len(rows) == 4 and all(r.endswith(",true") for r in rows[1:])


def test_interp_verify_empty_section_warns(capsys, tmp_path):
    sec = tmp_path / "zero.jsonl"
    sec.write_text('{"k": [0], "re": [0.0], "im": [0.0]}\n')
    code, out, err = run(capsys, "interp-verify", "--section", str(sec), "--setup", "-1 1 pow 0.5")
    assert code == 0
    assert out.splitlines()[1] == "prop1_identity,-1 1 pow 0.5,0.000000e+00,1.0e-12,true"
    assert "warning" in err


def test_interp_verify_invalid_setup_exit_3(capsys):
    assert run(capsys, "interp-verify", "--setup", "2 1 pow 1")[0] == 3


def test_norm_csv(capsys, tmp_path):
    sec = tmp_path / "mode.jsonl"
    sec.write_text("".join(f'{{"k": [{k}], "re": [{1.0 if k == 2 else 0.0}], "im": [0.0]}}\n'
                           for k in range(-2, 3)))
    _, out, _ = run(capsys, "norm", "--section", str(sec), "--phi", "pow 2")
    assert out == "phi,N,value,tail_flag\npow 2,2,5,true\n"


def test_solve_json_and_incompatibility(capsys, system_path):
    code, out, err = run(capsys, "solve", "--system", str(system_path("ddx")), "--mode", "0")
    assert code == 4
    assert json.loads(out)["max_pairing"] == 1.0 and "1" in err
    code, out, _ = run(capsys, "solve", "--system", str(system_path("ddx")), "--mode", "1")
    doc = json.loads(out)
    assert code == 0 and doc["solvable"] and doc["index"] == 0


def test_solve_with_rhs_file(capsys, system_path, tmp_path):
    f = tmp_path / "f.jsonl"
    f.write_text("".join(f'{{"k": [{k}], "re": [1.0], "im": [0.0]}}\n' for k in range(-3, 4)))
    code, out, _ = run(capsys, "solve", "--system", str(system_path("helmholtz1")), "--f", str(f))
    doc = json.loads(out)
    assert code == 0 and doc["dim_kernel"] == 0 and len(doc["solution"]) == 7


def test_solve_not_elliptic_exit_3(capsys, tmp_path):
    sysf = tmp_path / "dx1.sys"
    sysf.write_text("n = 2\nell = 0\nm = 1\na 1 1 = i*k1\n")
    assert run(capsys, "solve", "--system", str(sysf), "--mode", "1,0")[0] == 3


def test_regularity_rows_agree(capsys, system_path):
    _, out, _ = run(capsys, "regularity", "--system", str(system_path("dn2x2")),
                    "--N", "64", "--N", "128")
    rows = out.splitlines()[1:]
    assert len(rows) == 10 and all(r.endswith(",true") for r in rows)


def test_apriori_global(capsys, system_path):
    _, out, _ = run(capsys, "apriori", "--system", str(system_path("helmholtz1")),
                    "--window", "global", "--trials", "5", "--N", "16")
    assert out.splitlines()[1].endswith(",1")


def test_parametrix(capsys, system_path):
    _, out, _ = run(capsys, "parametrix", "--system", str(system_path("ddx")), "--R", "1",
                    "--N", "8")
    assert out == "R=1 N=8 residual_BA=0 residual_AB=0\nremainder_support=0\n"


def test_parametrix_singular_exit_3(capsys, system_path):
    assert run(capsys, "parametrix", "--system", str(system_path("ddx")), "--R", "0.5")[0] == 3


def test_config_file_and_output(capsys, tmp_path):
    cfg = tmp_path / "atlas.cfg"
    cfg.write_text("# two parameters\nphi = pow 1\nphi = * (pow 1) (logpow 1)\nN = 16\n"
                   "seed = 7\n")
    dest = tmp_path / "atlas.csv"
    code, out, _ = run(capsys, "atlas", "--config", str(cfg), "--output", str(dest))
    assert code == 0 and out == ""
    rows = dest.read_text().splitlines()
    assert [r.split(",")[2] for r in rows[1:]] == ["pow 1", "* (pow 1) (logpow 1)"]


def test_config_unknown_key_exit_2(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nonsense = 1\n")
    assert run(capsys, "indices", "--phi", "pow 1", "--config", str(cfg))[0] == 2


def test_read_config_lists(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("a = 1\nb-c = x y\na = 2\n\n# comment\n")
    assert read_config(cfg) == {"a": ["1", "2"], "b_c": "x y"}
    cfg.write_text("no equals sign\n")
    with pytest.raises(ParseError):
        read_config(cfg)
