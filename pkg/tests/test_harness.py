import json
import math
from fractions import Fraction

import pytest

from shortgap.harness import cli
from shortgap.harness.config import ConfigError, ExperimentConfig, parse_config, parse_F
from shortgap.harness.experiments import (
    density_row, experiment_density, experiment_short_interval_pnt, hl_gap_prediction,
)
from shortgap.harness.report import ReportError, run_full_report
from shortgap.harness.serialization import NumericOutputError, csv_text, dumps_json
from shortgap.primes import Interval, count_primes
from shortgap.tuples import singular_series, make_prime_tuple
from shortgap.variational import SymmetricPoly, optimize_Mk, rho_threshold

SMALL = """
[experiment]
name = small
seed = 7

[chain]
k = 5
delta = 0.6
beta = 0.94
eps0 = 1e-3
degree = 3

[grid]
x = 1e8
delta = 0.525, 0.6
d = 2, 6

[sums]
R = 50
F = sym:1-degree:2

[oracles]
sums = true
"""


# -- config ---------------------------------------------------------------------


def test_parse_config_fields():
    cfg = parse_config(SMALL)
    assert cfg.name == "small" and cfg.seed == 7 and cfg.k == 5
    assert cfg.chain_delta == Fraction(3, 5) and cfg.eps0 == Fraction(1, 1000)
    assert cfg.grid_points == [(10**8, Fraction(21, 40)), (10**8, Fraction(3, 5))]
    assert cfg.gaps == (2, 6) and cfg.oracle_sums and cfg.sums_R == 50
    assert cfg.sums_point == (10**8, Fraction(21, 40))
    assert cfg.hash() == parse_config(SMALL.replace("seed = 7", "seed=7  ; same")).hash()
    assert cfg.hash() != parse_config(SMALL.replace("seed = 7", "seed = 8")).hash()


def test_seeded_samples_are_reproducible():
    text = "[grid]\nx_samples = 5\nx_range = 1e10, 1e12\ndelta = 0.525\n"
    a, b = parse_config(text), parse_config(text)
    assert a.grid_x == b.grid_x and len(a.grid_x) == 5
    assert all(10**10 <= x <= 10**12 for x in a.grid_x)
    assert parse_config(text.replace("[grid]", "[experiment]\nseed = 1\n[grid]")).grid_x != a.grid_x


@pytest.mark.parametrize("text", [
    "[bogus]\nx = 1\n",
    "[grid]\nx = 1e13\ndelta = 0.6\n",
    "[grid]\nx = 1e8\ndelta = 0.5\n",
    "[grid]\nx = 1e8\ndelta = 0.6\nd = 3\n",
    "[chain]\nk = zero\n",
    "[grid]\nx_range = 5\n",
    "[oracles]\nsums = maybe\n",
    "not an ini file",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_parse_F():
    c = parse_F("const:2", 3)
    assert isinstance(c, SymmetricPoly) and c([0.1, 0.1, 0.1]) == 2
    F = parse_F("sym:1-degree:2", 2)
    assert F.functionals() is not None
    res = optimize_Mk(2, 2)
    assert F([0.2, 0.3]) == pytest.approx(res.to_symmetric_poly()([0.2, 0.3]))
    for bad in ("const:0", "sym:0-degree:2", "nope:1", "file:/does/not/exist.json"):
        with pytest.raises(ConfigError):
            parse_F(bad, 2)


def test_parse_F_from_file(tmp_path):
    res = optimize_Mk(3, 2)
    p = tmp_path / "mk.json"
    p.write_text(dumps_json(res))
    assert parse_F(f"file:{p}", 3)([0.1, 0.2, 0.3]) == pytest.approx(res.to_symmetric_poly()([0.1, 0.2, 0.3]))
    with pytest.raises(ConfigError):
        parse_F(f"file:{p}", 2)


# -- experiments ------------------------------------------------------------------


def test_pnt_rows():
    rows = experiment_short_interval_pnt([(10**9, 1), (10**8, Fraction(3, 5))])
    assert rows[0]["count"] == 50847534 and rows[0]["h"] == 10**9
    assert rows[0]["ratio"] == pytest.approx(50847534 * math.log(10**9) / 10**9)
    assert rows[1]["h"] == math.floor(10**(8 * 0.6) + 1e-9)
    assert rows[1]["count"] == count_primes(Interval(10**8 - rows[1]["h"], 10**8))
    with pytest.raises(ConfigError):
        experiment_short_interval_pnt([(10**8, Fraction(11, 10))])
    with pytest.raises(ConfigError):
        experiment_short_interval_pnt([(10**13, Fraction(3, 5))])


def test_density_monotone_in_d():
    rows = experiment_density([(10**8, Fraction(3, 5), d) for d in (2, 6, 30)])
    counts = [r["pair_count"] for r in rows]
    assert counts[0] > 0 and counts == sorted(counts)
    # far above the mean gap log x ~ 18 almost every consecutive pair qualifies
    assert rows[2]["normalized"] > 10 * rows[0]["normalized"]
    with pytest.raises(ConfigError):
        density_row(10**8, Fraction(3, 5), 5)


def test_hl_prediction_twins_is_singular_series_term():
    x, h = 10**8, 10**5
    twin = singular_series(make_prime_tuple(2), 10**5).value
    assert hl_gap_prediction(x, h, 2) == pytest.approx(twin * h / math.log(x) ** 2)
    assert hl_gap_prediction(x, h, 6) > hl_gap_prediction(x, h, 4) > hl_gap_prediction(x, h, 2) > 0


# -- serialization ------------------------------------------------------------------


def test_json_floats_and_fractions():
    text = dumps_json({"a": 0.1, "b": 2.0, "c": Fraction(3, 7), "d": Fraction(4, 1), "e": True})
    d = json.loads(text)
    assert '"a": 0.10000000000000001' in text and '"b": 2.0' in text
    assert d["c"] == "3/7" and d["d"] == "4" and d["e"] is True
    for bad in (math.nan, math.inf):
        with pytest.raises(NumericOutputError):
            dumps_json({"v": [1.0, bad]})
        with pytest.raises(NumericOutputError):
            csv_text([{"v": bad}], ["v"])


def test_csv_text():
    text = csv_text([{"a": 1, "b": 0.5, "c": True, "d": None}], ["a", "b", "c", "d"])
    assert text.splitlines() == ["a,b,c,d", "1,0.5,true,"]


# -- report ------------------------------------------------------------------------


def test_report_chain_and_determinism(tmp_path):
    cfg = parse_config(SMALL)
    man1, doc = run_full_report(cfg, tmp_path / "r1")
    man2, _ = run_full_report(cfg, tmp_path / "r2")
    assert man1["status"] == "complete" and man1["outputs"] == man2["outputs"]
    assert (tmp_path / "r1" / "report.json").read_bytes() == (tmp_path / "r2" / "report.json").read_bytes()
    for name in ("regions.csv", "pnt.csv", "density.csv", "manifest.json"):
        assert (tmp_path / "r1" / name).exists()
    chain = doc["chain"]
    assert chain["admissible"] and chain["tuple"] == make_prime_tuple(5).to_dict()
    th = rho_threshold(Fraction(3, 5), Fraction(1, 1000), Fraction(94, 100), chain["Mk"]["certified_quotient"])
    assert chain["threshold"]["m"] == th.m
    # m = ceil((delta - 0.525 + eps0) / 2 * (1 - beta) * M_5) - 1
    mk = chain["Mk"]["certified_quotient"]
    assert th.m == math.ceil((Fraction(3, 5) - Fraction(525, 1000) + Fraction(1, 1000)) / 2 * Fraction(6, 100) * mk) - 1
    assert doc["sums"]["oracle"]["S1"] == pytest.approx(doc["sums"]["S1"].value, rel=1e-9)
    saved = json.loads((tmp_path / "r1" / "manifest.json").read_text())
    assert saved["config_hash"] == cfg.hash() and saved["stages"][-1] == "serialize"


def test_empty_grid_gives_chain_only(tmp_path):
    cfg = parse_config("[chain]\nk = 3\ndegree = 2\n")
    man, doc = run_full_report(cfg, tmp_path)
    assert set(doc) == {"experiment", "config_hash", "config", "chain"}
    assert man["stages"] == ["chain", "serialize"]
    assert sorted(p.name for p in tmp_path.iterdir()) == ["manifest.json", "report.json"]


def test_stage_failure_writes_partial_manifest(tmp_path, monkeypatch):
    from shortgap.harness import report
    cfg = parse_config(SMALL)
    monkeypatch.setattr(report, "_regions", lambda cfg: (_ for _ in ()).throw(RuntimeError("boom")))
    with pytest.raises(ReportError) as err:
        run_full_report(cfg, tmp_path)
    assert err.value.stage == "regions"
    saved = json.loads((tmp_path / "manifest.json").read_text())
    assert saved["status"] == "failed" and saved["stages"] == ["chain", "sums"] and "boom" in saved["error"]
    assert not (tmp_path / "report.json").exists()


# -- CLI -----------------------------------------------------------------------------


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_cli_primes_and_shape(capsys):
    code, out = run(["primes", "count", "--from", 0, "--to", 10**6], capsys)
    assert code == 0 and json.loads(out.out)["count"] == 78498
    code, out = run(["primes", "gaps", "--from", 100, "--to", 200, "--max-gap", 2], capsys)
    assert code == 0 and out.out.splitlines()[0] == "p,p_next,gap"


def test_cli_pipeline(tmp_path, capsys):
    ctx, lam, mk = tmp_path / "ctx.json", tmp_path / "lambda.bin", tmp_path / "mk.json"
    assert run(["tuple", "context", "--x", 200000, "--delta", 0.94, "--k", 2, "--R", 25, "--d0-floor", 5,
                "--h", 100000, "--out", ctx], capsys)[0] == 0
    assert run(["weights", "build", "--context", ctx, "--F", "sym:1-degree:2", "--out", lam], capsys)[0] == 0
    code, out = run(["sums", "s1", "--context", ctx, "--weights", lam, "--oracle"], capsys)
    assert code == 0 and json.loads(out.out)["oracle_agrees"]
    for extra in (["s2", "--m", 1], ["s1p", "--p", 7, "--j", 1], ["sminus", "--which", "S2-"]):
        code, out = run(["sums", extra[0], "--context", ctx, "--weights", lam, "--oracle", *extra[1:]], capsys)
        assert code == 0, out.err
    assert run(["mk", "optimize", "--k", 2, "--degree", 2, "--out", mk], capsys)[0] == 0
    code, out = run(["mk", "threshold", "--delta", 1, "--mk", 100], capsys)
    assert code == 0 and json.loads(out.out)["m"] == 1
    code, out = run(["ledger", "check", "--context", ctx, "--sample-from", 100000, "--sample-to", 110000], capsys)
    assert code == 0 and json.loads(out.out)["ok"]


def test_cli_numeric_failure_exit_code(tmp_path, capsys, monkeypatch):
    ctx, lam = tmp_path / "ctx.json", tmp_path / "lambda.bin"
    run(["tuple", "context", "--x", 36, "--delta", 1, "--offsets", "0", "--R", 8, "--d0-floor", 3,
         "--h", 36, "--out", ctx], capsys)
    run(["weights", "build", "--context", ctx, "--F", "const:1", "--out", lam], capsys)
    monkeypatch.setattr(cli.oracles, "S1", lambda iv, c, l: -1.0)
    code, out = run(["sums", "s1", "--context", ctx, "--weights", lam, "--oracle"], capsys)
    assert code == cli.EXIT_NUMERIC
    code, _ = run(["sums", "error-scan", "--x", 10**6, "--z", 10**4, "--Q", 3], capsys)
    assert code == 0


def test_cli_invalid_input_exit_code(tmp_path, capsys):
    assert run(["tuple", "check", "--offsets", "0,1"], capsys)[0] == 0  # inadmissible is a result, not an error
    assert run(["experiment", "pnt", "--x", 10**13, "--delta", 0.6], capsys)[0] == cli.EXIT_INVALID
    assert run(["sums", "s1", "--context", tmp_path / "missing.json", "--weights", "x"], capsys)[0] == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[bogus]\n")
    assert run(["report", "--config", bad], capsys)[0] == cli.EXIT_INVALID
    with pytest.raises(SystemExit) as err:
        cli.main(["primes", "count", "--from", "x"])
    assert err.value.code == cli.EXIT_INVALID


def test_cli_decomposition_commands(capsys):
    code, out = run(["buchstab", "omega", "--u", 3], capsys)
    assert code == 0 and json.loads(out.out)["omega"] == pytest.approx((1 + math.log(2)) / 3, abs=1e-6)
    code, out = run(["buchstab", "identity", "--from", 10**5, "--to", 10**5 + 1000, "--w1", 50, "--w2", 10], capsys)
    assert code == 0 and json.loads(out.out)["failures"] == 0
    code, out = run(["buchstab", "identity", "--from", 10**5, "--to", 10**5 + 1000, "--w1", 50, "--w2", 10,
                     "--printed"], capsys)
    assert code == 0 and json.loads(out.out)["failures"] > 0
    code, out = run(["regions", "table", "--delta", 0.525], capsys)
    assert code == 0 and out.out.splitlines()[0] == "region,nonempty,loss,paper_budget"


def test_cli_report(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[chain]\nk = 2\ndegree = 1\n")
    code, out = run(["report", "--config", cfg, "--out", tmp_path / "o"], capsys)
    assert code == 0 and json.loads(out.out)["status"] == "complete"
