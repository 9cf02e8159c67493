import json
from dataclasses import asdict

import pytest
from hypothesis import given
from hypothesis import strategies as st

from weylsoliton.verify import (CHECKS, CheckRecord, ConfigError, NotDifferential, SuiteConfig,
                                VerificationReport, convergence_study, run)
from weylsoliton.verify.cli import main
from weylsoliton.verify.manifest import build_chart, load_manifest
from weylsoliton.verify.schema import CONFIG_SCHEMA, REPORT_SCHEMA, write_schemas

SMALL = SuiteConfig(suite="algebraic", points=20, seed=3)


def test_every_check_has_a_reference():
    for c in CHECKS.values():
        assert c.reference
        assert (c.batch is None) != (c.point is None)


def test_record_pass_flag_must_match():
    with pytest.raises(ValueError, match="pass flag"):
        CheckRecord("alg.wplus_cc", "x", "synthetic", 0, 1.0, 0.5, True, 0.0)


def test_one_record_per_check_and_point():
    rep = run(SMALL)
    n_alg = sum(c.suite == "algebraic" for c in CHECKS.values())
    assert len(rep.records) == 20 * n_alg
    assert rep.passed
    ids = [(r.check_id, r.point) for r in rep.records]
    assert ids == sorted(ids)


def test_runs_are_reproducible():
    a, b = run(SMALL), run(SMALL)
    assert [r.residual for r in a.records] == [r.residual for r in b.records]
    c = run(SuiteConfig(suite="algebraic", points=20, seed=4))
    assert [r.residual for r in a.records] != [r.residual for r in c.records]


def test_report_roundtrip(tmp_path):
    rep = run(SuiteConfig(suite="algebraic", points=5, seed=1, report=str(tmp_path / "r.json")))
    back = VerificationReport.from_json((tmp_path / "r.json").read_text())
    assert back.records == rep.records
    assert back.header["config"]["seed"] == 1


records = st.builds(
    lambda cid, m, p, r, t, ms: CheckRecord(cid, CHECKS[cid].reference, m, p, r, t, r <= t, ms),
    st.sampled_from(sorted(CHECKS)),
    st.sampled_from(["synthetic", "s2xr2"]),
    st.one_of(st.integers(0, 10**6), st.lists(st.floats(-5, 5), min_size=4, max_size=4)),
    st.floats(0, 1e3),
    st.floats(0, 1),
    st.floats(0, 1e4),
)


@given(st.lists(records, max_size=20))
def test_serialization_roundtrip_property(recs):
    rep = VerificationReport({"config": SMALL.to_dict(), "versions": {}, "timestamp": "t"}, recs)
    assert VerificationReport.from_json(rep.to_json()).records == recs


def test_unknown_manifold():
    with pytest.raises(ConfigError, match="unknown manifold"):
        run(SuiteConfig(suite="all", manifolds=("nowhere",)))


def test_invalid_fd_policy():
    with pytest.raises(ConfigError, match="fd_order"):
        SuiteConfig(fd_order=3).validate()
    with pytest.raises(ConfigError):
        SuiteConfig.from_dict({"suite": "algebraic", "fd_step": 0})


def test_unwritable_report(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ConfigError, match="unwritable"):
        run(SuiteConfig(suite="algebraic", points=2, report=str(blocker / "r.json")))


def test_report_dir_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("WEYLSOLITON_REPORT_DIR", str(tmp_path))
    run(SuiteConfig(suite="algebraic", points=2, report="sub/out.json"))
    assert (tmp_path / "sub" / "out.json").exists()


def test_algebraic_check_is_not_differential():
    with pytest.raises(NotDifferential, match="not differential"):
        convergence_study(SuiteConfig(), "alg.wplus_cc")


def test_tolerance_overrides():
    cfg = SuiteConfig(suite="algebraic", points=3, overrides={"alg.wplus_cc": 0.0})
    rep = run(cfg)
    cc = [r for r in rep.records if r.check_id == "alg.wplus_cc"]
    assert all(r.tolerance == 0.0 for r in cc)
    with pytest.raises(ConfigError, match="unknown check"):
        SuiteConfig(overrides={"alg.nope": 1.0}).validate()


def test_schemas_published(tmp_path):
    paths = write_schemas(tmp_path)
    assert json.loads(paths[0].read_text()) == json.loads(json.dumps(CONFIG_SCHEMA))
    assert json.loads(paths[1].read_text()) == json.loads(json.dumps(REPORT_SCHEMA))


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["run", "--suite", "algebraic", "--points", "3", "--report", str(tmp_path / "a.json")]) == 0
    assert "records passed" in capsys.readouterr().out
    assert main(["run", "--suite", "algebraic", "--points", "3", "--tol", "alg.pairings=0"]) == 1
    assert main(["run", "--manifold", "nowhere"]) == 2
    assert "unknown manifold" in capsys.readouterr().err
    assert main(["converge", "--check", "alg.wplus_cc"]) == 2
    assert main(["list"]) == 0


def test_manifest_symbolic_chart(tmp_path):
    man = {
        "suite": "differential",
        "manifolds": ["flat_gauss"],
        "points": 1,
        "charts": [{"name": "flat_gauss", "metric": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
                    "potential": "(x0**2 + x1**2 + x2**2 + x3**2)/4", "lam": 0.5,
                    "box": [[-1] * 4, [1] * 4]}],
    }
    p = tmp_path / "m.json"
    p.write_text(json.dumps(man))
    cfg = SuiteConfig.from_dict(load_manifest(p))
    rep = run(cfg)
    assert rep.passed
    assert {r.check_id for r in rep.records} >= {"diff.soliton", "diff.bochner"}


def test_manifest_errors(tmp_path):
    p = tmp_path / "m.json"
    p.write_text('{"charts": [{"name": "a"}]}')
    with pytest.raises(ConfigError, match="invalid configuration"):
        load_manifest(p)
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_manifest(p)
    with pytest.raises(ConfigError, match="unknown symbols"):
        build_chart({"name": "s", "metric": [["y", 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
                     "box": [[-1] * 4, [1] * 4]})
    with pytest.raises(ConfigError, match="not symmetric"):
        build_chart({"name": "s", "metric": [[1, "x0/10", 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
                     "box": [[-1] * 4, [1] * 4]})


def test_differential_suite_on_s2xr2():
    rep = run(SuiteConfig(suite="differential", manifolds=("s2xr2",), points=10))
    boch = [r for r in rep.records if r.check_id == "diff.bochner"]
    assert len(boch) == 10
    assert all(r.residual < 1e-6 for r in boch)


def test_convergence_noise_floor():
    t = convergence_study(SuiteConfig(), "conf.weyl")
    assert t.noise_floor and t.passed
    assert "noise floor" in t.format()
