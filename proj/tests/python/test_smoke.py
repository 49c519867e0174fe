import csv
import json
import os
from pathlib import Path

import numpy as np
import pytest

import surveyps

FIX = Path(os.environ.get("SURVEYPS_FIXTURES", Path(__file__).resolve().parents[1] / "fixtures"))


def toy12():
    with open(FIX / "toy12.csv") as fh:
        rows = list(csv.DictReader(fh))
    col = lambda k: np.array([float(r[k]) for r in rows])
    return np.column_stack([col("x1"), col("x2")]), col("z"), col("y"), col("w")


def test_estimate_matches_fixture():
    oracle = json.loads((FIX / "toy12_oracle.json").read_text())["by_tilt"]
    x, z, y, w = toy12()
    for estimand in ("ate", "att", "atc", "ato"):
        for estimator in ("psw", "mom", "cvr", "wet"):
            r = surveyps.estimate(x, z, y, w, estimand=estimand, estimator=estimator)
            o = oracle[estimand][estimator]
            assert r["tau"] == pytest.approx(o["tau"], rel=1e-10)
            assert r["se"] == pytest.approx(o["se"], rel=1e-6)
            assert r["ci_low"] < r["tau"] < r["ci_high"]


def test_propensity_matches_fixture():
    oracle = json.loads((FIX / "toy12_oracle.json").read_text())
    x, z, _, w = toy12()
    ps = surveyps.fit_propensity(x, z, w)
    np.testing.assert_allclose(ps["beta_sp"], oracle["beta_sp"], rtol=1e-10)
    np.testing.assert_allclose(ps["beta_fp"], oracle["beta_fp"], rtol=1e-10)


def test_overlap_balance_is_exact():
    x, z, _, w = toy12()
    rows = surveyps.balance(x, z, w, names=["x1", "x2"], estimand="ato")
    assert [r["covariate"] for r in rows] == ["x1", "x2"]
    assert max(abs(r["psmd"]) for r in rows) <= 1e-6


def test_report_and_errors(tmp_path):
    text = surveyps.estimate_report(str(FIX / "toy12.csv"), "z", "y", "w", ["x1", "x2"],
                                    estimands=["ato"], estimators=["wet"])
    assert json.loads(text)["results"][0]["estimator"] == "wet"
    with pytest.raises(surveyps.SurveyPSError) as err:
        surveyps.estimate_report(str(FIX / "toy12.csv"), "z", "y", "wt", ["x1", "x2"])
    assert err.value.code == "E_CONFIG"
    x, z, y, w = toy12()
    with pytest.raises(surveyps.SurveyPSError) as err:
        surveyps.estimate(x, z, y, w, estimator="ols")
    assert err.value.code == "E_CONFIG"


def test_simulate_is_deterministic(tmp_path):
    sc = tmp_path / "tiny.txt"
    sc.write_text("name = tiny\nunits_per_cluster = 200\nallocations = 85,75,70,65,60,40,35,30,25,15\n"
                  "replications = 3\nestimator = wet:w:ate:cor:cor\n")
    a = surveyps.simulate(str(sc), threads=1)
    assert a == surveyps.simulate(str(sc), threads=2)
    assert len(a.strip().splitlines()) == 3
