"""Process-level checks of the surveyps executable."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

EXE = Path(sys.argv[1])
FIX = Path(sys.argv[2])
TOY = ["--input", str(FIX / "toy12.csv"), "--treatment", "z", "--outcome", "y", "--covariates", "x1,x2"]
failures = []


def run(*args):
    return subprocess.run([str(EXE), *args], capture_output=True, text=True)


def check(name, ok, detail=""):
    print(("ok   " if ok else "FAIL ") + name + (f"  ({detail})" if detail and not ok else ""))
    if not ok:
        failures.append(name)


with tempfile.TemporaryDirectory() as d:
    d = Path(d)
    oracle = json.loads((FIX / "toy12_oracle.json").read_text())["by_tilt"]["ato"]["wet"]

    r = run("estimate", *TOY, "--weight", "w", "--estimand", "ato", "--estimator", "wet")
    check("estimate exits 0", r.returncode == 0, r.stderr)
    res = json.loads(r.stdout)["results"][0]
    check("ato/wet tau", abs(res["tau"] - oracle["tau"]) <= 1e-10 * abs(oracle["tau"]))
    check("ato/wet se", abs(res["se"] - oracle["se"]) <= 1e-6 * oracle["se"])

    out = d / "report.json"
    run("estimate", *TOY, "--weight", "w", "--estimand", "ato,att", "--estimator", "wet,psw,cvr", "--out", str(out))
    first = out.read_bytes()
    run("estimate", *TOY, "--weight", "w", "--estimand", "ato,att", "--estimator", "wet,psw,cvr", "--out", str(out))
    check("reruns are byte-identical", out.read_bytes() == first)

    bad = d / "bad.json"
    r = run("estimate", *TOY, "--weight", "survey_weight", "--out", str(bad))
    err = json.loads(r.stderr)
    check("missing weight column exits nonzero", r.returncode != 0)
    check("missing weight column is E_CONFIG", err["code"] == "E_CONFIG", r.stderr)
    check("no partial output", not bad.exists() and not list(d.glob("bad.json*")))
    r = run("estimate", *TOY, "--weight", "survey_weight", "--out", str(out))
    check("failed run leaves previous output intact", out.read_bytes() == first)

    r = run("balance", *TOY, "--weight", "w", "--estimand", "ato")
    rows = json.loads(r.stdout)["estimands"][0]["balance"]
    check("overlap balance is exact", all(abs(x["psmd"]) <= 1e-6 for x in rows))
    r = run("balance", "--input", str(FIX / "imbalanced.csv"), "--treatment", "z", "--outcome", "y",
            "--weight", "w", "--covariates", "x1,x2", "--estimand", "ate")
    rows = json.loads(r.stdout)["estimands"][0]["balance"]
    check("imbalanced toy flagged", max(abs(x["psmd"]) for x in rows) > 0.1)
    r = run("balance", *TOY[:-1], "x1,x1", "--weight", "w")
    check("duplicate covariates are E_CONFIG", r.returncode != 0 and json.loads(r.stderr)["code"] == "E_CONFIG")

    r = run("estimate", *TOY, "--weight", "w", "--ps-mode", "q")
    check("unknown ps mode is E_CONFIG", r.returncode != 0 and json.loads(r.stderr)["code"] == "E_CONFIG")

    sc = d / "tiny.txt"
    sc.write_text("name = tiny\nunits_per_cluster = 200\nallocations = 85,75,70,65,60,40,35,30,25,15\n"
                  "replications = 4\nestimator = mom:w:ato:mis:cor\n")
    a = run("simulate", str(sc), "--threads", "1")
    b = run("simulate", str(sc), "--threads", "3")
    check("simulate exits 0", a.returncode == 0, a.stderr)
    check("simulate output independent of threads", a.stdout == b.stdout and a.stdout.count("\n") == 3)

    sc.write_text("name = tiny\nrepetitions = 4\n")
    r = run("simulate", str(sc))
    err = json.loads(r.stderr)
    check("unknown scenario key", r.returncode != 0 and err["code"] == "E_CONFIG" and "repetitions" in err["message"])

sys.exit(1 if failures else 0)
