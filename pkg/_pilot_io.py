import json, os, subprocess, sys, tempfile, time
from pathlib import Path

import numpy as np

from stomech.io import (apply_overrides, list_catalog, parse_spec, read_columnar,
                        run_experiment, spec_hash, trace_tree, write_columnar,
                        RunError, SpecError)
from stomech.cli import main

# 1. minimal simulate spec hash
sp = parse_spec("state: ho_ground\nseed: 7", kind="simulate")
print("hash(ho_ground seed7):", spec_hash(sp))
print("dt:", sp.dt, "horizon:", sp.horizon, "n_traj:", sp.n_traj)
print("params:", sp.params)
print("estimator:", sp.estimator)
print("constants:", sp.constants)

# round trip
sp2 = parse_spec(sp.serialize(), kind="simulate")
print("round trip same hash:", spec_hash(sp2) == spec_hash(sp))

# 2. small simulate run, timed
doc = """
state: ho_ground
seed: 7
n_traj: 5000
horizon: 0.5
dt: 2.0e-3
params:
  rec_stride: 5
  n_checkpoints: 2
estimator:
  delta_over_dt: 10
"""
spec = parse_spec(doc, kind="simulate")
print("small hash:", spec_hash(spec))
with tempfile.TemporaryDirectory() as td:
    t0 = time.time()
    res = run_experiment(spec, out_root=td)
    print("simulate run:", time.time() - t0, "s")
    print("dir:", res.directory)
    print("files:", res.files)
    print("summary keys:", sorted(res.summary))
    print("verdicts:", res.summary["verdicts"])
    d = Path(res.directory)
    all_files = sorted(p.name for p in d.iterdir())
    print("all files on disk:", all_files)
    blobs = {p.name: p.read_bytes() for p in d.iterdir()}
    # rerun -> byte identical deterministic set
    res2 = run_experiment(spec, out_root=td)
    print("same dir:", res2.directory == res.directory)
    same = {p.name: (p.read_bytes() == blobs[p.name]) for p in d.iterdir()}
    print("byte-identical:", same)
    # trace should pass
    rep = trace_tree(td)
    print("trace ok:", rep.ok, [e.detail for e in rep.entries])
    # corrupt a csv header
    f = d / "marginal.csv"
    txt = f.read_text()
    f.write_text(txt.replace(spec_hash(spec), "deadbeefdeadbeef"))
    rep2 = trace_tree(td)
    print("trace after corrupt:", rep2.ok, rep2.entries[0].detail)
    f.write_text(txt)
    # delete summary
    (d / "summary.json").rename(d / "summary.json.bak")
    rep3 = trace_tree(td)
    print("trace no summary:", rep3.ok, rep3.entries[0].detail)
    (d / "summary.json.bak").rename(d / "summary.json")
    # read a columnar file
    cd = read_columnar(d / "checkpoints.csv")
    print("checkpoints names:", cd.names, "units:", cd.units)
    print("t column:", cd["t"])
    cd2 = read_columnar(d / "fields.csv")
    print("fields names:", cd2.names)

# 3. failure cleanup: n_traj too small for KDE
bad = parse_spec("state: ho_ground\nseed: 7\nn_traj: 500\nhorizon: 0.5\ndt: 2.0e-3\nparams: {rec_stride: 5, n_checkpoints: 2}", kind="simulate")
with tempfile.TemporaryDirectory() as td:
    try:
        run_experiment(bad, out_root=td)
        print("failure pilot: NO ERROR?!")
    except RunError as exc:
        print("RunError module:", exc.module)
        print("RunError msg:", str(exc)[:100])
    leftovers = list(Path(td).iterdir())
    print("leftovers after failure:", leftovers)

# 4. spectrum kind (fast, no round trip)
spect = parse_spec("seed: 3", kind="spectrum")
print("spectrum hash:", spec_hash(spect), "params:", spect.params)
with tempfile.TemporaryDirectory() as td:
    t0 = time.time()
    res = run_experiment(spect, out_root=td)
    print("spectrum run:", time.time() - t0, "s; files:", res.files)
    print("spectrum summary:", res.summary)
    cd = read_columnar(Path(res.directory) / "spectrum.csv")
    print("spectrum csv names:", cd.names, "n rows:", len(cd["k"]))
    k = cd["k"]
    print("k[12] == 2.0:", k[12])

# 5. output root precedence
sp_odir = parse_spec("state: ho_ground\nseed: 7\noutput_dir: FROM_SPEC", kind="simulate")
print("spec output_dir:", sp_odir.output_dir)
from stomech.io.runner import output_root
print("root(override):", output_root(sp_odir, "OVERRIDE"))
print("root(spec):", output_root(sp_odir, None))
os.environ["STOMECH_OUTPUT_ROOT"] = "FROM_ENV"
print("root(env beats default):", output_root(sp, None))
del os.environ["STOMECH_OUTPUT_ROOT"]
print("root(default):", output_root(sp, None))

# 6. catalog
cat = list_catalog()
print("catalog keys:", sorted(cat))
print("states:", sorted(cat["states"]))
print("ho_ground entry:", cat["states"]["ho_ground"])
print("experiments:", sorted(cat["experiments"]))
print("simulate entry:", cat["experiments"]["simulate"]["entry"])
print("processes:", sorted(cat["processes"]))
print("estimator_defaults:", cat["estimator_defaults"])

# 7. overrides
base = {"state": "ho_ground", "seed": 1}
out = apply_overrides(base, ["n_traj=2000", "params.rec_stride=2", "constants.hbar=1.0"])
print("overrides:", out)
print("base untouched:", base)
for bad_ov in ["noequals", "seed.sub=3"]:
    try:
        apply_overrides({"seed": 1}, [bad_ov])
        print("override", bad_ov, "NO ERROR")
    except SpecError as exc:
        print("override error:", bad_ov, "->", exc)

# 8. spec validation errors
cases = [
    ("", "simulate", None, "seed is required"),
    ("state: ho_ground\nseed: 1\nfrobnicate: 3", "simulate", None, "unknown keys"),
    ("state: ho_ground\nseed: 1\nbetas: [100]\ndt: 2.0e-3\nparams: {process: colored_smoothing}", "simulate", None, "resolution rule"),
    ("state: ho_ground\nseed: 1\nconstants: {eps: 2.0}", "simulate", None, "eps"),
    ("state: ho_ground\nseed: 1\nbetas: [30, 10]", "sweep", None, "ascending"),
    ("seed: 1", "simulate", None, "state or"),
    ("state: ho_ground\nseed: 1", "sweep", None, "betas"),
    ("seed: 1\nparams: {t1: 2.0, t2: 1.0}", "measure", None, "t1"),
    ("state: ho_ground\nseed: 1\nhorizon: 0.05", "simulate", None, "horizon"),
    ("state: ho_ground\nseed: 1\nparams: {rec_stride: 3}", "simulate", None, "record grid"),
    ("kind: sweep\nstate: ho_ground\nseed: 1\nbetas: [10, 30]", "simulate", None, "kind"),
    ("state: ho_ground\nseed: 1\nbetas: [10]", "simulate", None, "white"),
    ("potential: {kind: harmonic, omega: 1.0}\nseed: 1\nparams: {process: colored_smoothing}\nbetas: [10]", "simulate", None, "potential"),
]
for text, kind, ov, want in cases:
    try:
        parse_spec(text, kind=kind, overrides=ov)
        print("MISSED:", want)
    except SpecError as exc:
        print(f"ok [{want}]:", str(exc)[:90])

# 9. columnar round trip incl. types
with tempfile.TemporaryDirectory() as td:
    p = Path(td) / "x.csv"
    f = np.array([0.1, -1.5e-17, np.pi, 1e300])
    i = np.array([1, 2, 3, 4])
    b = np.array([True, False, True, False])
    s = np.array(["aa", "bb", "cc", "dd"])
    write_columnar(p, "abcd" * 4, ("f", "i", "b", "s"), ("1", "1", "flag", "name"), (f, i, b, s))
    print(p.read_text().splitlines()[0])
    back = read_columnar(p)
    print("float exact:", np.array_equal(back["f"], f))
    print("int as float:", back["i"].dtype, back["i"])
    print("bool as 01:", back["b"])
    print("strings:", back["s"], back["s"].dtype)
    # errors
    try:
        write_columnar(p, "h", ("a b",), ("1",), ([1.0],))
    except ValueError as exc:
        print("name space err:", exc)
    try:
        write_columnar(p, "h", ("a",), ("1", "2"), ([1.0],))
    except ValueError as exc:
        print("align err:", exc)
    try:
        write_columnar(p, "h", ("a", "b"), ("1", "2"), ([1.0], [1.0, 2.0]))
    except ValueError as exc:
        print("length err:", exc)
    q = Path(td) / "bad.csv"
    q.write_text("1,2,3\n")
    try:
        read_columnar(q)
    except ValueError as exc:
        print("header err:", exc)
    q.write_text("# spec_hash=h columns=a,b units=1,1\n1,2,3\n")
    try:
        read_columnar(q)
    except ValueError as exc:
        print("width err:", exc)

# 10. CLI
with tempfile.TemporaryDirectory() as td:
    cfg = Path(td) / "spec.yaml"
    cfg.write_text("state: ho_ground\nseed: 7\nn_traj: 5000\nhorizon: 0.5\ndt: 2.0e-3\nparams: {rec_stride: 5, n_checkpoints: 2}\n")
    rc = main(["simulate", str(cfg), "--out", td])
    print("cli simulate rc:", rc)
    rc = main(["simulate", str(cfg), "--out", td, "--set", "frob=1"])
    print("cli bad spec rc:", rc)
    rc = main(["simulate", str(cfg), "--out", td, "--set", "n_traj=500"])
    print("cli run-fail rc:", rc)
    rc = main(["trace", td])
    print("cli trace ok rc:", rc)
    rc = main(["trace", str(Path(td) / "nosuch")])
    print("cli trace missing rc:", rc)
    rc = main(["catalog"])
    print("cli catalog rc:", rc)
    rc = main(["simulate", str(Path(td) / "nofile.yaml")])
    print("cli missing config rc:", rc)
