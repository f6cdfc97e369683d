#!/usr/bin/env python3
"""Smoke test for the enaqt extension module.

Builds nothing itself: expects `cargo build -p enaqt-py` (optionally
--release) to have produced target/{release,debug}/libenaqt_py.so.
The library is copied into a temp directory under the import name
`enaqt` and exercised end to end.
"""

import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / "release" / "libenaqt_py.so",
        ROOT / "target" / "debug" / "libenaqt_py.so",
    ]
    lib = next((p for p in candidates if p.exists()), None)
    if lib is None:
        sys.exit("build the extension first: cargo build -p enaqt-py --release")
    stage = Path(tempfile.mkdtemp(prefix="enaqt_py_"))
    shutil.copy2(lib, stage / "enaqt.so")
    sys.path.insert(0, str(stage))
    import enaqt

    print(f"loaded {lib.relative_to(ROOT)} as enaqt {enaqt.__version__}")
    return enaqt


def check(label, ok, detail=""):
    status = "ok" if ok else "FAIL"
    print(f"  {label}: {status}{' (' + detail + ')' if detail else ''}")
    if not ok:
        raise AssertionError(label)


def main():
    enaqt = load_module()
    model = enaqt.Model.fmo3()

    print("model")
    check("preset shape", model.n_sites == 3 and model.sink_site == 3)
    roundtrip = enaqt.Model.from_json(model.to_json())
    check("json round trip", roundtrip.energies_cm1 == model.energies_cm1)
    cfg = json.loads(model.to_json())
    check("config keys", "energies_cm1" in cfg and "sink_rate_ps1" in cfg)

    print("efficiency")
    direct = enaqt.efficiency(model, 12.07, method="direct")
    integ = enaqt.efficiency(model, 12.07, method="integrate")
    gap = abs(direct["eta"] - integ["eta"])
    check("direct vs integrate", gap < 1e-3, f"gap {gap:.2e}")
    check("drained", integ["drained"])

    print("evolve")
    run = enaqt.evolve(model, t_end=10.0, gamma=12.07, lqu=True)
    p_rc = run["p_rc"]
    check("grid length", len(run["times_ps"]) == len(p_rc) == 2001)
    check("p_rc monotone", all(b >= a - 1e-9 for a, b in zip(p_rc, p_rc[1:])))
    sums = [
        g + sum(s[i] for s in run["sites"]) + r
        for i, (g, r) in enumerate(zip(run["p_g"], p_rc))
    ]
    check("trace preserved", max(abs(s - 1.0) for s in sums) < 1e-8)
    check("lqu attached", len(run["lqu"]) == 2001 and math.isfinite(run["lqu"][0]))
    check("final state shape", len(run["final_state"]) == 5)

    print("lqu")
    half = 0.5 + 0.0j
    bell_block = [[half, half, 0j], [half, half, 0j], [0j, 0j, 0j]]
    fast = enaqt.lqu(bell_block, normalize=True, method="single")
    full = enaqt.lqu(bell_block, normalize=True, method="general")
    check("bell value", abs(fast["value"] - 1.0) < 1e-9, f"{fast['value']:.6f}")
    check(
        "single vs general",
        abs(fast["value"] - full["value"]) < 1e-10,
        f"gap {abs(fast['value'] - full['value']):.2e}",
    )

    print("sweep")
    result = enaqt.sweep(model, gamma_min=1e-2, gamma_max=1e3, points=13)
    check("point count", len(result["etas"]) == 13)
    check("peak eta", result["peak_eta"] > 0.9, f"{result['peak_eta']:.4f}")
    check("flux finite", all(math.isfinite(x) for x in result["phi_lqu"]))
    check("no point errors", all(e is None for e in result["errors"]))

    print("errors")
    try:
        enaqt.Model.fmo3().with_sink_rate(-1.0)
        check("negative rate rejected", False)
    except ValueError:
        check("negative rate rejected", True)
    try:
        closed = model.with_sink_rate(0.0).with_uniform_dissipation(0.0)
        enaqt.efficiency(closed, 1.0, method="direct")
        check("singular solve surfaces", False)
    except RuntimeError as e:
        check("singular solve surfaces", "integration" in str(e))

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
