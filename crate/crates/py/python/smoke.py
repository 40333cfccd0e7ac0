"""Smoke test for the Python bindings.

Run after `maturin develop` or `pip install --no-build-isolation .` inside
crates/py:

    python python/smoke.py [path/to/config.toml]
"""

import math
import sys
from pathlib import Path

import agrivoltaic_py as av

ROOT = Path(__file__).resolve().parents[3]


def main() -> None:
    config_path = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "config" / "example.toml"

    assert math.isclose(av.power_std([0.0, 2.0]), math.sqrt(2.0))
    assert math.isclose(av.pearson([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]), 1.0)
    assert math.isclose(av.hypervolume([[0.0, 0.0]], [1.0, 2.0]), 2.0)

    try:
        av.Config.load(ROOT / "no-such-config.toml")
    except av.AgrivoltaicError as e:
        print("missing config rejected:", e)
    else:
        raise AssertionError("missing config was accepted")

    config = av.Config.load(config_path)
    print(config)
    site = av.Site(config)

    near = site.evaluate(-90.0, 5.0)
    far = site.evaluate(-90.0, 20.0)
    print("d = 5 m:", near)
    print("d = 20 m:", far)
    assert near["ler_crop"] < far["ler_crop"]
    assert near["energy_kwh"] < far["energy_kwh"]
    assert near["ler_pv"] > far["ler_pv"]

    sim = site.simulate(*config.design)
    assert len(sim["power_kw"]) == len(sim["times"]) > 8000
    print(f"yield {sim['yield_t_ha']:.2f} t/ha, energy {sim['energy_kwh']:.0f} kWh, LER {sim['ler']:.3f}")

    rows = site.sweep("distance", [5.0, 10.0, 20.0])
    assert [r["value"] for r in rows] == [5.0, 10.0, 20.0]

    run = site.optimize(population=8, generations=2, seed=1, workers=1)
    hv = run["hypervolume"]
    assert all(b >= a for a, b in zip(hv, hv[1:]))
    print(f"{len(run['archive'])} archive members after {run['evaluations']} evaluations")
    print("ok")


if __name__ == "__main__":
    main()
