"""Adaptive Legendre library growth on the quadratic Lorenz system.

Prints the grown Legendre model, its monomial expansion, and the final
scale-thresholded equations; writes the growth trace as CSV.

    python3 scripts/adaptive_quadratic_lorenz.py --out results/adaptive
"""

import argparse
from pathlib import Path

from sparse_discovery import dynamics
from sparse_discovery.adaptive_growth import GrowthConfig, grow
from sparse_discovery.featurelib import default_variable_names, estimate_scales
from sparse_discovery.symbolic import expand_model, render_model, threshold_model


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/adaptive")
    ap.add_argument("--tau", type=float, default=0.05)
    args = ap.parse_args()

    traj = dynamics.integrate(dynamics.lorenz_quadratic(), (1.0, 1.0, 1.0), 1e-3, 10_000)
    model, trace = grow(traj, GrowthConfig(r_a=0.75, r_r=1.25, lambda0=1.0, k_r=10))
    scales = estimate_scales(traj.states, "rms")
    names = default_variable_names(3)

    print("grown Legendre model:")
    for i, v in enumerate(names):
        terms = [f"{model.weights[j, i]:+.4g} {d.name(names)}"
                 for j, d in enumerate(model.library.descriptors) if model.weights[j, i] != 0]
        print(f"  d{v}/dt = {' '.join(terms)}")
    expanded = expand_model(model)
    print("after expansion:")
    print("  " + render_model(expanded, scales).replace("\n", "\n  "))
    print(f"after thresholding (tau={args.tau}):")
    print("  " + render_model(threshold_model(expanded, scales, args.tau), scales).replace("\n", "\n  "))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trace.csv").write_text(trace.to_csv())
    (out / "model.json").write_text(model.dumps() + "\n")
    print(f"trace: {len(trace.steps)} steps -> {out / 'trace.csv'}")


if __name__ == "__main__":
    main()
