"""Why normalized descent needs momentum.

A one-dimensional objective is perfectly flat (its population gradient is
zero everywhere), but the stochastic oracle returns +p with probability 1-p
and p-1 with probability p. Each raw sample is tiny on average, yet its
normalized version has mean 1 - 2p > 0, so memoryless normalized descent
marches steadily AWAY from the critical point at speed (1 - 2p) * eta.

Averaging the samples before normalizing shrinks the estimator error below
the (zero) signal much more often, and the drift collapses.
"""

import math

import numpy as np

from nigt_lab import RunConfig, make_sign_noise, nsgdm_params, run

P = 0.25
ETA = 0.01
T = 10_000
SEEDS = tuple(range(1, 21))


def mean_drift(cfg, problem):
    drifts = [
        float((problem.w1[0] - rec.final_w[0]) / (ETA * T)) for rec in run(cfg)
    ]
    return float(np.mean(drifts)), float(np.std(drifts))


def main():
    pb = make_sign_noise(P)
    print(f"flat objective, oracle = +{P} w.p. {1 - P} / {P - 1} w.p. {P}")
    print(f"per-step drift of plain normalized descent should be 1 - 2p = {1 - 2 * P}\n")

    memoryless = RunConfig(problem=pb, optimizer_id="nsgdm", T=T, seeds=SEEDS,
                           eta=ETA, beta=0.0)
    m, s = mean_drift(memoryless, pb)
    print(f"beta = 0.0   (memoryless): drift = {m:+.4f}  (per-seed std {s:.4f})")

    params = nsgdm_params(R=1.0, L=1.0, sigma=math.sqrt(P * (1 - P)), T=T)
    tuned = RunConfig(problem=pb, optimizer_id="nsgdm", T=T, seeds=SEEDS,
                      eta=ETA, beta=params.beta)
    m2, s2 = mean_drift(tuned, pb)
    print(f"beta = {params.beta:.4f} (tuned):      drift = {m2:+.4f}  (per-seed std {s2:.4f})")
    print(f"\nmomentum cut the runaway drift by {abs(m / m2):.0f}x")


if __name__ == "__main__":
    main()
