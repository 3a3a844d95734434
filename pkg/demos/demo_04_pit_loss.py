"""
Permutation-invariant BCE
=========================

A diarization model emits one probability row per output slot, but the
slot order is arbitrary. The loss therefore pairs prediction rows with
label rows in whichever order gives the smallest summed binary
cross-entropy.
"""

import numpy as np

from singdiar import pit_loss, pit_loss_bruteforce
from singdiar.pit import pair_costs, permute_predictions

y = np.array([[1, 1, 1, 0, 0, 0],
              [0, 0, 1, 1, 1, 0]])
# The model got both singers right but put them in the opposite slots.
y_hat = np.array([[0.1, 0.2, 0.8, 0.9, 0.7, 0.1],
                  [0.9, 0.8, 0.7, 0.2, 0.1, 0.2]])

res = pit_loss(y, y_hat)
print("per-pair cost (prediction row x label row):")
print(np.round(pair_costs(y, y_hat), 3))
print(f"loss {res.loss:.4f}, permutation {res.permutation}")
print("aligned predictions:")
print(permute_predictions(y_hat, res.permutation))

# The assignment solver and full enumeration agree.
rng = np.random.default_rng(3)
worst = 0.0
for _ in range(200):
    n, t = rng.integers(1, 6), rng.integers(1, 50)
    yy = (rng.random((n, t)) < 0.5).astype(np.uint8)
    pp = rng.random((n, t))
    worst = max(worst, abs(pit_loss(yy, pp).loss - pit_loss_bruteforce(yy, pp).loss))
print(f"largest assignment vs brute-force gap over 200 draws: {worst:.1e}")
