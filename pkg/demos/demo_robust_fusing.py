"""Fusing overlapping displacement observations with the minimum-covariance
selection: a gross outlier never makes it into the compound, and pools prune
themselves back to the selected half once they grow past 10 members."""

import numpy as np

from chi_walk.trajectory import FusionPool, fuse_mcd, mcd_subset_size, prune_pool

rng = np.random.default_rng(7)

# nine honest walks between the same two APs, one badly wrong one
true_offset = np.array([12.0, 5.0])
observations = true_offset + rng.normal(scale=0.8, size=(9, 2))
observations = np.vstack([observations, [[30.0, -20.0]]])

h = mcd_subset_size(len(observations), d=2)
compound, selected = fuse_mcd(observations)
print(f"n={len(observations)} observations, keep h={h}")
print(f"selected members: {sorted(selected)}  (outlier is index 9)")
print(f"compound offset:  ({compound[0]:.2f}, {compound[1]:.2f})")
print(f"plain mean:       ({observations.mean(axis=0)[0]:.2f}, "
      f"{observations.mean(axis=0)[1]:.2f})")
print(f"truth:            ({true_offset[0]:.2f}, {true_offset[1]:.2f})")

# pools prune once they exceed 10 members, tagging what they dropped
pool = FusionPool("ap-a", "ap-b", signature=0)
for i, (dx, dy) in enumerate(observations):
    pool.add_member(dx, dy, walked_length=13.0, timestamp=float(i))
pool.add_member(40.0, 40.0, walked_length=13.0, timestamp=10.0)
print(f"\npool grew to {len(pool.members)} members")
prune_pool(pool)
print(f"after pruning: {len(pool.members)} members, "
      f"discarded walks at t={pool.discarded_timestamps}")
pool.fuse()
print(f"pool compound: ({pool.fused[0]:.2f}, {pool.fused[1]:.2f})")
