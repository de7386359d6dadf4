"""Visibility-weighted part distance in action.

Two people are compared index by index (foreground plus each body part);
only indices visible on both sides count.  This makes a half-occluded
detection comparable with a fully visible track without penalizing the
hidden half.
"""

import numpy as np

from prtrack import NoMutualVisibility, PartFeatureSet, part_distance

rng = np.random.default_rng(0)
K, D = 5, 8

full = PartFeatureSet(parts=rng.normal(size=(K, D)),
                      foreground=rng.normal(size=D),
                      visibility=np.ones(K + 1, dtype=int))

# Same person, but the bottom two parts are hidden behind an occluder.
vis = np.ones(K + 1, dtype=int)
vis[-2:] = 0
occluded = PartFeatureSet(parts=full.parts + rng.normal(0, 0.05, (K, D)),
                          foreground=full.foreground
                          + rng.normal(0, 0.05, D),
                          visibility=vis)

# A different person entirely.
other = PartFeatureSet(parts=rng.normal(size=(K, D)),
                       foreground=rng.normal(size=D),
                       visibility=np.ones(K + 1, dtype=int))

print(f"same person, partially occluded: "
      f"{part_distance(full, occluded):.3f}")
print(f"different person, fully visible: "
      f"{part_distance(full, other):.3f}")

# Corrupting the *hidden* parts changes nothing: they never enter the sum.
corrupted = PartFeatureSet(parts=occluded.parts
                           + 100.0 * (1 - vis[1:, None]),
                           foreground=occluded.foreground,
                           visibility=vis)
print(f"same distance after corrupting hidden parts: "
      f"{part_distance(full, corrupted):.3f}")

# With no shared visible index the pair is simply unmatchable.
top = PartFeatureSet(parts=full.parts, foreground=full.foreground,
                     visibility=np.array([0, 1, 1, 0, 0, 0]))
bottom = PartFeatureSet(parts=full.parts, foreground=full.foreground,
                        visibility=np.array([0, 0, 0, 1, 1, 1]))
try:
    part_distance(top, bottom)
except NoMutualVisibility:
    print("disjoint visibility -> NoMutualVisibility (cost becomes +inf)")
