"""
Comparing tracker rankings across genres
========================================

Kendall tau distance counts the item pairs that two rankings order
differently. Only items present in both rankings take part.
"""

# %%
import numpy as np

from trackscan.metrics import Ranking, kendall_distance, pairwise_genre_distances

reference = Ranking(("google", "facebook", "unity", "flurry", "appsflyer"))
games = Ranking(("unity", "google", "facebook", "chartboost", "flurry"))
news = Ranking(("google", "facebook", "comscore", "flurry", "twitter"))

for name, r in (("games", games), ("news", news), ("reversed", reference.reversed())):
    d = kendall_distance(r, reference)
    print(f"{name:9s} raw={d.raw_k} normalized={d.normalized_k:.3f} over {d.universe_size} items")

# %%
# Every genre against every other: a symmetric matrix with a zero diagonal.
dists = pairwise_genre_distances({"games": games, "news": news, "ref": reference}, reference)
names = sorted(dists.matrix)
m = np.array([[dists.matrix[a][b] for b in names] for a in names])
print(names)
print(np.round(m, 3))
print("sum of pairwise distances:", {k: round(v, 3) for k, v in dists.sum_pairwise.items()})
