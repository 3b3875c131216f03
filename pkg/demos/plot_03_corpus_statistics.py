"""
Corpus statistics from host lists
=================================

Generates a small synthetic corpus of pre-extracted host lists, runs the
corpus analysis and prints the headline numbers: host distribution, Gini
coefficient and prevalence at subsidiary and root-parent level.
"""

# %%
import random
import tempfile
from pathlib import Path

import numpy as np

from trackscan import seed_kb
from trackscan.metrics import load_genre_map
from trackscan.report import analyze_corpus, emit_histogram, write_report

kb = seed_kb()
rng = random.Random(1)
domains = sorted(kb.domains)
weights = np.linspace(1.0, 0.05, len(domains))
genres = ["Tools", "Education", "Puzzle Games", "News & Magazines"]

work = Path(tempfile.mkdtemp(prefix="trackscan-demo-"))
lines = ["app_id,apk_path,hosts_path,genre,family_flag,store"]
for i in range(60):
    k = rng.choice([0, 1, 2, 3, 5, 8, 13])
    picks = set(rng.choices(domains, weights=list(weights), k=k))
    hosts = work / f"app{i}.txt"
    hosts.write_text("\n".join(f"https://sdk.{d}/collect" for d in sorted(picks)) + "\n")
    lines.append(f"app{i},,{hosts.name},{genres[i % 4]},{str(i % 10 == 0).lower()},UK")
(work / "manifest.csv").write_text("\n".join(lines) + "\n")

# %%
report = analyze_corpus(work / "manifest.csv", kb, load_genre_map())
data = report.to_dict()
print("apps:", data["n_apps"], "| median tracker hosts:", data["hosts"]["median"],
      "| Q1/Q3:", data["hosts"]["q1"], data["hosts"]["q3"],
      "| apps with none: %.1f%%" % data["hosts"]["pct_zero"])
print("Gini over tracker hosts per app: %.3f" % data["gini_hosts"])

# %%
# Histogram of tracker hosts per app (bins of width 2, empty bins omitted).
for lo, hi, count in emit_histogram([p.host_count for p in report.profiles], 2):
    print(f"[{lo:2d},{hi:2d}) {'#' * count}")

# %%
# A root parent is present whenever any of its subsidiaries is, so its
# prevalence can never fall below theirs.
for row in data["prevalence"]["root_parent"]["rows"][:5]:
    print(f"{row['entity']:12s} {row['pct_apps']:6.2f}%")
files = write_report(report, work / "out", kb)
print("wrote", ", ".join(sorted(files)))
