"""A small strategy-vs-budget benchmark (minutes, not the full run).

Compares online exploration against random selection on an 8-object corpus
and prints the mean accuracy per budget. The full 20-object, 10-seed run
lives behind `deskteach bench` and in the acceptance suite.
"""

import time
from pathlib import Path

from deskteach.bench import AGG_FIELDS, RAW_FIELDS, generate_corpus, run_benchmark
from deskteach.store import write_csv
from deskteach.viewsphere import build_view_sphere

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

sphere = build_view_sphere(4, 350.0, -0.10)
corpus = generate_corpus(8, seed=1)
print(f"corpus: {[s.objects[0].name for s in corpus]}")

t0 = time.perf_counter()
result = run_benchmark(corpus, ["explore", "random"], budgets=[1, 2, 3, 8],
                       seeds=[0, 1, 2], sphere=sphere)
print(f"benchmark took {time.perf_counter() - t0:.0f}s")

print(f"{'budget':>6} {'explore':>8} {'random':>8} {'gap':>8}")
for budget in (1, 2, 3, 8):
    guided = result.mean_accuracy("explore", budget)
    random_ = result.mean_accuracy("random", budget)
    print(f"{budget:>6} {guided:>8.3f} {random_:>8.3f} {guided - random_:>+8.3f}")

write_csv(OUT / "bench_raw.csv", RAW_FIELDS, result.rows)
write_csv(OUT / "bench_agg.csv", AGG_FIELDS, result.aggregates)
print(f"wrote CSVs to {OUT}/")
