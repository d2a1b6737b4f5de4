"""Learn a program per category from three examples, then classify.

Problem 1 (same or different shapes): the positive program draws one
contour twice.  Problem 16 (left half mirrors the right half): the program
draws six shapes of one identity with mirrored scales.  Each test parsing
goes to the category whose program explains it more cheaply.
"""

from svrtsynth.parsing import extract_parsing
from svrtsynth.problems import make_dataset
from svrtsynth.rng import make_rng
from svrtsynth.synth import Budget, SearchLog, classify, cost, synthesize, to_sexpr

budget = Budget(wall_clock=30.0)

for pid in (1, 16):
    ds = make_dataset(pid, n_train_pairs=3, n_test=20, seed=11)
    programs = {}
    for cat in ("positive", "negative"):
        ps = [extract_parsing(e.ground_truth) for e in ds.train if e.category.value == cat]
        log = SearchLog()
        programs[cat] = synthesize(ps, budget, log=log)
        print(f"problem {pid} {cat}: {cost(programs[cat]):.0f} bits, "
              f"{len(log.frontier)} candidates verified")
        print("  " + to_sexpr(programs[cat]).replace("\n", "\n  "))

    right = 0
    for k, e in enumerate(ds.test):
        d = classify(extract_parsing(e.ground_truth), programs["positive"], programs["negative"],
                     make_rng(11, k))
        right += d.label == e.category.value
    print(f"problem {pid}: {right}/{len(ds.test)} test images correct\n")
