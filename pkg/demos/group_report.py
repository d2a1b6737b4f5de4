"""Humans against machines, grouped by problem type.

Each problem has a type (SS, LR): how many spatial and how many same/
different relations its rule needs.  The report puts the stored human
success fractions next to each machine's beta* and averages within types.
"""

from svrtsynth.stats import published_tables, group_report

tables = published_tables()
human = tables.human_table()

for column in ("ps_corrected", "ps_sasquatch", "cnn_best"):
    rep = group_report(tables.machine[column], human)
    (hb, hs), (mb, ms) = rep.overall["beta"], rep.overall["beta_star"]
    print(f"{column}: humans {hb:.3f} +/- {hs:.3f}, machine {mb:.3f} +/- {ms:.3f}")

print("\nper type, corrected program synthesis:")
for g in group_report(tables.machine["ps_corrected"], human).groups:
    print(f"  SS={g['ss']} LR={g['lr']}  n={g['n']:2d}  human {g['mean_beta']:.3f}  "
          f"machine {g['mean_beta_star']:.3f}")
