"""Same learners, two parsers.

On problem 20 the reflection-blind parser loses the sign of the scale.
Both learners collapse to chance on those parsings and recover once the
sign is kept: the failure belongs to the parser, not the learner.
"""

from svrtsynth.protocol import AdaBoostAgent, ProgramSynthesisAgent, run_protocol
from svrtsynth.synth import Budget

agents = [("adaboost, 20 vs 80", AdaBoostAgent(), 10, 80),
          ("program synthesis, 3 vs 94", ProgramSynthesisAgent(Budget(wall_clock=20.0)), 3, 94)]

for name, agent, pairs, n_test in agents:
    for profile in ("reflection_blind", "corrected"):
        r = run_protocol(20, agent, train_pairs=pairs, n_test=n_test, n_reps=4, seed=3,
                         profile=profile)
        print(f"{name:28s} {profile:17s} alpha={r.alpha:.3f} beta*={r.beta_star:.3f}")
