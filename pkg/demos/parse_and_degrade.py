"""Draw one image, read its symbolic description, then damage it.

Problem 20 asks whether one shape is a reflected copy of the other.  The
corrected parsing keeps the sign of the scale so the reflection is visible;
the reflection-blind parsing drops it and gives each copy its own identity,
which erases exactly the information the problem is about.
"""

from svrtsynth.parsing import PRESETS, degrade_parsing, extract_parsing, serialize, vectorize
from svrtsynth.problems import POS, generate_example, rule_oracle
from svrtsynth.rng import make_rng

canvas, gt = generate_example(20, POS, make_rng(7))
print("oracle says:", rule_oracle(20, gt).value)

# coarse ascii view of the 128x128 bitmap, 4x4 pixel blocks
bm = canvas.bitmap
for r in range(0, bm.shape[0], 4):
    print("".join("#" if bm[r:r + 4, c:c + 4].any() else "." for c in range(0, bm.shape[1], 4)))

p = extract_parsing(gt)
print("\ncorrected parsing:")
print(serialize(p))

blind = degrade_parsing(p, PRESETS["reflection_blind"], make_rng(7, 1), gt)
print("reflection-blind parsing:")
print(serialize(blind))

print("feature vector (corrected):", vectorize(p, 2))
print("feature vector (blind):    ", vectorize(blind, 2))
