"""Regenerated SVRT problems, symbolic parsings, a program-synthesis
classifier, an AdaBoost baseline and the statistics used to compare them
with human subjects.

Submodules: ``contours`` (shape generation and placement), ``problems`` (the
23 problem rules), ``parsing`` (symbolic descriptions), ``synth`` (DSL,
fitting, search, classification), ``boost``, ``stats``, ``protocol`` and
``cli``.
"""

__version__ = "0.1.0"
