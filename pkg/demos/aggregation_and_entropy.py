"""
Combining predictions over augmented inputs
===========================================

Each test input is classified once as written and once per augmentation.
The predictions are then merged, either by averaging probabilities or by a
majority vote. Entropy of the first prediction tells us how unsure the
model was.
"""

import math

from ttagate import ClassDistribution, entropy, mean_aggregate, vote_aggregate
from ttagate.aggregate import VerbalizerTable, verbalize

# five views of one review: the original first, then four rewrites
views = [
    ClassDistribution((0.40, 0.45, 0.15)),
    ClassDistribution((0.70, 0.20, 0.10)),
    ClassDistribution((0.55, 0.35, 0.10)),
    ClassDistribution((0.30, 0.60, 0.10)),
    ClassDistribution((0.65, 0.25, 0.10)),
]

merged = mean_aggregate(views)
print("mean probabilities:", [round(p, 3) for p in merged.distribution.probs])
print("mean-prob class   :", merged.class_index)

# the same views as hard votes; the original is class 1 but loses 3 to 2
votes = [v.as_array().argmax() for v in views]
print("votes             :", [int(v) for v in votes], "->", vote_aggregate(votes).class_index)

# a generative model answers with words; the verbalizer turns them into classes
table = VerbalizerTable("sentiment", {"negative": 0, "positive": 1, "neutral": 2})
answers = [" Positive", "negative.", "I think negative", "banana"]
mapped = []
for a in answers:
    try:
        mapped.append(verbalize(a, table))
    except LookupError:
        mapped.append(None)  # no class evidence, dropped from the vote
print("verbalized answers:", mapped, "->", vote_aggregate(mapped).class_index)

# entropy in nats: 0 for a confident model, ln K for a uniform one
print("entropy of original view:", round(entropy(views[0]), 4), "max:", round(math.log(3), 4))
