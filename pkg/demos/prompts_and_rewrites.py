"""
Rewrite prompts and parsing the answers
=======================================

Two prompt styles ask an LLM for a rewrite of the test input: a plain
paraphrase, and in-context rewriting, which shows in-distribution examples
and asks for a rewrite in their style. Answers come back wrapped in
delimiters that have to be peeled off.
"""

from ttagate.augment.prompts import build_icr_prompt, build_paraphrase_prompt, extract_rewrite
from ttagate.core import LabelSpace, TestInput
from ttagate.exemplars import sample_exemplars

text = "Shipping took 3 weeks; the box arrived crushed."
print(build_paraphrase_prompt(text))
print("=" * 60)

# exemplars come from labelled in-distribution data, balanced per class
space = LabelSpace("sentiment", ("negative", "positive", "neutral"))
pool = [TestInput(f"{c}-{i}", f"example review {i} of class {c}", c) for c in range(3) for i in range(10)]
shots = sample_exemplars(pool, k=16, seed=3, label_space=space)
print("exemplar classes:", shots.class_counts(3))
print(build_icr_prompt(text, shots.texts[:3]))
print("=" * 60)

# the paraphrase prompt ends by opening "{{{", so a model often only closes it
for raw in [
    "The package needed three weeks and showed up squashed.}}}",
    '{{{"It took three weeks and the box was crushed."}}} Let me know if you need more.',
    "Paraphrased Text: ```Delivery was slow and the carton got flattened.```",
]:
    print(repr(extract_rewrite(raw)))
