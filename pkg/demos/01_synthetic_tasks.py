"""Synthetic tasks: rotating halfplanes around random Gaussian means.

Every task draws its points from a unit Gaussian centred at a mean in
[-5, 5]^2 and labels a point +1 when it lies counter-clockwise of the mean
direction. Tasks with nearby means therefore share nearly the same
labeling rule, which is what makes transfer between them possible.
"""
import tempfile

import numpy as np

from activetask import LinearModel, generate_synthetic, load_collection
from activetask.tasks import save_collection

coll = generate_synthetic(T=6, n=500, m=50, n_test=1000, seed=1)
print(f"{coll.T} tasks, {coll.n} unlabeled points each, {coll.m} labels revealed per selected task")

for t, spec in enumerate(coll.specs):
    model = LinearModel(*spec.bayes_model())
    print(f"task {t}: mean {np.round(spec.mean, 2)}, positives {np.mean(coll.labels[t] == 1):.2f}, "
          f"error of its own rule {model.error(*coll.tests[t]):.3f}")

# The rule of task 0 applied to every other task: error grows with the angle between means.
rule = LinearModel(*coll.specs[0].bayes_model())
for t in range(1, coll.T):
    print(f"task 0 rule on task {t}: {rule.error(*coll.tests[t]):.3f}")

# Collections persist as a manifest plus one CSV per task.
with tempfile.TemporaryDirectory() as tmp:
    save_collection(coll, tmp)
    back = load_collection(tmp)
    print("round trip exact:", np.array_equal(back.samples, coll.samples))
