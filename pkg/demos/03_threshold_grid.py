"""
Sweeping the threshold grid
===========================

Every couple (th_redundancy, th_relevance) gives a band subset and a 1-NN
accuracy. The pivot shows where noise hurts and where few bands suffice.
"""
import numpy as np

from hsiband.ascent import ThresholdGrid
from hsiband.datacube import SyntheticSpec, generate_synthetic, random_split
from hsiband.wrapper import ClassifierSpec, Evaluator

spec = SyntheticSpec(width=48, height=48, noise_amplitude=0.4)
cube, gt, roles = generate_synthetic(spec, seed=1)
split = random_split(gt, fraction=0.5, seed=1)
evaluator = Evaluator(cube, gt, split, ClassifierSpec("knn", k=1))

noise_ceiling = max(evaluator.selector.profile[r.band_index] for r in roles if r.role == "noise")
grid = ThresholdGrid((0.2, 0.4, 0.6, 0.8, 1.0), (0.0, round(float(noise_ceiling), 4), 0.5))

##############################################################################
# Rows are relevance thresholds, columns redundancy thresholds.

print("MI \\ TH " + "".join(f"{t:>14g}" for t in grid.redundancy_axis))
for mi_index, th_rel in enumerate(grid.relevance_axis):
    cells = []
    for red_index in range(len(grid.redundancy_axis)):
        rec = evaluator(grid.thresholds((red_index, mi_index)))
        cells.append(f"{rec.n_bands:3d} / {rec.accuracy:6.2f}%" if rec.defined else "-")
    print(f"{th_rel:<8g}" + "".join(f"{c:>14s}" for c in cells))

print("classifier runs:", evaluator.classifier_calls)
