"""
Climbing the grid
=================

Instead of sweeping every couple, steepest ascent walks between neighbouring
couples, preferring moves that raise accuracy while dropping bands.
"""
from hsiband.ascent import ThresholdGrid, multistart, trajectory_rows
from hsiband.datacube import SyntheticSpec, generate_synthetic, random_split
from hsiband.wrapper import ClassifierSpec, Evaluator

spec = SyntheticSpec(width=48, height=48, noise_amplitude=0.4)
cube, gt, _ = generate_synthetic(spec, seed=1)
evaluator = Evaluator(cube, gt, random_split(gt, 0.5, seed=1), ClassifierSpec("knn", k=1))

grid = ThresholdGrid(tuple(round(0.1 * i, 1) for i in range(1, 11)), (0.0, 0.05, 0.1, 0.3, 0.6))
best, results = multistart(grid, n_restarts=4, seed=7, evaluator=evaluator)

##############################################################################
# Each restart logs the operator seen in every direction and the move taken.

for i, result in enumerate(results, start=1):
    print(f"restart {i}: start {grid.label(result.start_point)}")
    for row in trajectory_rows(grid, result):
        print(f"  {row['th_redundancy']}-{row['th_relevance']}: {row['n_bands']} bands "
              f"{row['accuracy']}%  -> {row['chosen']} ({row['reason']})")

print(f"best {grid.label(best.final_point)}: {best.final_record.n_bands} bands, "
      f"{best.final_record.accuracy:.2f}%")
print(f"evaluated {evaluator.classifier_calls} of {grid.size} couples")
