"""Hyperspectral band selection by mutual information and symmetric uncertainty.

Modules
-------
datacube
    Cube and ground-truth I/O, labeled train/test splits, synthetic cubes.
infotheory
    Histogram estimates of entropy, mutual information, symmetric uncertainty
    and the Fano lower bound on classification error.
bandselect
    Relevance thresholding followed by greedy redundancy pruning.
wrapper
    Classifier-in-the-loop evaluation of a threshold couple, with a CSV cache.
ascent
    Steepest ascent with randomized restarts over the threshold grid.
cli
    The ``hsiband`` command.
"""
from .ascent import (Direction, Operator, ThresholdGrid, choose_move, classify_direction, is_local_maximum,
                     multistart, steepest_ascent)
from .bandselect import (BandSelector, BandSubset, RedundancyMatrix, SelectionThresholds,
                         build_redundancy_matrix, redundancy_filter, relevance_filter, select_bands)
from .datacube import (GroundTruthMap, HyperCube, LabeledSplit, SyntheticSpec, generate_synthetic, load_cube,
                       load_ground_truth, random_split, write_cube, write_ground_truth)
from .errors import HsiBandError
from .infotheory import (conditional_entropy, entropy, fano_lower_bound, joint_histogram, mi_profile,
                         mutual_information, quantize_band, symmetric_uncertainty)
from .wrapper import (ClassifierSpec, EvaluationCache, EvaluationRecord, Evaluator, evaluate_thresholds,
                      overall_accuracy, train_predict)

__version__ = "0.1.0"
