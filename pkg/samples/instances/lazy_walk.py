# lazy random walk on a six-cycle; aperiodic, so it converges to the uniform density

import numpy as np

from lowerbound_lab.lattice import WeightedSpace
from lowerbound_lab.operators import DenseOperator
from lowerbound_lab.semigroup import Semigroup

name = "lazy-walk"
description = "lazy random walk on a cycle of six atoms"
expect = [("strong-convergence", "converged"), ("uniform-lower-bound", "certified")]

ATOMS = 6


def build(config):
    eye = np.eye(ATOMS)
    M = 0.5 * eye + 0.25 * (np.roll(eye, 1, axis=0) + np.roll(eye, -1, axis=0))
    return Semigroup.discrete(DenseOperator(WeightedSpace.counting(ATOMS), M), name=name)
