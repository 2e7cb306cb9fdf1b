# transposition of two atoms: measure preserving, periodic, never norm convergent

from lowerbound_lab.frobenius_perron import FiniteMap, fp_of_finite_map
from lowerbound_lab.semigroup import Semigroup

name = "swap-pair"
description = "transposition of two atoms"
expect = [("operator-norm", "not_converged"), ("fp-rigidity", "certified")]


def build(config):
    return Semigroup.discrete(fp_of_finite_map(FiniteMap([1, 0])), name=name)
