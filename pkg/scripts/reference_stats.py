#!/usr/bin/env python3
"""Rank statistics for the bundled reference Gmean matrix.

The package ships literature-reported Gmean scores for 14 kernel one-class
classifiers on 25 UCI one-class tasks (src/lmkad/data/reference_gmeans.csv).
This prints the Friedman / Iman-Davenport test plus MGmean and PMG for
every classifier column.
"""
import sys
from importlib import resources

import numpy as np

from lmkad.cli import main as lmkad_main
from lmkad.evaluation import mgmean, pmg, read_gmean_matrix_csv


def main():
    path = resources.files("lmkad").joinpath("data/reference_gmeans.csv")
    code = lmkad_main(["stats", "--results", str(path)])
    if code != 0:
        return code
    datasets, classifiers, M = read_gmean_matrix_csv(path)
    mg, pm = mgmean(M), pmg(M)
    print(f"\nper-classifier aggregates over {len(datasets)} datasets:")
    print(f"  {'classifier':24s} {'MGmean':>8s} {'PMG':>8s}")
    for idx in np.argsort(-mg):
        print(f"  {classifiers[idx]:24s} {mg[idx]:8.2f} {pm[idx]:8.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
