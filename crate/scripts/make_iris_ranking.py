"""Build the Iris label-ranking fixture used by the experiment configs.

Follows the usual conversion of a multiclass dataset into a label-ranking one:
fit a naive Bayes classifier on the whole dataset and, for every sample, rank
the classes by decreasing predicted probability (ties go to the lower class
index). Each output row holds the four features followed by the rank (1-based)
assigned to class 1, class 2 and class 3.
"""
import csv
import sys

import numpy as np
from sklearn.datasets import load_iris
from sklearn.naive_bayes import GaussianNB


def main(path):
    data = load_iris()
    x, y = data.data, data.target
    proba = GaussianNB().fit(x, y).predict_proba(x)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["sepal_length", "sepal_width", "petal_length", "petal_width",
                      "rank_setosa", "rank_versicolor", "rank_virginica"])
        for features, p in zip(x, proba):
            order = sorted(range(len(p)), key=lambda j: (-p[j], j))
            ranks = [0] * len(p)
            for position, label in enumerate(order):
                ranks[label] = position + 1
            out.writerow([f"{v:g}" for v in features] + ranks)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/iris_ranking.csv")
