"""Writes the small real datasets that ship with scikit-learn into data/ as headed CSV files.

wdbc      Wisconsin diagnostic breast cancer (569 x 30), label 0 = malignant, 1 = benign
digits35  optical-recognition digits restricted to 3 and 5 (8x8 pixels, 64 features), label = digit
wine      wine recognition (178 x 13), label = cultivar 0-2
"""
import pathlib

import numpy as np
from sklearn import datasets

OUT = pathlib.Path(__file__).resolve().parent.parent / "data"


def write(name, x, y):
    header = ",".join([f"f{i}" for i in range(x.shape[1])] + ["label"])
    rows = np.column_stack([x, y])
    np.savetxt(OUT / f"{name}.csv", rows, delimiter=",", header=header, comments="", fmt="%.10g")


def main():
    OUT.mkdir(exist_ok=True)
    bc = datasets.load_breast_cancer()
    write("wdbc", bc.data, bc.target)
    dg = datasets.load_digits()
    mask = np.isin(dg.target, [3, 5])
    write("digits35", dg.data[mask], dg.target[mask])
    wn = datasets.load_wine()
    write("wine", wn.data, wn.target)


if __name__ == "__main__":
    main()
