"""Delimited output files: CSV reports, ledgers, traces and field dumps."""
import csv
from pathlib import Path


def fmt(x):
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_field_dump(path, array):
    """Plain-text field dump: header line 'nx ny', then row-major values."""
    nx, ny = array.shape
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{nx} {ny}\n")
        for i in range(nx):
            f.write(" ".join(f"{v:.17g}" for v in array[i]) + "\n")


def read_field_dump(path):
    import numpy as np
    with open(path, encoding="utf-8") as f:
        nx, ny = (int(s) for s in f.readline().split())
        data = np.loadtxt(f)
    return data.reshape(nx, ny)


def write_ledger_csv(path, ledger):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(ledger.COLUMNS)
        for row in ledger.rows():
            writer.writerow([fmt(v) for v in row])


def write_acoustic_csv(path, trace):
    times, B, A = trace.arrays()
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(("t", "k", "l", "b", "a"))
        for n, t in enumerate(times):
            for j, (k, l) in enumerate(trace.modes):
                writer.writerow([fmt(float(t)), k, l, fmt(B[n, j]), fmt(A[n, j])])


def write_report_csv(path, report):
    header, rows = report.table()
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if v is not None else "" for v in row])


def ensure_dir(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
