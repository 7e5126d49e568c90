#!/usr/bin/env python3
"""Generates the metrics fixture and its reference report.

Writes predictions.csv (30 samples, 3 folds) and expected.json with the
report computed by straightforward counting, independent of the Rust code.
Probabilities have two decimals so score ties occur.
"""
import csv
import json
import random
from pathlib import Path

LABELS = ["COVID-19", "Non-COVID-19", "No Finding"]
HERE = Path(__file__).resolve().parent


def make_samples():
    rng = random.Random(20220501)
    samples = []
    for i in range(30):
        fold = i % 3
        truth = (i // 3) % 3
        raw = [rng.randint(1, 20) for _ in range(3)]
        # most samples lean toward the truth, some are confidently wrong
        if rng.random() < 0.8:
            raw[truth] += rng.randint(5, 25)
        total = sum(raw)
        p = [round(r / total, 2) for r in raw[:2]]
        p.append(round(1.0 - p[0] - p[1], 2))
        samples.append({"id": f"s{i:02d}", "truth": truth, "p": p, "fold": fold})
    return samples


def argmax(p):
    best = 0
    for i in range(1, len(p)):
        if p[i] > p[best]:
            best = i
    return best


def ratio(num, den):
    return (num / den, False) if den else (0.0, True)


def ap_by_thresholds(scores, truths):
    positives = sum(truths)
    if positives == 0:
        return 0.0, True
    ap, prev = 0.0, 0.0
    for t in sorted(set(scores), reverse=True):
        chosen = [y for s, y in zip(scores, truths) if s >= t]
        tp = sum(chosen)
        recall, precision = tp / positives, tp / len(chosen)
        ap += (recall - prev) * precision
        prev = recall
    return ap, False


def fold_metrics(rows):
    out = {}
    for c in range(3):
        tp = sum(1 for r in rows if r["truth"] == c and argmax(r["p"]) == c)
        fp = sum(1 for r in rows if r["truth"] != c and argmax(r["p"]) == c)
        fn = sum(1 for r in rows if r["truth"] == c and argmax(r["p"]) != c)
        out[c] = {
            "precision": ratio(tp, tp + fp),
            "recall": ratio(tp, tp + fn),
            "f1": ratio(2 * tp, 2 * tp + fp + fn),
            "ap": ap_by_thresholds([r["p"][c] for r in rows], [r["truth"] == c for r in rows]),
        }
    correct = sum(1 for r in rows if argmax(r["p"]) == r["truth"])
    return out, ratio(correct, len(rows))


def main():
    samples = make_samples()
    with open(HERE / "predictions.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "true_label", "p_covid", "p_noncovid", "p_nofinding", "fold"])
        for s in samples:
            w.writerow([s["id"], LABELS[s["truth"]]] + [f"{v:.2f}" for v in s["p"]] + [s["fold"]])

    # reparse through text so the reference sees exactly what the CSV holds
    for s in samples:
        s["p"] = [float(f"{v:.2f}") for v in s["p"]]

    folds = [fold_metrics([s for s in samples if s["fold"] == k]) for k in range(3)]
    rows = []
    for c, name in enumerate(LABELS):
        row = {"name": name, "image_count": sum(1 for s in samples if s["truth"] == c)}
        for m in ("precision", "recall", "f1", "ap"):
            row[m] = sum(f[0][c][m][0] for f in folds) / 3
            row[m + "_undefined"] = any(f[0][c][m][1] for f in folds)
        rows.append(row)
    avg = {"name": "Model Average", "image_count": len(samples)}
    for m in ("precision", "recall", "f1", "ap"):
        avg[m] = sum(r[m] for r in rows) / 3
        avg[m + "_undefined"] = any(r[m + "_undefined"] for r in rows)
    accuracy = sum(f[1][0] for f in folds) / 3
    expected = {"fold_count": 3, "averaging": "macro", "accuracy": accuracy, "rows": [avg] + rows}
    with open(HERE / "expected.json", "w") as f:
        json.dump(expected, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
