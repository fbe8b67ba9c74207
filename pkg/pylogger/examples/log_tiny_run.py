#!/usr/bin/env python3
"""Train a tiny softmax classifier (standard library only) and log its
training dynamics with pylogger.

Usage: python3 log_tiny_run.py [out.jsonl]

The model is 3-class logistic regression on 2-D points sampled around three
cluster centers, trained by plain gradient descent.  After each epoch a
frozen pass over the training set records the gold-label probability and
argmax prediction for every instance -- exactly what the analysis toolkit's
`metrics` command consumes.
"""

import math
import random
import sys

import pylogger

CLASSES = 3
EPOCHS = 5
N_TRAIN = 60
LEARNING_RATE = 0.5
CENTERS = [(2.0, 0.0), (-1.0, 1.8), (-1.0, -1.8)]


def make_data(rng):
    data = []
    for i in range(N_TRAIN):
        gold = i % CLASSES
        cx, cy = CENTERS[gold]
        point = (cx + rng.gauss(0, 1.0), cy + rng.gauss(0, 1.0))
        data.append((f"pt-{i:03d}", gold, point))
    return data


def predict(weights, bias, point):
    logits = [weights[c][0] * point[0] + weights[c][1] * point[1] + bias[c] for c in range(CLASSES)]
    top = max(logits)
    exps = [math.exp(z - top) for z in logits]
    total = sum(exps)
    return [v / total for v in exps]


def main():
    out_path = sys.argv[1] if len(sys.argv) > 1 else "tiny_run.jsonl"
    rng = random.Random(7)
    data = make_data(rng)
    weights = [[0.0, 0.0] for _ in range(CLASSES)]
    bias = [0.0] * CLASSES

    handle = pylogger.begin_run(
        out_path,
        run_id="tiny-external-run",
        dataset_name="three-blobs",
        num_classes=CLASSES,
        planned_epochs=EPOCHS,
        num_train_instances=N_TRAIN,
    )
    for epoch in range(EPOCHS):
        order = list(range(N_TRAIN))
        rng.shuffle(order)
        for i in order:  # one SGD step per instance
            _, gold, point = data[i]
            probs = predict(weights, bias, point)
            for c in range(CLASSES):
                grad = probs[c] - (1.0 if c == gold else 0.0)
                weights[c][0] -= LEARNING_RATE * grad * point[0]
                weights[c][1] -= LEARNING_RATE * grad * point[1]
                bias[c] -= LEARNING_RATE * grad

        # frozen pass: no updates, only measurement
        guids, golds, gold_probs, preds = [], [], [], []
        for guid, gold, point in data:
            probs = predict(weights, bias, point)
            guids.append(guid)
            golds.append(gold)
            gold_probs.append(probs[gold])
            preds.append(max(range(CLASSES), key=probs.__getitem__))
        pylogger.log_epoch(handle, epoch, guids, golds, gold_probs, preds)
        accuracy = sum(p == g for p, g in zip(preds, golds)) / N_TRAIN
        print(f"epoch {epoch}: train accuracy {accuracy:.2f}")

    summary = pylogger.finalize(handle)
    print(f"wrote {summary['epochs']} epochs x {summary['instances']} instances to {out_path}")


if __name__ == "__main__":
    main()
