"""Clustering accuracy measures: best-map OA, NMI and Cohen's kappa."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def _pair(pred, truth):
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions, {truth.size} labels")
    return pred, truth


def confusion_matrix(pred, truth):
    """Counts indexed by (predicted id, true id) over the sorted label values."""
    pred, truth = _pair(pred, truth)
    pred_ids, p = np.unique(pred, return_inverse=True)
    true_ids, t = np.unique(truth, return_inverse=True)
    counts = np.zeros((len(pred_ids), len(true_ids)), dtype=np.int64)
    np.add.at(counts, (p, t), 1)
    return counts, pred_ids, true_ids


def best_map(pred, truth):
    """Relabel clusters by the one-to-one cluster-to-class matching of maximum agreement.

    Returns the relabeled predictions and a dict from cluster id to class id.
    Clusters left without a class (more clusters than classes) receive fresh
    ids above the largest class id, so they always count as errors.
    """
    pred, truth = _pair(pred, truth)
    counts, pred_ids, true_ids = confusion_matrix(pred, truth)
    size = max(counts.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[:counts.shape[0], :counts.shape[1]] = counts
    rows, cols = linear_sum_assignment(padded, maximize=True)
    mapping = {}
    spare = int(true_ids.max()) + 1 if true_ids.size else 0
    for r, c in zip(rows, cols):
        if r >= len(pred_ids):
            continue
        if c < len(true_ids):
            mapping[pred_ids[r].item()] = true_ids[c].item()
        else:
            mapping[pred_ids[r].item()] = spare
            spare += 1
    mapped = np.array([mapping[v] for v in pred.tolist()], dtype=np.int64)
    return mapped, mapping


def overall_accuracy(mapped_pred, truth) -> float:
    mapped_pred, truth = _pair(mapped_pred, truth)
    if mapped_pred.size == 0:
        raise ValueError("empty labeling")
    return float(np.mean(mapped_pred == truth))


def clustering_accuracy(pred, truth) -> float:
    return overall_accuracy(best_map(pred, truth)[0], truth)


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth) -> float:
    """Mutual information over the arithmetic mean of the two entropies (natural log)."""
    counts = confusion_matrix(pred, truth)[0].astype(np.float64)
    h_pred = _entropy(counts.sum(axis=1))
    h_true = _entropy(counts.sum(axis=0))
    if h_pred == 0.0 or h_true == 0.0:
        return 1.0 if h_pred == h_true else 0.0
    n = counts.sum()
    joint = counts / n
    outer = np.outer(joint.sum(axis=1), joint.sum(axis=0))
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log(joint[nz] / outer[nz])))
    return float(np.clip(mi / (0.5 * (h_pred + h_true)), 0.0, 1.0))


def kappa(mapped_pred, truth) -> float:
    """Cohen's kappa between mapped predictions and truth."""
    mapped_pred, truth = _pair(mapped_pred, truth)
    labels = np.union1d(mapped_pred, truth)
    p = np.searchsorted(labels, mapped_pred)
    t = np.searchsorted(labels, truth)
    counts = np.zeros((len(labels), len(labels)), dtype=np.float64)
    np.add.at(counts, (p, t), 1)
    n = counts.sum()
    p_o = np.trace(counts) / n
    p_e = float(np.sum(counts.sum(axis=1) * counts.sum(axis=0))) / n ** 2
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return float((p_o - p_e) / (1.0 - p_e))


def evaluate(pred, truth) -> dict:
    """OA, NMI and kappa of a clustering against ground truth."""
    mapped, _ = best_map(pred, truth)
    return {
        "oa": overall_accuracy(mapped, truth),
        "nmi": nmi(pred, truth),
        "kappa": kappa(mapped, truth),
    }
