"""Shared finite-difference oracle and instance generator for gradient tests."""

import numpy as np

from snrkit.snr_loss import EtaState, class_conditional_stats, snr_total_loss


def random_instance(rng, samples=12, classes=4, clearance=0.2):
    """Random (logits, labels, eta) with every class populated (>= 2 rows),
    variances bounded away from zero, and eta bounded away from every
    class-conditional mean and from the hinge kinks, so step-1e-4 central
    differences resolve the gradient to the tested precision."""
    margin = 0.25
    while True:
        labels = np.concatenate(
            [np.arange(classes), rng.integers(0, classes, size=samples - classes)]
        )
        rng.shuffle(labels)
        logits = rng.normal(0.0, 2.0, size=(samples, classes))
        stats = class_conditional_stats(logits, labels)
        if not np.all(stats.present) or stats.var.min() < 0.05:
            continue
        eta = rng.normal(0.0, 1.0, size=classes)
        state = EtaState(eta=eta, initialized=True)
        gaps = []
        for n in range(classes):
            gaps.append(abs(stats.mean[n, n] - eta[n]))
            gaps.append(abs(eta[n] - stats.mean[n, n] + margin))
            for i in range(classes):
                if i != n:
                    gaps.append(abs(eta[n] - stats.mean[n, i]))
                    gaps.append(abs(stats.mean[n, i] - eta[n] - margin))
        if min(gaps) >= clearance:
            return logits, labels, state, margin


def fd_gradient(logits, labels, state, cfg, h=1e-4):
    """Central finite differences of snr_total_loss over every logit."""
    g = np.zeros_like(logits)
    for r in range(logits.shape[0]):
        for c in range(logits.shape[1]):
            lp = logits.copy()
            lp[r, c] += h
            lm = logits.copy()
            lm[r, c] -= h
            fp = snr_total_loss(class_conditional_stats(lp, labels), state, cfg)
            fm = snr_total_loss(class_conditional_stats(lm, labels), state, cfg)
            g[r, c] = (fp - fm) / (2 * h)
    return g
