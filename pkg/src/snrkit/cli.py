"""Command-line interface: bound evaluation/verification, the Bernoulli
classifier simulation, and desk-scale training experiments.

Every subcommand prints machine-readable results (JSON on stdout; per-epoch
training series as CSV).  Exit codes: 0 success, 2 invalid input or missing
data, 3 training divergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import bounds as b
from . import extremal as ex
from .data_io import Dataset, IdxFormatError, load_idx, split_dataset, synth_blobs
from .nn import LOSS_MODES, DivergenceError, TrainConfig, init_mlp, train
from .parametric import BernoulliProblem, SimProtocol, simulate_accuracy
from .snr_loss import SnrLossConfig

MNIST_FILES = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte")
FETCH_HINT = (
    "MNIST IDX files are not downloaded automatically. Fetch the official\n"
    "gzipped files, e.g.:\n"
    "  curl -O https://storage.googleapis.com/cvdf-datasets/mnist/train-images-idx3-ubyte.gz\n"
    "  curl -O https://storage.googleapis.com/cvdf-datasets/mnist/train-labels-idx1-ubyte.gz\n"
    "  gunzip train-*.gz\n"
    "then pass --images/--labels or set SNR_DATA_DIR to their directory."
)

# keys accepted in a --config JSON document (flat key/value; unknown keys
# are rejected).  Dotted snr.* keys mirror the loss hyperparameters.
CONFIG_KEYS = {
    "dataset", "images", "labels", "limit", "val_fraction", "epochs",
    "batch_size", "lr", "momentum", "seed", "loss", "hidden_dims", "out_csv",
    "synth_classes", "synth_dim", "synth_samples_per_class", "synth_separation",
    "snr.lambda", "snr.margin", "snr.eps", "snr.weight", "snr.m_mult",
    "snr.mode", "snr.normalize_pairs", "snr_grad_clip", "grad_clip_norm",
}


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _witness_points(dist: ex.DiscreteDist):
    return [[x, p] for x, p in dist.points]


def cmd_bounds(args) -> int:
    m = b.Moments(mu=args.mu, var=args.var)
    if args.tail is not None:
        event = ex.TailEvent(args.tail)
        env = b.cdf_envelope(m, args.tail)
        out = {
            "event": "tail",
            "mu": m.mu,
            "var": m.var,
            "eta": args.tail,
            "bound": b.upper_tail_bound(m, args.tail),
            "cdf_envelope": [env.lower, env.upper],
        }
        primary = out["bound"]
    elif args.outside is not None:
        iv = b.Interval(*args.outside)
        event = ex.OutsideEvent(iv.lo, iv.hi)
        out = {
            "event": "outside",
            "mu": m.mu,
            "var": m.var,
            "thresholds": [iv.lo, iv.hi],
            "bound": b.outside_interval_upper_bound(m, iv),
        }
        primary = out["bound"]
    else:
        iv = b.Interval(*args.inside)
        event = ex.InsideEvent(iv.lo, iv.hi)
        out = {
            "event": "inside",
            "mu": m.mu,
            "var": m.var,
            "thresholds": [iv.lo, iv.hi],
            "bound": b.inside_interval_upper_bound(m, iv),
            "lower_bound": b.inside_interval_lower_bound(m, iv),
        }
        primary = out["bound"]
    if args.verify:
        res = ex.oracle_max_event(m, event)
        out["oracle_sup"] = res.sup_prob
        out["oracle_gap"] = abs(primary - res.sup_prob)
        out["grid_step"] = res.grid_step
        out["witness"] = _witness_points(res.witness)
    _emit(out)
    return 0


def cmd_parametric_sim(args) -> int:
    prob = BernoulliProblem(np.array(args.p))
    protocol = SimProtocol(
        n_trials=args.trials,
        seed=args.seed,
        upper_factor=args.upper_factor,
        calibration_trials=args.calibration_trials,
    )
    r = simulate_accuracy(prob, protocol)
    _emit(
        {
            "acc_snr": r.acc_snr,
            "acc_ml": r.acc_ml,
            "tau_snr": r.tau_snr,
            "tau_ml": r.tau_ml,
            "n_trials": r.n_trials,
            "seed": r.seed,
            "p": list(prob.p),
            "upper_factor": protocol.upper_factor,
        }
    )
    return 0


def _load_train_dataset(args) -> Dataset:
    if args.dataset == "synth":
        return synth_blobs(
            class_count=args.synth_classes,
            dim=args.synth_dim,
            samples_per_class=args.synth_samples_per_class,
            separation=args.synth_separation,
            seed=args.seed,
        )
    data_dir = os.environ.get("SNR_DATA_DIR", "")
    images = args.images or (data_dir and os.path.join(data_dir, MNIST_FILES[0]))
    labels = args.labels or (data_dir and os.path.join(data_dir, MNIST_FILES[1]))
    if not images or not labels or not (
        os.path.exists(images) and os.path.exists(labels)
    ):
        raise FileNotFoundError(
            f"MNIST files not found (images={images or '?'}, labels={labels or '?'}).\n"
            + FETCH_HINT
        )
    return load_idx(images, labels)


def cmd_train(args) -> int:
    ds = _load_train_dataset(args)
    if args.limit is not None:
        if args.limit < 2:
            raise ValueError("--limit must be >= 2")
        take = np.random.default_rng([args.seed, 0x11317]).permutation(len(ds))
        ds = ds.subset(take[: args.limit])
    train_set, val_set = split_dataset(ds, args.val_fraction, seed=args.seed)

    loss_mode = args.loss
    if loss_mode == "ce-snr":
        loss_mode = f"ce-snr-{args.snr_mode}"
    snr_cfg = SnrLossConfig(
        lam=args.snr_lambda,
        margin=args.snr_margin,
        eps=args.snr_eps,
        weight=args.snr_weight,
        normalize_pairs=args.snr_normalize_pairs,
    )
    cfg = TrainConfig(
        lr=args.lr,
        momentum_beta=args.momentum,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        loss_mode=loss_mode,
        snr=snr_cfg,
        m_mult=args.snr_m_mult,
        hidden_dims=tuple(args.hidden_dims),
        snr_grad_clip=args.snr_grad_clip,
        grad_clip_norm=args.grad_clip_norm,
    )
    dims = [train_set.feature_count, *cfg.hidden_dims, train_set.class_count]
    model = init_mlp(dims, seed=cfg.seed)
    records = train(model, train_set, val_set, cfg)

    with open(args.out_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss_ce", "train_loss_snr", "val_accuracy"])
        for r in records:
            writer.writerow(
                [r.epoch, f"{r.train_loss_ce:.10g}", f"{r.train_loss_snr:.10g}",
                 f"{r.val_accuracy:.10g}"]
            )
    accs = [r.val_accuracy for r in records]
    _emit(
        {
            "dataset": args.dataset,
            "loss_mode": loss_mode,
            "seed": cfg.seed,
            "epochs": cfg.epochs,
            "n_train": len(train_set),
            "n_val": len(val_set),
            "final_val_accuracy": accs[-1],
            "best_val_accuracy": max(accs),
            "final_train_loss_ce": records[-1].train_loss_ce,
            "final_train_loss_snr": records[-1].train_loss_snr,
            "eta_final": list(records[-1].eta_snapshot),
            "metrics_csv": args.out_csv,
        }
    )
    return 0


def _csv_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _csv_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snrkit",
        description="Two-moment probability bounds and SNR-loss training tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pb = sub.add_parser("bounds", help="evaluate a closed-form bound (optionally verify by enumeration)")
    pb.add_argument("--mu", type=float, required=True, help="mean")
    pb.add_argument("--var", type=float, required=True, help="variance (> 0)")
    kind = pb.add_mutually_exclusive_group(required=True)
    kind.add_argument("--tail", type=float, metavar="ETA", help="upper bound on Pr(x > eta)")
    kind.add_argument("--outside", type=float, nargs=2, metavar=("LO", "HI"),
                      help="upper bound on Pr(x <= lo or x >= hi)")
    kind.add_argument("--inside", type=float, nargs=2, metavar=("LO", "HI"),
                      help="upper and lower bounds on Pr(lo <= x <= hi)")
    pb.add_argument("--verify", action="store_true",
                    help="run the grid enumeration oracle and report the gap")
    pb.set_defaults(func=cmd_bounds)

    pp = sub.add_parser("parametric-sim", help="arccos vs likelihood-ratio Bernoulli simulation")
    pp.add_argument("--p", type=_csv_floats,
                    default=[0.001] * 4 + [0.1] * 6,
                    help="comma-separated class boundaries p_i (default: 4x0.001,6x0.1)")
    pp.add_argument("--trials", type=int, default=100_000, help="paired evaluation trials")
    pp.add_argument("--seed", type=int, default=0)
    pp.add_argument("--upper-factor", type=float, default=10.0,
                    help="class-1 theta_i ~ U(p_i, min(1, factor*p_i))")
    pp.add_argument("--calibration-trials", type=int, default=20_000)
    pp.set_defaults(func=cmd_parametric_sim)

    pt = sub.add_parser("train", help="train the MLP with CE or CE+SNR losses")
    pt.add_argument("--config", type=str, default=None,
                    help="JSON file of flat key/value settings (flags override)")
    pt.add_argument("--dataset", choices=("synth", "mnist"), default="synth")
    pt.add_argument("--images", type=str, default=None, help="IDX images path (mnist)")
    pt.add_argument("--labels", type=str, default=None, help="IDX labels path (mnist)")
    pt.add_argument("--limit", type=int, default=None,
                    help="random subset size taken before the split")
    pt.add_argument("--val-fraction", type=float, default=0.1, dest="val_fraction")
    pt.add_argument("--epochs", type=int, default=20)
    pt.add_argument("--batch-size", type=int, default=1024, dest="batch_size")
    pt.add_argument("--lr", type=float, default=0.05)
    pt.add_argument("--momentum", type=float, default=0.9)
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--loss", choices=(*LOSS_MODES, "ce-snr"), default="ce",
                    help="'ce-snr' picks the cadence from snr.mode")
    pt.add_argument("--hidden-dims", type=_csv_ints, default=[256, 128],
                    dest="hidden_dims")
    pt.add_argument("--out-csv", type=str, default="metrics.csv", dest="out_csv")
    pt.add_argument("--synth-classes", type=int, default=10, dest="synth_classes")
    pt.add_argument("--synth-dim", type=int, default=64, dest="synth_dim")
    pt.add_argument("--synth-samples-per-class", type=int, default=500,
                    dest="synth_samples_per_class")
    pt.add_argument("--synth-separation", type=float, default=6.0,
                    dest="synth_separation")
    pt.add_argument("--snr-lambda", type=float, default=SnrLossConfig.lam,
                    dest="snr_lambda", help="penalty multiplier (config key snr.lambda)")
    pt.add_argument("--snr-margin", type=float, default=SnrLossConfig.margin,
                    dest="snr_margin", help="config key snr.margin")
    pt.add_argument("--snr-eps", type=float, default=SnrLossConfig.eps,
                    dest="snr_eps", help="config key snr.eps")
    pt.add_argument("--snr-weight", type=float, default=SnrLossConfig.weight,
                    dest="snr_weight", help="config key snr.weight")
    pt.add_argument("--snr-m-mult", type=float, default=4.0, dest="snr_m_mult",
                    help="threshold offset multiplier (config key snr.m_mult)")
    pt.add_argument("--snr-mode", choices=("batch", "epoch"), default="batch",
                    dest="snr_mode", help="config key snr.mode; used with --loss ce-snr")
    pt.add_argument("--snr-normalize-pairs", type=_bool, default=True,
                    dest="snr_normalize_pairs", help="config key snr.normalize_pairs")
    pt.add_argument("--snr-grad-clip", type=float, default=TrainConfig.snr_grad_clip,
                    dest="snr_grad_clip",
                    help="elementwise cap on the SNR logit gradient in units of 1/batch (0 = off)")
    pt.add_argument("--grad-clip-norm", type=float, default=TrainConfig.grad_clip_norm,
                    dest="grad_clip_norm",
                    help="global parameter-gradient norm circuit breaker (0 = off)")
    pt.set_defaults(func=cmd_train)
    return parser


_CONFIG_DEST = {
    "val_fraction": "val_fraction", "batch_size": "batch_size",
    "hidden_dims": "hidden_dims", "out_csv": "out_csv",
    "snr.lambda": "snr_lambda", "snr.margin": "snr_margin",
    "snr.eps": "snr_eps", "snr.weight": "snr_weight",
    "snr.m_mult": "snr_m_mult", "snr.mode": "snr_mode",
    "snr.normalize_pairs": "snr_normalize_pairs",
}


def _apply_config(args, argv: list[str]):
    """Merge a --config JSON document under explicit CLI flags."""
    with open(args.config) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object")
    unknown = sorted(set(doc) - CONFIG_KEYS)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    for key, value in doc.items():
        dest = _CONFIG_DEST.get(key, key)
        if isinstance(value, str) and dest == "hidden_dims":
            value = _csv_ints(value)
        if dest == "hidden_dims" and isinstance(value, list):
            value = [int(v) for v in value]
        if dest == "snr_normalize_pairs" and not isinstance(value, bool):
            value = _bool(value)
        # explicit flags win over config values
        flag = "--" + dest.replace("_", "-")
        if flag not in argv and not any(a.startswith(flag + "=") for a in argv):
            setattr(args, dest, value)
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            args = _apply_config(args, argv)
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, IdxFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
