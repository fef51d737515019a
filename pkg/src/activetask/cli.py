"""Command-line pipeline over a run directory.

    activetask gen --synthetic -T 50 -n 1000 -m 100 --seed 7 -o run/
    activetask disc -i run/
    activetask select -i run/ --method active-da -k 5 --seed 0
    activetask train -i run/
    activetask eval -i run/
    activetask bound -i run/
    activetask experiment sweep.cfg

Exit status: 0 on success, 1 on validation errors, 2 on I/O errors.
"""
import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .bound import BoundConfig, bound_report, save_report
from .discrepancy import build_matrix, load_matrix, save_matrix
from .exceptions import MissingFileError, ValidationError
from .experiment import TRANSFER_METHODS, load_config, run_experiment, select_tasks
from .learners import CVConfig, evaluate, load_models, save_models, train_transfer_models
from .selection import ObjectiveConfig, load_selection, save_selection
from .tasks import draw_labeled_subsets, generate_synthetic, load_collection, save_collection

DISC_FILE = "disc.csv"
SELECTION_FILE = "selection.json"
MODELS_FILE = "models.csv"
LAMBDAS_FILE = "lambdas.csv"
EVAL_FILE = "eval.csv"
BOUND_FILE = "bound.txt"


def _require(path, what):
    if not Path(path).exists():
        raise MissingFileError(path, f"missing {what}; run the producing command first")
    return Path(path)


def cmd_gen(args):
    if not args.synthetic:
        raise ValidationError("only --synthetic generation is supported; real data is read from a manifest directory")
    coll = generate_synthetic(args.T, args.n, args.m, args.n_test, args.seed)
    save_collection(coll, args.output)
    return f"wrote {coll.T} tasks to {args.output}"


def cmd_disc(args):
    run = Path(args.input)
    coll = load_collection(_require(run / "manifest.json", "manifest.json"))
    D = build_matrix(coll, args.seed)
    save_matrix(D, run / DISC_FILE)
    return f"wrote {run / DISC_FILE}"


def cmd_select(args):
    run = Path(args.input)
    D = load_matrix(_require(run / DISC_FILE, DISC_FILE))
    if not 1 <= args.k <= D.T:
        raise ValidationError(f"k={args.k} must satisfy 1 <= k <= T={D.T}")
    coll = load_collection(_require(run / "manifest.json", "manifest.json"))
    if args.A is not None or args.B is not None:
        base = ObjectiveConfig.from_bound(coll.dim + 1, args.k, coll.m, args.delta)
        objective = ObjectiveConfig(A=base.A if args.A is None else args.A, B=base.B if args.B is None else args.B)
    else:
        objective = ObjectiveConfig.from_bound(coll.dim + 1, args.k, coll.m, args.delta)
    alpha = select_tasks(D, args.method, args.k, args.seed, objective)
    save_selection(run, alpha, args.method, args.seed)
    return f"selected I={list(alpha.I)}"


def _selection(run):
    return load_selection(_require(run / SELECTION_FILE, SELECTION_FILE))


def cmd_train(args):
    run = Path(args.input)
    coll = load_collection(_require(run / "manifest.json", "manifest.json"))
    record, alpha = _selection(run)
    if alpha.T != coll.T:
        raise ValidationError(f"selection has T={alpha.T}, collection T={coll.T}")
    seed = record["seed"]
    subsets = draw_labeled_subsets(coll, alpha.I, seed)
    cv_seed = seed if args.cv_seed is None else args.cv_seed
    models, lams = train_transfer_models(coll, alpha, subsets, CVConfig(seed=cv_seed))
    save_models(models, run / MODELS_FILE, coll.ids)
    (run / LAMBDAS_FILE).write_text("".join(f"{tid},{lam!r}\n" for tid, lam in zip(coll.ids, lams.tolist())))
    return f"wrote {run / MODELS_FILE}"


def _models(run, coll):
    ids, models = load_models(_require(run / MODELS_FILE, MODELS_FILE), coll.dim)
    if list(ids) != list(coll.ids):
        raise ValidationError(f"{MODELS_FILE} task ids do not match the collection")
    return models


def cmd_eval(args):
    run = Path(args.input)
    coll = load_collection(_require(run / "manifest.json", "manifest.json"))
    errors, mean = evaluate(_models(run, coll), coll)
    lines = ["task,test_error"] + [f"{tid},{float(e)!r}" for tid, e in zip(coll.ids, errors)]
    lines.append(f"mean,{mean!r}")
    (run / EVAL_FILE).write_text("\n".join(lines) + "\n")
    return f"mean test error {mean:.4f}"


def cmd_bound(args):
    run = Path(args.input)
    coll = load_collection(_require(run / "manifest.json", "manifest.json"))
    D = load_matrix(_require(run / DISC_FILE, DISC_FILE))
    record, alpha = _selection(run)
    models = _models(run, coll)
    subsets = draw_labeled_subsets(coll, alpha.I, record["seed"])
    cfg = BoundConfig(coll.dim + 1, alpha.k, coll.m, coll.n, coll.T, args.delta)
    report = bound_report(coll, D, alpha, models, subsets, cfg)
    save_report(report, run / BOUND_FILE)
    return f"total computable bound {report.total_computable:.4f}"


def cmd_experiment(args):
    config = load_config(_require(args.config, "experiment config"))
    if args.output:
        config.output = args.output

    def progress(cell):
        logging.getLogger("activetask").info("%s k=%d seed=%d mean=%.4f", cell.method, cell.k, cell.seed, cell.mean)

    run_experiment(config, progress=progress)
    return f"wrote {Path(config.output) / 'results.csv'}"


def build_parser():
    parser = argparse.ArgumentParser(prog="activetask", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate the synthetic benchmark")
    p.add_argument("--synthetic", action="store_true")
    p.add_argument("-T", type=int, required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-m", type=int, required=True)
    p.add_argument("--n-test", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("disc", help="estimate the pairwise discrepancy matrix")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_disc)

    p = sub.add_parser("select", help="choose labeled tasks and transfer weights")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--method", choices=TRANSFER_METHODS, required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--A", type=float, default=None, help="override the 2,1-norm coefficient")
    p.add_argument("--B", type=float, default=None, help="override the 1,2-norm coefficient")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("train", help="fit weighted ridge models for every task")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--cv-seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="0/1 test error of the trained models")
    p.add_argument("-i", "--input", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bound", help="computable terms of the generalization bound")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--delta", type=float, default=0.05)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("experiment", help="run a method/k/seed sweep from a config file")
    p.add_argument("config")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        message = args.func(args)
    except (MissingFileError, OSError) as exc:
        print(f"activetask {args.command}: I/O error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, np.linalg.LinAlgError) as exc:
        print(f"activetask {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if args.verbose and message:
        print(message, file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
