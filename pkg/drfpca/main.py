"""
命令行入口
负责初始化日志系统、解析参数、锁定输出目录并调用实验控制器
"""

import argparse
import atexit
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional, TextIO

import numpy as np
import portalocker

from drfpca import __version__
from drfpca.config.config_manager import get_config
from drfpca.exceptions import DrfpcaError
from drfpca.service_function.experiment_app import ExperimentConfig, ExperimentController

logger = logging.getLogger("Main")

LOG_FORMAT = "[%(name)s] %(levelname)s: %(message)s"
LOCK_NAME = ".drfpca.lock"

# 各命令在用户未给出参数时使用的默认值
COMMAND_DEFAULTS = {
    "sweep": {"repeats": 5},
    "radius": {"lam": 0.1, "alpha_grid": tuple(np.linspace(0.0, 10.0, 21)), "repeats": 10},
    "components": {"lam": 0.5, "alpha": 0.15, "repeats": 5},
}


class IgnoreSolverNoise(logging.Filter):
    """丢弃求解器逐次迭代的 DEBUG 轨迹，--verbose 时保留"""

    def __init__(self, verbose: bool = False):
        super().__init__()
        self.verbose = verbose

    def filter(self, record):
        if self.verbose:
            return True
        if record.levelno == logging.DEBUG and record.name.startswith("drfpca.optimizer"):
            return not record.getMessage().startswith("iter ")
        return True


def setup_logging(level: str = "INFO", verbose: bool = False):
    """根日志器只装一个 stderr handler，过滤器挂在 handler 上"""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_drfpca", False):
            root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler.addFilter(IgnoreSolverNoise(verbose))
    handler._drfpca = True
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else getattr(logging, str(level).upper(), logging.INFO))
    logging.captureWarnings(True)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)


def _float_list(text: str):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return tuple(values)


def _eps0(text: str):
    if text == "scaled":
        return "scaled"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--eps0 takes a number or 'scaled', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="settings JSON merged over the defaults")
    common.add_argument("--input", help="input CSV with a header row")
    common.add_argument("--attr", help="sensitive attribute column (name or zero-based index)")
    common.add_argument("--k", type=int, help="number of principal components to keep")
    common.add_argument("--lambda", dest="lam", type=float, help="fairness penalty")
    common.add_argument("--alpha", type=float, help="radius scale, eps_a = alpha / sqrt(N_a)")
    common.add_argument("--lambda-grid", type=_float_list, help="comma separated lambda grid")
    common.add_argument("--alpha-grid", type=_float_list, help="comma separated alpha grid")
    common.add_argument("--iters", dest="iterations", type=int, help="iterations per restart")
    common.add_argument("--restarts", type=int, help="random initial points")
    common.add_argument("--retraction", choices=["qf", "polar"])
    common.add_argument("--step", dest="step_override", type=float, help="constant step size override")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int, help="worker threads (default: physical cores)")
    split = common.add_mutually_exclusive_group()
    split.add_argument("--split", type=float, help="training share of the stratified split")
    split.add_argument("--no-split", action="store_true", help="train and evaluate on all rows")
    common.add_argument("--folds", type=int, help="cross validation folds")
    common.add_argument("--repeats", type=int, help="seeded repetitions to average over")
    common.add_argument("--out", help="output directory")
    common.add_argument("--test-center", choices=["train", "test"])
    common.add_argument("--encoding", dest="matrix_encoding", choices=["nested", "base64"])
    common.add_argument("--eps0", type=_eps0, help="radius study: fixed eps_0 or 'scaled'")
    common.add_argument("--n0", type=int, help="toy data: group 0 size")
    common.add_argument("--n1", type=int, help="toy data: group 1 size")
    common.add_argument("--log-level", help="overrides log.level from the settings")
    common.add_argument("--save-config", metavar="PATH", help="write the effective settings to PATH as JSON")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging incl. solver traces")

    parser = argparse.ArgumentParser(prog="drfpca", description="Distributionally robust fairness-aware PCA")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "fit": "fit robust fair PCA at one (lambda, alpha)",
        "pca": "nominal PCA baseline",
        "sweep": "lambda x alpha grid, Pareto CSV + SVG",
        "cv": "cross validated hyperparameter selection",
        "fairtest": "rank test for an exactly fair projection",
        "toy": "write the two-Gaussian toy dataset",
        "radius": "ambiguity radius study on the toy data",
        "components": "subgroup errors as k varies",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def experiment_config(args) -> ExperimentConfig:
    config = get_config(args.config) if args.config else get_config()
    overrides = {
        name: getattr(args, name)
        for name in ("input", "attr", "k", "lam", "alpha", "lambda_grid", "alpha_grid", "iterations", "restarts",
                     "retraction", "step_override", "seed", "workers", "split", "folds", "repeats", "out",
                     "test_center", "matrix_encoding")
    }
    for name, value in COMMAND_DEFAULTS.get(args.command, {}).items():
        if overrides.get(name) is None:
            overrides[name] = value
    if args.eps0 is not None and args.eps0 != "scaled":
        overrides["eps0"] = args.eps0
    if args.n0 is not None or args.n1 is not None:
        overrides["toy_sizes"] = (args.n0 or 200, args.n1 or 100)
    cfg = ExperimentConfig.from_config(config, **overrides)
    if args.eps0 == "scaled":
        cfg = replace(cfg, eps0=None)
    if args.no_split or (args.command == "sweep" and args.split is None):
        cfg = replace(cfg, split=None)
    return cfg


lock_file_handle: Optional[TextIO] = None


def acquire_output_lock(directory: str) -> bool:
    """
    输出目录上的排他非阻塞文件锁，已被占用时返回 False
    """
    global lock_file_handle
    os.makedirs(directory, exist_ok=True)
    try:
        lock_file_handle = open(os.path.join(directory, LOCK_NAME), "w")
        portalocker.lock(lock_file_handle, portalocker.LOCK_EX | portalocker.LOCK_NB)
        return True
    except portalocker.exceptions.LockException:
        lock_file_handle.close()
        lock_file_handle = None
        return False


def release_output_lock():
    global lock_file_handle
    if lock_file_handle is not None:
        try:
            portalocker.unlock(lock_file_handle)
            lock_file_handle.close()
            os.remove(lock_file_handle.name)
        except OSError as e:
            logger.warning("Failed to release lock file: %s", e)
        lock_file_handle = None


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = get_config(args.config) if args.config else get_config()
        if args.log_level:
            config.set("log", "level", args.log_level.upper(), persist=False)
        setup_logging(config.log.get("level", "INFO"), args.verbose)
        cfg = experiment_config(args)
        if args.save_config:
            cfg.store(config)
            config.save(args.save_config)
    except DrfpcaError as e:
        logging.basicConfig(format=LOG_FORMAT)
        logger.error("%s", e)
        return e.exit_code
    except (OSError, ValueError) as e:
        logging.basicConfig(format=LOG_FORMAT)
        logger.error("Cannot read settings: %s", e)
        return 2

    if not acquire_output_lock(cfg.out):
        logger.error("Another run is writing to %s", cfg.out)
        return 1
    atexit.register(release_output_lock)

    try:
        ExperimentController(cfg).run(args.command)
    except DrfpcaError as e:
        logger.error("%s", e)
        return e.exit_code
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return 130
    finally:
        release_output_lock()
    return 0


if __name__ == "__main__":
    sys.exit(main())
