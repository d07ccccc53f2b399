"""``rom study``: simulate, split, fit along a gamma path, evaluate and map uncertainty.

Each configured rank gets a ``r<rank>/`` sub-study with its own
``gamma_sweep.csv``, model archive, report and uncertainty map.
"""

from __future__ import annotations

import argparse

from core.dataset import read_dataset
from core.methods import train_pgp
from core.pgp import fit_gamma_path, save_model, train, with_hyperparameters
from log import app_logger
from tools.common import (
    add_common_flags,
    ensure_directory,
    format_float,
    load_config,
    run_directory,
    split_snapshots,
    write_rows,
)
from tools.evaluate import evaluate_dataset
from tools.simulate import simulate_dataset
from tools.uq import write_uq


def handle(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    directory = run_directory(cfg, "study", args.out)
    simulate_dataset(cfg, directory / "dataset")
    dataset = read_dataset(directory / "dataset")
    samples, _ = split_snapshots(dataset)
    center = cfg.pod.center

    for r in cfg.study.ranks:
        sub = ensure_directory(directory / f"r{r}")
        app_logger.info("[study] rank %d sub-study in %s", r, sub)

        if cfg.study.gammas:
            base = train(
                samples,
                r,
                cfg.pgp.kernel,
                basepoint=cfg.pgp.basepoint,
                sigma_k=cfg.pgp.sigma_k,
                center=center,
            )
            path = fit_gamma_path(
                base,
                cfg.study.gammas,
                restarts=cfg.pgp.restarts,
                seed=cfg.seed,
                fit_nugget=cfg.pgp.fit_nugget,
            )
            n_xi = len(path[0].kernel.xi)
            write_rows(
                sub / "gamma_sweep.csv",
                ["gamma", *(f"xi{i + 1}" for i in range(n_xi)), "sigma_k", "log_likelihood"],
                (
                    [
                        format_float(fit.gamma),
                        *(format_float(x) for x in fit.kernel.xi),
                        format_float(fit.sigma_k),
                        format_float(fit.log_likelihood),
                    ]
                    for fit in path
                ),
            )
            chosen = next((fit for fit in path if fit.gamma == cfg.pgp.gamma), None)
            if cfg.pgp.fit and chosen is not None:
                model = with_hyperparameters(base, chosen.kernel, chosen.sigma_k)
            else:
                model = train_pgp(samples, r, cfg.pgp, cfg.seed, center)
        else:
            model = train_pgp(samples, r, cfg.pgp, cfg.seed, center)

        save_model(model, sub / "model", seed=cfg.seed)
        evaluate_dataset(cfg, dataset, sub, r=r, pgp_model=model)
        if cfg.study.uq:
            write_uq(cfg, model, sub / "uq.csv")
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("study", help="End-to-end comparative study")
    add_common_flags(parser)
    parser.set_defaults(handler=handle)
