"""Command line entry point.

One binary, subcommand style. Every command writes a ``manifest`` record
beside its outputs with the resolved argument values, and any such manifest
can be re-executed with ``sogclab --manifest PATH``. Outputs are
deterministic: CSVs use LF endings, ASCII headers and 17-digit floats, and
manifests carry no timestamps.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numeric failure.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .errors import GenerationError, NumericError
from .graphs import Graph
from .models import (
    NetworkConfig,
    TrainSchedule,
    count_parameters,
    evaluate,
    load_checkpoint,
    network_forward,
    save_checkpoint,
    train,
)
from .polyfilter import PolyFilter, factor_quadratics, lss_dimension
from .serialize import csv_lines, dumps, fmt_float, write_text
from .sgs import FilterKind, generate_dataset, load_dataset
from .spectral import eigendecompose, gft

KIND_ALIASES = {"hp": FilterKind.HIGH_PASS, "lp": FilterKind.LOW_PASS,
                "bp": FilterKind.BAND_PASS}
MODEL_CHOICES = ("vanilla", "gin", "so", "korder3", "korder4", "korder6")


def _model_config(model: str, depth: int, width: int, activation: str,
                  use_gru: bool, seed: int) -> NetworkConfig:
    if model.startswith("korder"):
        kind, order = "korder", int(model[len("korder"):])
    else:
        kind, order = model, 0
    return NetworkConfig(kind=kind, order=order, depth=depth, width=width,
                         activation=activation, use_gru=use_gru, seed=seed)


def _write_manifest(out_dir: Path, command: str, args: dict,
                    extra: dict | None = None) -> None:
    """Record the run beside its outputs; ``args`` is keyed by parameter name."""
    doc = {
        "command": command,
        "args": args,
        "versions": {"sogclab": __version__, "numpy": np.__version__},
    }
    if extra:
        doc.update(extra)
    write_text(out_dir / "manifest", dumps(doc) + "\n")


def _replay_manifest(ctx: click.Context, _param, value):
    if not value or ctx.resilient_parsing:
        return
    try:
        doc = json.loads(Path(value).read_text(encoding="ascii"))
    except OSError as exc:
        raise OSError(f"failed reading manifest {value}: {exc}") from exc
    command = doc.get("command")
    args = doc.get("args", {})
    target = cli.get_command(ctx, command)
    if target is None:
        raise click.UsageError(f"manifest names unknown command {command!r}")
    target.main(args=_args_to_argv(target, args), standalone_mode=False)
    ctx.exit(0)


def _args_to_argv(command: click.Command, args: dict) -> list[str]:
    argv: list[str] = []
    positional: list[str] = []
    by_name = {p.name: p for p in command.params}
    for key, value in args.items():
        param = by_name.get(key)
        if param is None:
            raise click.UsageError(f"manifest has unknown argument {key!r}")
        if isinstance(param, click.Argument):
            if value is not None:
                positional.append(str(value))
        elif isinstance(value, bool):
            if value:
                argv.append(param.opts[0])
        elif value is not None:
            argv.extend([param.opts[0], str(value)])
    return argv + positional


@click.group()
@click.version_option(version=__version__, prog_name="sogclab")
@click.option("--manifest", "manifest_path", type=click.Path(exists=False),
              callback=_replay_manifest, expose_value=False, is_eager=True,
              help="Replay a previously written run manifest and exit.")
def cli():
    """Polynomial graph filters, synthetic spectrum data, and GCN training."""


@cli.command("gen-data")
@click.option("--kind", type=click.Choice(sorted(KIND_ALIASES)), required=True,
              help="Target filter: hp, lp or bp.")
@click.option("--train", "n_train", type=int, default=1000, show_default=True)
@click.option("--val", "n_val", type=int, default=1000, show_default=True)
@click.option("--test", "n_test", type=int, default=2000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--threads", type=int, default=None,
              help="Worker count for sample generation (default: all cores).")
def cmd_gen_data(kind, n_train, n_val, n_test, seed, out_dir, threads):
    """Generate train/val/test splits of the synthetic filtering dataset."""
    if min(n_train, n_val, n_test) < 1:
        raise click.UsageError("split sizes must be >= 1")
    lib_manifest = generate_dataset(KIND_ALIASES[kind], n_train, n_val, n_test,
                                    seed, out_dir, threads=threads)
    out = Path(out_dir)
    _write_manifest(out, "gen-data",
                    {"kind": kind, "n_train": n_train, "n_val": n_val,
                     "n_test": n_test, "seed": seed, "out_dir": str(out),
                     "threads": threads},
                    extra={"generator": lib_manifest["generator"]})
    click.echo(f"wrote {out / 'train.sgs'}, {out / 'val.sgs'}, {out / 'test.sgs'}")


def _train_options(f):
    decorators = [
        click.option("--data", "data_dir", type=click.Path(exists=True),
                     required=True, help="Dataset directory from gen-data."),
        click.option("--width", type=int, default=16, show_default=True),
        click.option("--epochs", type=int, default=300, show_default=True),
        click.option("--batch-size", type=int, default=128, show_default=True),
        click.option("--lr", type=float, default=0.01, show_default=True),
        click.option("--patience", type=int, default=10, show_default=True),
        click.option("--min-lr", type=float, default=1e-5, show_default=True),
        click.option("--activation", type=click.Choice(["identity", "relu"]),
                     default="identity", show_default=True),
        click.option("--gru", "use_gru", is_flag=True, default=False,
                     help="Append the shared GRU after each conv layer."),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--deterministic", is_flag=True, default=False,
                     help="Force ordered reductions (runs are single-threaded "
                          "and deterministic regardless; flag is recorded)."),
    ]
    for dec in reversed(decorators):
        f = dec(f)
    return f


def _schedule(epochs, batch_size, lr, patience, min_lr) -> TrainSchedule:
    return TrainSchedule(lr=lr, batch_size=batch_size, max_epochs=epochs,
                         patience=patience, min_lr=min_lr)


@cli.command("train")
@click.option("--model", type=click.Choice(MODEL_CHOICES), default="so",
              show_default=True)
@click.option("--depth", type=int, default=8, show_default=True)
@_train_options
@click.option("--out", "out_dir", type=click.Path(), required=True)
def cmd_train(model, depth, data_dir, width, epochs, batch_size, lr, patience,
              min_lr, activation, use_gru, seed, deterministic, out_dir):
    """Train one model; writes checkpoint.json and history.csv."""
    data = load_dataset(data_dir)
    config = _model_config(model, depth, width, activation, use_gru, seed)
    schedule = _schedule(epochs, batch_size, lr, patience, min_lr)
    params, history = train(config, data, schedule)
    out = Path(out_dir)
    save_checkpoint(out / "checkpoint.json", config, params)
    rows = [[h["epoch"], h["lr"], h["train_mae"], h["val_mae"]] for h in history]
    write_text(out / "history.csv",
               csv_lines(["epoch", "lr", "train_mae", "val_mae"], rows))
    test_mae = evaluate(params, config, data["test"])
    _write_manifest(out, "train",
                    {"model": model, "depth": depth,
                     "data_dir": str(data_dir), "width": width,
                     "epochs": epochs, "batch_size": batch_size, "lr": lr,
                     "patience": patience, "min_lr": min_lr,
                     "activation": activation, "use_gru": use_gru,
                     "seed": seed, "deterministic": deterministic,
                     "out_dir": str(out)})
    click.echo(f"parameters: {count_parameters(config)}")
    click.echo(f"final val MAE: {fmt_float(history[-1]['val_mae'])}")
    click.echo(f"test MAE: {fmt_float(test_mae)}")


@cli.command("eval")
@click.option("--checkpoint", "ckpt_path", type=click.Path(exists=True),
              required=True)
@click.option("--data", "data_dir", type=click.Path(exists=True), required=True)
@click.option("--split", type=click.Choice(["train", "val", "test"]),
              default="test", show_default=True)
def cmd_eval(ckpt_path, data_dir, split):
    """Evaluate a checkpoint on one dataset split; prints the MAE."""
    config, params = load_checkpoint(ckpt_path)
    data = load_dataset(data_dir)
    click.echo(fmt_float(evaluate(params, config, data[split])))


@cli.command("sweep-depth")
@click.option("--models", "models_csv", default="vanilla,gin,so,korder4",
              show_default=True, help="Comma-separated model kinds.")
@click.option("--depths", "depths_csv", default="2,4,8", show_default=True,
              help="Comma-separated layer counts.")
@_train_options
@click.option("--out", "out_dir", type=click.Path(), required=True)
def cmd_sweep_depth(models_csv, depths_csv, data_dir, width, epochs, batch_size,
                    lr, patience, min_lr, activation, use_gru, seed,
                    deterministic, out_dir):
    """Train every (depth, model) pair and tabulate test MAE."""
    try:
        depths = [int(d) for d in depths_csv.split(",") if d.strip()]
    except ValueError as exc:
        raise click.UsageError(f"bad --depths value: {exc}") from exc
    models = [m.strip() for m in models_csv.split(",") if m.strip()]
    for m in models:
        if m not in MODEL_CHOICES:
            raise click.UsageError(f"unknown model {m!r}")
    if not depths or not models:
        raise click.UsageError("need at least one depth and one model")
    data = load_dataset(data_dir)
    schedule = _schedule(epochs, batch_size, lr, patience, min_lr)
    rows = []
    for depth in depths:
        for model in models:
            config = _model_config(model, depth, width, activation, use_gru, seed)
            params, _ = train(config, data, schedule)
            rows.append([depth, model, evaluate(params, config, data["test"])])
    out = Path(out_dir)
    write_text(out / "sweep.csv", csv_lines(["layers", "model", "test_mae"], rows))
    _write_manifest(out, "sweep-depth",
                    {"models_csv": models_csv, "depths_csv": depths_csv,
                     "data_dir": str(data_dir), "width": width,
                     "epochs": epochs, "batch_size": batch_size, "lr": lr,
                     "patience": patience, "min_lr": min_lr,
                     "activation": activation, "use_gru": use_gru,
                     "seed": seed, "deterministic": deterministic,
                     "out_dir": str(out)})
    click.echo(f"wrote {out / 'sweep.csv'} ({len(rows)} rows)")


@cli.command("spectrum")
@click.option("--checkpoint", "ckpt_path", type=click.Path(exists=True),
              required=True)
@click.option("--data", "data_dir", type=click.Path(exists=True), required=True)
@click.option("--split", type=click.Choice(["train", "val", "test"]),
              default="test", show_default=True)
@click.option("--index", type=int, default=0, show_default=True,
              help="Sample index within the split.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
def cmd_spectrum(ckpt_path, data_dir, split, index, out_dir):
    """Project input, per-layer and output activations onto the eigenbasis.

    Writes one CSV per stage with columns eigen_index, eigenvalue and one
    column per signal channel.
    """
    config, params = load_checkpoint(ckpt_path)
    samples = load_dataset(data_dir)[split]
    if not 0 <= index < len(samples):
        raise click.UsageError(
            f"index {index} out of range for split of {len(samples)}"
        )
    sample = samples[index]
    basis = eigendecompose(sample.graph.norm_adjacency)
    out_val, hidden = network_forward(config, params, sample.graph, sample.x,
                                      return_hidden=True)
    out = Path(out_dir)

    def dump_stage(name: str, signal: np.ndarray):
        spec = gft(basis, signal)
        header = ["eigen_index", "eigenvalue"] + [
            f"channel_{c}" for c in range(spec.shape[1])
        ]
        rows = [
            [i, basis.eigenvalues[i]] + [spec[i, c] for c in range(spec.shape[1])]
            for i in range(spec.shape[0])
        ]
        write_text(out / f"spectrum_{name}.csv", csv_lines(header, rows))

    dump_stage("input", sample.x[:, None])
    for l, h in enumerate(hidden, start=1):
        dump_stage(f"layer_{l:02d}", h)
    if config.readout != "graph_sum":
        dump_stage("output", out_val)
    _write_manifest(out, "spectrum",
                    {"ckpt_path": str(ckpt_path), "data_dir": str(data_dir),
                     "split": split, "index": index, "out_dir": str(out)})
    click.echo(f"wrote spectrum CSVs to {out}")


def _parse_coeffs(text: str) -> PolyFilter:
    try:
        coeffs = tuple(float(v) for v in text.replace("\n", ",").split(",")
                       if v.strip())
    except ValueError as exc:
        raise click.UsageError(f"bad coefficient list: {exc}") from exc
    if not coeffs:
        raise click.UsageError("empty coefficient list")
    return PolyFilter(coeffs)


@cli.command("factorize",
             context_settings={"ignore_unknown_options": True})
@click.argument("coeffs", required=False)
@click.option("--file", "coeff_file", type=click.Path(exists=True),
              help="Read coefficients (constant first, comma-separated) from a file.")
@click.option("--tol", type=float, default=1e-6, show_default=True,
              help="Relative re-expansion tolerance.")
def cmd_factorize(coeffs, coeff_file, tol):
    """Factor a polynomial (constant-first coefficients) into a quadratic cascade."""
    if (coeffs is None) == (coeff_file is None):
        raise click.UsageError("provide either COEFFS or --file, not both")
    text = coeffs if coeffs is not None else Path(coeff_file).read_text("ascii")
    p = _parse_coeffs(text)
    cascade = factor_quadratics(p, tol=tol)
    for f in cascade.factors:
        click.echo("factor: (" + ", ".join(fmt_float(c) for c in f.coeffs) + ")")
    click.echo(f"scale: {fmt_float(cascade.leading_scale)}")
    expanded = np.asarray(cascade.expanded().coeffs)
    orig = np.asarray(p.coeffs)
    residual = float(np.abs(expanded - orig).max() / np.abs(orig).max())
    click.echo(f"residual: {fmt_float(residual)}")


@cli.command("lss-dim")
@click.option("--graphs", "graphs_path", type=click.Path(exists=True),
              required=True,
              help="File with one JSON graph record per line "
                   '({"num_nodes": N, "edges": [[u, v], ...]}).')
@click.option("--order", type=int, required=True, help="Filter polynomial order K.")
@click.option("--rank-tol", type=float, default=1e-9, show_default=True)
def cmd_lss_dim(graphs_path, order, rank_tol):
    """Dimension of the order-K filter space spanned over a stored graph set."""
    if order < 0:
        raise click.UsageError("--order must be >= 0")
    graphs = []
    for line in Path(graphs_path).read_text("ascii").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        graphs.append(Graph(int(rec["num_nodes"]),
                            tuple((u, v) for u, v in rec["edges"])))
    if not graphs:
        raise click.UsageError(f"no graph records in {graphs_path}")
    click.echo(str(lss_dimension(graphs, order, rank_tol=rank_tol)))


def main(argv=None) -> int:
    """Run the CLI with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except (NumericError, GenerationError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
