"""Command-line pipeline: gen, pretrain, finetune, predict, eval, sweep, inspect.

Every subcommand is deterministic given its full argument list; progress
output is line-oriented key=value text without timestamps so reruns produce
byte-identical logs. Exit codes: 0 success, 1 runtime/I-O failure, 2
argument errors (argparse).
"""

import argparse
import json
import sys
from pathlib import Path

from .backend import backend_name
from .contour import F0Track
from .corpus import (assemble_features, assemble_samples, format_f0,
                     generate_synthetic_corpus, load_corpus, load_model,
                     parse_annotation, parse_durations, save_model, split)
from .dbn import greedy_train
from .dnn import FinetuneConfig, finetune, init_from_dbn
from .evaluate import (SweepSpec, evaluate_corpus, format_sweep_table,
                       predict_contour, rmse, run_sweep, xcorr)
from .features import default_inventory, load_inventory
from .rbm import RbmTrainConfig


def _inventory(args):
    return load_inventory(args.inventory) if args.inventory else default_inventory()


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _split_counts(text):
    counts = _int_list(text)
    if len(counts) != 3:
        raise argparse.ArgumentTypeError("--split needs three counts: train,cv,test")
    return counts


def _labeled_subcorpus(corpus):
    from .corpus import Corpus
    labeled = {uid: u for uid, u in corpus.utterances.items() if u.labeled}
    return Corpus(labeled)


def cmd_gen(args):
    manifest = generate_synthetic_corpus(args.out, args.utterances,
                                         _inventory(args), args.seed,
                                         noise_std=args.noise)
    corpus = load_corpus(manifest)
    n_phonemes = sum(corpus[u].annotation.n_phonemes() for u in corpus.ids)
    print(f"manifest={manifest}")
    print(f"utterances={len(corpus)} phonemes={n_phonemes} seed={args.seed}")
    return 0


def cmd_pretrain(args):
    corpus = load_corpus(args.corpus)
    inventory = _inventory(args)
    feats = assemble_features(corpus, corpus.ids, inventory)
    sizes = [feats.shape[1]] + _int_list(args.layers)
    config = RbmTrainConfig(learning_rate=args.lr, momentum=args.momentum,
                            epochs=args.epochs, minibatch_size=args.minibatch,
                            cd_steps=args.cd_steps, seed=args.seed)
    log_path = Path(args.log) if args.log else Path(str(args.out) + ".log")
    log_path.parent.mkdir(parents=True, exist_ok=True)
    with open(log_path, "w", encoding="utf-8") as log:
        def layer_callback(layer_index):
            def epoch_callback(epoch, recon_rmse):
                log.write(f"layer={layer_index + 1} epoch={epoch + 1} "
                          f"recon_rmse={recon_rmse!r}\n")
            return epoch_callback
        model = greedy_train(feats, sizes, config, layer_callback=layer_callback)
    save_model(model, args.out, config=config, seed=args.seed)
    print(f"model={args.out}")
    print(f"layers={len(model.layers)} sizes={','.join(map(str, model.layer_sizes))} "
          f"examples={feats.shape[0]} log={log_path}")
    return 0


def cmd_finetune(args):
    corpus = load_corpus(args.corpus)
    inventory = _inventory(args)
    dbn_file = load_model(args.dbn)
    if dbn_file.kind != "dbn":
        raise ValueError(f"{args.dbn} is a {dbn_file.kind} model, expected dbn")
    labeled = _labeled_subcorpus(corpus)
    parts = split(labeled, args.split, args.split_seed)
    config = FinetuneConfig(
        initial_learning_rate=args.lr,
        minibatch_phonemes=args.minibatch_phonemes,
        weight_decay=args.weight_decay, sparsity_target=args.sparsity_target,
        sparsity_weight=args.sparsity_weight, patience_epochs=args.patience,
        lr_decay_factor=args.lr_decay, max_epochs=args.epochs, seed=args.seed)
    train = assemble_samples(labeled, parts.train, inventory)
    cv = assemble_samples(labeled, parts.cv, inventory)
    model = init_from_dbn(dbn_file.model, seed=args.seed)
    tuned, history = finetune(model, train, cv, config)
    save_model(tuned, args.out, config=config, seed=args.seed)
    history_path = Path(args.history) if args.history \
        else Path(str(args.out) + ".history.json")
    history_path.parent.mkdir(parents=True, exist_ok=True)
    history_path.write_text(
        json.dumps(history, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8")
    print(f"model={args.out}")
    print(f"train_samples={len(train)} cv_samples={len(cv)} "
          f"epochs={len(history['epochs'])} lr_halvings={len(history['lr_events'])}")
    for event in history["lr_events"]:
        print(f"lr_halved epoch={event['epoch']} "
              f"lr_before={event['lr_before']!r} lr_after={event['lr_after']!r}")
    print(f"history={history_path}")
    return 0


def cmd_predict(args):
    model_file = load_model(args.model)
    if model_file.kind != "dnn":
        raise ValueError(f"{args.model} is a {model_file.kind} model, expected dnn")
    annotation = parse_annotation(Path(args.annotation).read_text(encoding="utf-8"))
    durations = parse_durations(Path(args.durations).read_text(encoding="utf-8"))
    if durations.frames.shape[0] != annotation.n_phonemes():
        raise ValueError("durations and annotation disagree on phoneme count")
    contour = predict_contour(model_file.model, annotation, durations,
                              _inventory(args))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(format_f0(F0Track(contour.values)), encoding="utf-8")
    print(f"track={out} frames={len(contour)}")
    return 0


def cmd_eval(args):
    if args.pred_track:
        if not args.ref_track:
            raise ValueError("--pred-track needs --ref-track")
        from .corpus import parse_f0
        pred = parse_f0(Path(args.pred_track).read_text(encoding="utf-8"))
        ref = parse_f0(Path(args.ref_track).read_text(encoding="utf-8"))
        print(f"rmse_hz={rmse(pred.values, ref.values)!r} "
              f"xcorr={xcorr(pred.values, ref.values)!r} "
              f"n_frames={pred.values.shape[0]}")
        return 0
    if not (args.model and args.corpus):
        raise ValueError("eval needs either --pred-track/--ref-track or "
                         "--model/--corpus")
    model_file = load_model(args.model)
    labeled = _labeled_subcorpus(load_corpus(args.corpus))
    parts = split(labeled, args.split, args.split_seed)
    per_utt, agg = evaluate_corpus(model_file.model, labeled, parts.test,
                                   _inventory(args), voiced_only=args.voiced_only)
    for utt_id, res in per_utt.items():
        print(f"utt={utt_id} rmse_hz={res.rmse!r} xcorr={res.xcorr!r} "
              f"n_frames={res.n_frames}")
    print(f"aggregate rmse_hz={agg.rmse!r} xcorr={agg.xcorr!r} "
          f"n_frames={agg.n_frames}")
    return 0


def cmd_sweep(args):
    labeled = _labeled_subcorpus(load_corpus(args.corpus))
    parts = split(labeled, args.split, args.split_seed)
    spec = SweepSpec(
        hidden_layer_counts=_int_list(args.layers),
        units_per_layer=_int_list(args.units),
        rbm_config=RbmTrainConfig(epochs=args.rbm_epochs, seed=0),
        finetune_config=FinetuneConfig(initial_learning_rate=args.lr,
                                       max_epochs=args.epochs, seed=0),
        seed=args.seed)
    rows, best = run_sweep(
        labeled, parts, spec, _inventory(args), out_dir=args.out,
        progress=lambda row: print(
            f"cell layers={row.layers} units={row.units} "
            f"rmse_hz={row.result.rmse!r} xcorr={row.result.xcorr!r}"))
    print(f"best layers={best.layers} units={best.units} "
          f"rmse_hz={best.result.rmse!r} xcorr={best.result.xcorr!r}")
    print(f"table={Path(args.out) / 'table.tsv'}")
    return 0


def cmd_inspect(args):
    model_file = load_model(args.model)
    model = model_file.model
    if model_file.kind == "dbn":
        sizes = model.layer_sizes
    else:
        sizes = [model.input_dim] + [w.shape[1] for w, _ in model.hidden_layers] \
            + [model.output_dim]
        print(f"target_mean={model.target_mean!r} target_std={model.target_std!r}")
    print(f"kind={model_file.kind} format_version={model_file.format_version} "
          f"seed={model_file.seed}")
    print(f"layer_sizes={','.join(map(str, sizes))}")
    print(f"config={json.dumps(model_file.config, sort_keys=True)}")
    print(f"checksum=ok backend={backend_name()}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dbnf0",
        description="F0 contour prediction with a DBN-pretrained DNN")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_inventory(p):
        p.add_argument("--inventory", help="phoneme inventory file "
                       "(default: packaged 46-symbol set)")

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--utterances", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0,
                   help="Gaussian noise std on state targets (log-Hz)")
    add_inventory(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("pretrain", help="greedy layer-wise RBM pretraining")
    p.add_argument("--corpus", required=True, help="manifest path")
    p.add_argument("--out", required=True, help="output model path")
    p.add_argument("--layers", default="120,120,120,120,120,120,120",
                   help="hidden layer sizes, comma-separated")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.002)
    p.add_argument("--momentum", type=float, default=0.95)
    p.add_argument("--minibatch", type=int, default=10)
    p.add_argument("--cd-steps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log", help="per-epoch log path (default: <out>.log)")
    add_inventory(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("finetune", help="backprop fine-tuning of the DNN")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dbn", required=True, help="pretrained stack model")
    p.add_argument("--out", required=True)
    p.add_argument("--history", help="history JSON path (default: <out>.history.json)")
    p.add_argument("--split", type=_split_counts, default=[500, 200, 300],
                   help="train,cv,test utterance counts")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--minibatch-phonemes", type=int, default=20)
    p.add_argument("--weight-decay", type=float, default=0.002)
    p.add_argument("--sparsity-target", type=float, default=0.05)
    p.add_argument("--sparsity-weight", type=float, default=0.001)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--lr-decay", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    add_inventory(p)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("predict", help="predict a frame-level F0 track")
    p.add_argument("--model", required=True, help="fine-tuned dnn model")
    p.add_argument("--annotation", required=True)
    p.add_argument("--durations", required=True)
    p.add_argument("--out", required=True, help="output track path")
    add_inventory(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="objective evaluation (RMSE/XCORR)")
    p.add_argument("--model")
    p.add_argument("--corpus")
    p.add_argument("--split", type=_split_counts, default=[500, 200, 300])
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--voiced-only", action="store_true",
                   help="score only frames voiced in the reference")
    p.add_argument("--pred-track", help="compare two track files instead")
    p.add_argument("--ref-track")
    add_inventory(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="architecture grid sweep")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output directory for tables")
    p.add_argument("--layers", default="4,5,6,7")
    p.add_argument("--units", default="40,80,120,160,200")
    p.add_argument("--split", type=_split_counts, default=[500, 200, 300])
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--rbm-epochs", type=int, default=50)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    add_inventory(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("inspect", help="print model metadata")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
