"""Objective evaluation (RMSE, zero-lag Pearson XCORR) and the grid sweep.

Predicted contours are compared against the continuized reference (all
frames) by default; `voiced_only` restricts the comparison to frames voiced
in the raw reference track. Aggregation pools MSE frame-weighted (equal to
computing RMSE over the concatenated frames) and frame-weights the
per-utterance correlations.
"""

from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path

import numpy as np

from .contour import StateF0, continuize, spline_expand
from .corpus import assemble_features, assemble_samples
from .dbn import greedy_train
from .dnn import FinetuneConfig, finetune, init_from_dbn, predict_states
from .features import encode_utterance
from .numerics import derive_seed
from .rbm import RbmTrainConfig


@dataclass
class EvalResult:
    rmse: float  # Hz
    xcorr: float
    n_frames: int

    def __post_init__(self):
        if self.rmse < 0 or abs(self.xcorr) > 1.0 + 1e-12:
            raise ValueError("rmse must be >= 0 and |xcorr| <= 1")


def _values(contour):
    return contour.values if hasattr(contour, "values") else np.asarray(contour)


def rmse(pred, ref):
    """Root mean squared difference in Hz over aligned frames."""
    a, b = _values(pred), _values(ref)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("contours must be 1-D and equally long")
    if a.shape[0] == 0:
        raise ValueError("contours must be non-empty")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def xcorr(pred, ref):
    """Zero-lag Pearson correlation of two contours."""
    a, b = _values(pred), _values(ref)
    if a.shape != b.shape or a.ndim != 1 or a.shape[0] < 2:
        raise ValueError("correlation needs two equally long contours (>= 2 frames)")
    da, db = a - np.mean(a), b - np.mean(b)
    na, nb = np.sqrt(np.sum(da ** 2)), np.sqrt(np.sum(db ** 2))
    if na == 0.0 or nb == 0.0:
        raise ValueError("correlation is undefined for constant contours")
    return float(np.dot(da, db) / (na * nb))


def predict_contour(model, annotation, durations, inventory, frame_period=0.010):
    """Synthesis-time path: features -> per-state log-F0 -> spline expansion."""
    feats = encode_utterance(annotation, inventory)
    states = StateF0(np.stack([predict_states(model, f) for f in feats]))
    return spline_expand(states, durations, frame_period)


def evaluate_utterance(model, annotation, durations, ref_track, inventory,
                       voiced_only=False):
    """Predict one utterance and score it against its reference track."""
    pred = predict_contour(model, annotation, durations, inventory,
                           ref_track.frame_period)
    ref = continuize(ref_track)
    if len(pred) != len(ref):
        raise ValueError("prediction and reference lengths disagree")
    p, r = pred.values, ref.values
    if voiced_only:
        mask = ref_track.voiced_mask()
        p, r = p[mask], r[mask]
    return EvalResult(rmse(p, r), xcorr(p, r), int(p.shape[0]))


def aggregate(results):
    """Frame-weighted pooling of per-utterance results."""
    if not results:
        raise ValueError("nothing to aggregate")
    frames = np.array([r.n_frames for r in results], dtype=np.float64)
    total = frames.sum()
    mse = np.array([r.rmse ** 2 for r in results])
    corr = np.array([r.xcorr for r in results])
    return EvalResult(float(np.sqrt(np.sum(mse * frames) / total)),
                      float(np.sum(corr * frames) / total), int(total))


def evaluate_corpus(model, corpus, ids, inventory, voiced_only=False):
    """Per-utterance results plus the frame-weighted aggregate."""
    per_utt = {}
    for utt_id in ids:
        utt = corpus[utt_id]
        per_utt[utt_id] = evaluate_utterance(model, utt.annotation,
                                             utt.durations, utt.f0, inventory,
                                             voiced_only)
    return per_utt, aggregate(list(per_utt.values()))


@dataclass
class SweepSpec:
    hidden_layer_counts: list = field(default_factory=lambda: [4, 5, 6, 7])
    units_per_layer: list = field(default_factory=lambda: [40, 80, 120, 160, 200])
    rbm_config: RbmTrainConfig = field(default_factory=RbmTrainConfig)
    finetune_config: FinetuneConfig = field(default_factory=FinetuneConfig)
    seed: int = 0

    def __post_init__(self):
        if not self.hidden_layer_counts or not self.units_per_layer:
            raise ValueError("sweep grids must be non-empty")


@dataclass
class SweepRow:
    layers: int
    units: int
    result: EvalResult


def train_cell(corpus, split_ids, inventory, layers, units, rbm_config,
               finetune_config, cell_seed):
    """Pretrain + fine-tune one architecture; returns the tuned model."""
    feats = assemble_features(corpus, split_ids.train, inventory)
    sizes = [feats.shape[1]] + [units] * layers
    dbn = greedy_train(feats, sizes,
                       replace(rbm_config, seed=derive_seed(cell_seed, 0)))
    model = init_from_dbn(dbn, seed=derive_seed(cell_seed, 1))
    train = assemble_samples(corpus, split_ids.train, inventory)
    cv = assemble_samples(corpus, split_ids.cv, inventory)
    tuned, history = finetune(model, train, cv,
                              replace(finetune_config,
                                      seed=derive_seed(cell_seed, 2)))
    return tuned, history


def run_sweep(corpus, split_ids, spec, inventory, out_dir=None,
              progress=None):
    """Train/evaluate every (layers, units) cell; returns (rows, best row).

    Cell seeds derive from (spec.seed, cell index), so results do not depend
    on evaluation order. Best cell: highest xcorr, ties broken by lower rmse.
    When `out_dir` is given, writes table.tsv and plot.csv.
    """
    rows = []
    grid = list(product(spec.hidden_layer_counts, spec.units_per_layer))
    for idx, (layers, units) in enumerate(grid):
        cell_seed = derive_seed(spec.seed, idx)
        model, _ = train_cell(corpus, split_ids, inventory, layers, units,
                              spec.rbm_config, spec.finetune_config, cell_seed)
        _, agg = evaluate_corpus(model, corpus, split_ids.test, inventory)
        rows.append(SweepRow(layers, units, agg))
        if progress is not None:
            progress(rows[-1])
    best = max(rows, key=lambda r: (r.result.xcorr, -r.result.rmse))
    if out_dir is not None:
        write_sweep_files(rows, best, Path(out_dir))
    return rows, best


def format_sweep_table(rows, best):
    lines = ["layers\tunits\trmse_hz\txcorr\tn_frames\tbest"]
    for row in rows:
        lines.append("\t".join([
            str(row.layers), str(row.units), repr(row.result.rmse),
            repr(row.result.xcorr), str(row.result.n_frames),
            "*" if row is best else "-"]))
    return "\n".join(lines) + "\n"


def write_sweep_files(rows, best, out_dir):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "table.tsv").write_text(format_sweep_table(rows, best),
                                       encoding="utf-8")
    plot = ["layers,units,rmse_hz,xcorr"]
    plot += [f"{r.layers},{r.units},{r.result.rmse!r},{r.result.xcorr!r}"
             for r in rows]
    (out_dir / "plot.csv").write_text("\n".join(plot) + "\n", encoding="utf-8")
