"""Corpus ingestion, model persistence, splits, and the synthetic corpus.

File formats (all line-oriented text, canonical serialization):
  manifest    one utterance per line: id<TAB>annotation[<TAB>f0<TAB>durations],
              paths relative to the manifest; 2-field lines are
              feature-only utterances (pretraining data without targets)
  annotation  one word per line, syllables separated by '|', phonemes by spaces
  f0 track    one Hz value per line (float repr, lossless), 0 = unvoiced
  durations   one line per phoneme: 5 space-separated frame counts

Models are stored in a single self-describing JSON container with sorted
keys, float64 parameters as float.hex() strings, and a sha256 checksum over
the checksum-less canonical body. Saves are atomic (temp file + rename), so
identical content always produces identical bytes.
"""

import hashlib
import json
import os
import tempfile
from dataclasses import asdict, dataclass, is_dataclass
from pathlib import Path

import numpy as np

from .contour import (STATES_PER_PHONEME, F0Track, StateDurations, StateF0,
                      continuize, extract_state_f0, spline_expand)
from .dbn import DbnModel
from .dnn import DnnModel, TrainSample
from .features import (FEATURE_DIM, Syllable, UtteranceAnnotation, Word,
                       encode_utterance)
from .numerics import Rng, derive_seed
from .rbm import RbmParams

MODEL_FORMAT_VERSION = 1

LOG_F0_BASE = float(np.log(120.0))
# kept small so the spline round trip (expand then re-extract) stays within
# 0.02 log-Hz: the mean-over-span vs knot-value gap grows with target jumps
TARGET_WEIGHT_SCALE = 0.012
# gentle rise-fall arc across the five states of a phoneme
STATE_OFFSETS = 0.08 * np.sin(np.pi * (np.arange(STATES_PER_PHONEME) + 1) / 6.0)

_TARGET_STREAM = 1 << 24
_STRUCTURE_STREAM = 1 << 25


class CorpusError(Exception):
    """Base error for corpus loading problems."""

    def __init__(self, message, utterance_id=None):
        super().__init__(message)
        self.utterance_id = utterance_id


class MissingFileError(CorpusError):
    pass


class ParseError(CorpusError):
    pass


class AlignmentError(CorpusError):
    pass


class ModelFormatError(Exception):
    def __init__(self, message, reason):
        super().__init__(message)
        self.reason = reason  # "version" | "checksum" | "shape" | "parse"


@dataclass
class Utterance:
    id: str
    annotation: UtteranceAnnotation
    f0: F0Track = None
    durations: StateDurations = None

    @property
    def labeled(self):
        return self.f0 is not None and self.durations is not None


@dataclass
class Corpus:
    utterances: dict  # id -> Utterance, manifest order

    def __len__(self):
        return len(self.utterances)

    @property
    def ids(self):
        return list(self.utterances)

    def __getitem__(self, utt_id):
        return self.utterances[utt_id]


@dataclass
class DatasetSplit:
    train: list
    cv: list
    test: list


# --- per-file parsers/writers ---------------------------------------------------

def parse_annotation(text, utt_id=None):
    words = []
    try:
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            syllables = []
            for chunk in line.split("|"):
                phonemes = chunk.split()
                if not phonemes:
                    raise ParseError("empty syllable in annotation", utt_id)
                syllables.append(Syllable(phonemes))
            words.append(Word(syllables))
        if not words:
            raise ParseError("annotation holds no words", utt_id)
        return UtteranceAnnotation(words)
    except ValueError as exc:  # structural bound violations
        raise ParseError(f"invalid annotation: {exc}", utt_id) from None


def format_annotation(annotation):
    lines = []
    for word in annotation.words:
        lines.append(" | ".join(" ".join(s.phonemes) for s in word.syllables))
    return "\n".join(lines) + "\n"


def parse_f0(text, utt_id=None):
    values = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise ParseError(f"bad F0 value {line!r}", utt_id) from None
    return F0Track(np.array(values))


def format_f0(track):
    return "".join(repr(float(v)) + "\n" for v in track.values)


def parse_durations(text, utt_id=None):
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != STATES_PER_PHONEME:
            raise ParseError(
                f"expected {STATES_PER_PHONEME} durations per line, got {len(parts)}",
                utt_id)
        try:
            rows.append([int(p) for p in parts])
        except ValueError:
            raise ParseError(f"bad duration in {line!r}", utt_id) from None
    if not rows:
        raise ParseError("durations file holds no rows", utt_id)
    return StateDurations(np.array(rows))


def format_durations(durations):
    return "".join(" ".join(str(int(v)) for v in row) + "\n"
                   for row in durations.frames)


# --- corpus load/save -------------------------------------------------------------

def _read(path, utt_id):
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"missing file {path}", utt_id)
    return path.read_text(encoding="utf-8")


def load_corpus(manifest_path):
    """Load and validate every utterance named by the manifest."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise MissingFileError(f"missing manifest {manifest_path}")
    base = manifest_path.parent
    utterances = {}
    for lineno, line in enumerate(manifest_path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) not in (2, 4):
            raise ParseError(f"manifest line {lineno}: expected 2 or 4 fields")
        utt_id = fields[0]
        if utt_id in utterances:
            raise ParseError(f"duplicate utterance id {utt_id!r}", utt_id)
        annotation = parse_annotation(_read(base / fields[1], utt_id), utt_id)
        f0 = durations = None
        if len(fields) == 4:
            f0 = parse_f0(_read(base / fields[2], utt_id), utt_id)
            durations = parse_durations(_read(base / fields[3], utt_id), utt_id)
            if durations.frames.shape[0] != annotation.n_phonemes():
                raise AlignmentError(
                    f"{utt_id}: durations cover {durations.frames.shape[0]} phonemes "
                    f"but the annotation has {annotation.n_phonemes()}", utt_id)
            if durations.total_frames() != f0.values.shape[0]:
                raise AlignmentError(
                    f"{utt_id}: durations cover {durations.total_frames()} frames "
                    f"but the F0 track has {f0.values.shape[0]}", utt_id)
        utterances[utt_id] = Utterance(utt_id, annotation, f0, durations)
    return Corpus(utterances)


def save_corpus(corpus, out_dir):
    """Write a corpus tree (ann/, f0/, dur/ + manifest.tsv); returns manifest path."""
    out = Path(out_dir)
    for sub in ("ann", "f0", "dur"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    lines = []
    for utt in corpus.utterances.values():
        ann_rel = f"ann/{utt.id}.ann"
        (out / ann_rel).write_text(format_annotation(utt.annotation), encoding="utf-8")
        if utt.labeled:
            f0_rel, dur_rel = f"f0/{utt.id}.f0", f"dur/{utt.id}.dur"
            (out / f0_rel).write_text(format_f0(utt.f0), encoding="utf-8")
            (out / dur_rel).write_text(format_durations(utt.durations), encoding="utf-8")
            lines.append(f"{utt.id}\t{ann_rel}\t{f0_rel}\t{dur_rel}")
        else:
            lines.append(f"{utt.id}\t{ann_rel}")
    manifest = out / "manifest.tsv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def split(corpus, counts, seed):
    """Seeded shuffle of the corpus ids partitioned into train/cv/test."""
    n_train, n_cv, n_test = counts
    ids = corpus.ids
    if n_train + n_cv + n_test > len(ids):
        raise ValueError(
            f"split counts {counts} exceed corpus size {len(ids)}")
    order = Rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    return DatasetSplit(shuffled[:n_train],
                        shuffled[n_train:n_train + n_cv],
                        shuffled[n_train + n_cv:n_train + n_cv + n_test])


# --- training-sample assembly ------------------------------------------------------

def assemble_samples(corpus, ids, inventory):
    """TrainSamples (features, raw per-state log-F0) for labeled utterances."""
    samples = []
    for utt_id in ids:
        utt = corpus[utt_id]
        if not utt.labeled:
            raise CorpusError(f"{utt_id} has no F0/duration labels", utt_id)
        feats = encode_utterance(utt.annotation, inventory)
        states = extract_state_f0(continuize(utt.f0), utt.durations)
        samples.extend(TrainSample(f, t)
                       for f, t in zip(feats, states.log_hz))
    return samples


def assemble_features(corpus, ids, inventory):
    """Feature matrix over all phonemes of the given utterances."""
    rows = []
    for utt_id in ids:
        rows.extend(encode_utterance(corpus[utt_id].annotation, inventory))
    return np.array(rows)


# --- model persistence ---------------------------------------------------------------

def _hex_list(arr):
    return [float.hex(float(v)) for v in np.asarray(arr, dtype=np.float64).ravel()]


def _from_hex(values, shape):
    arr = np.array([float.fromhex(v) for v in values], dtype=np.float64)
    if arr.size != int(np.prod(shape)):
        raise ModelFormatError(
            f"parameter block holds {arr.size} values, expected shape {shape}",
            reason="shape")
    return arr.reshape(shape)


def _canonical(body):
    return json.dumps(body, sort_keys=True, separators=(",", ":"))


def _checksum(body):
    return hashlib.sha256(_canonical(body).encode("utf-8")).hexdigest()


def _config_echo(config):
    return asdict(config) if is_dataclass(config) else dict(config or {})


def save_model(model, path, config=None, seed=0):
    """Serialize a DbnModel or DnnModel; byte-identical for equal content."""
    if isinstance(model, DbnModel):
        body = {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "dbn",
            "layer_sizes": model.layer_sizes,
            "layers": [{
                "weights": _hex_list(p.weights),
                "visible_bias": _hex_list(p.visible_bias),
                "hidden_bias": _hex_list(p.hidden_bias),
            } for p in model.layers],
            "config": _config_echo(config),
            "seed": int(seed),
        }
    elif isinstance(model, DnnModel):
        sizes = [model.input_dim] + [w.shape[1] for w, _ in model.hidden_layers] \
            + [model.output_dim]
        body = {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "dnn",
            "layer_sizes": sizes,
            "hidden_layers": [{"weights": _hex_list(w), "bias": _hex_list(b)}
                              for w, b in model.hidden_layers],
            "output_layer": {"weights": _hex_list(model.output_weights),
                             "bias": _hex_list(model.output_bias)},
            "target_mean": None if model.target_mean is None
            else float.hex(model.target_mean),
            "target_std": None if model.target_std is None
            else float.hex(model.target_std),
            "config": _config_echo(config),
            "seed": int(seed),
        }
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    body["checksum"] = _checksum({k: v for k, v in body.items()})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-model-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(_canonical(body))
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class ModelFile:
    kind: str
    model: object
    config: dict
    seed: int
    format_version: int


def load_model(path):
    """Parse, checksum-verify, and rebuild a saved model."""
    try:
        text = Path(path).read_text(encoding="utf-8")
        body = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot parse model file: {exc}", reason="parse")
    if not isinstance(body, dict) or "checksum" not in body:
        raise ModelFormatError("model file lacks a checksum", reason="parse")
    stored = body.pop("checksum")
    if stored != _checksum(body):
        raise ModelFormatError("model file checksum mismatch", reason="checksum")
    if body.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported format_version {body.get('format_version')!r}",
            reason="version")

    sizes = body["layer_sizes"]
    if body["kind"] == "dbn":
        layers = [RbmParams(_from_hex(blk["weights"], (v, h)),
                            _from_hex(blk["visible_bias"], (v,)),
                            _from_hex(blk["hidden_bias"], (h,)))
                  for blk, v, h in zip(body["layers"], sizes, sizes[1:])]
        if len(layers) != len(sizes) - 1:
            raise ModelFormatError("layer count disagrees with layer_sizes",
                                   reason="shape")
        model = DbnModel(layers)
    elif body["kind"] == "dnn":
        hidden_sizes = sizes[:-1]
        hidden = [( _from_hex(blk["weights"], (a, b)), _from_hex(blk["bias"], (b,)))
                  for blk, a, b in zip(body["hidden_layers"], hidden_sizes,
                                       hidden_sizes[1:])]
        if len(hidden) != len(sizes) - 2:
            raise ModelFormatError("hidden layer count disagrees with layer_sizes",
                                   reason="shape")
        out_w = _from_hex(body["output_layer"]["weights"], (sizes[-2], sizes[-1]))
        out_b = _from_hex(body["output_layer"]["bias"], (sizes[-1],))
        mean = body["target_mean"]
        std = body["target_std"]
        model = DnnModel(hidden, out_w, out_b,
                         None if mean is None else float.fromhex(mean),
                         None if std is None else float.fromhex(std))
    else:
        raise ModelFormatError(f"unknown model kind {body['kind']!r}", reason="parse")
    return ModelFile(body["kind"], model, body.get("config", {}),
                     body.get("seed", 0), body["format_version"])


# --- synthetic corpus ------------------------------------------------------------------

@dataclass
class SyntheticTargets:
    """Ground-truth state log-F0 as a pure function of (features, seed).

    value[p, s] = base + w . x_p + offset[s], with w drawn once from the
    derived target stream. Tests can rebuild this object to recompute targets
    independently of any files on disk.
    """

    weights: np.ndarray

    @classmethod
    def for_seed(cls, seed):
        rng = Rng.derived(seed, _TARGET_STREAM)
        return cls(rng.normal((FEATURE_DIM,), scale=TARGET_WEIGHT_SCALE))

    def state_targets(self, feature_vector):
        return LOG_F0_BASE + float(self.weights @ feature_vector) + STATE_OFFSETS


def _random_syllable(rng, inventory):
    if rng.uniform() < 0.12:  # vowel-less syllable
        n = 1 + rng.integers(2)
        return Syllable([inventory.consonants[rng.integers(30)] for _ in range(n)])
    onset = rng.integers(3)
    coda = rng.integers(2)
    phonemes = [inventory.consonants[rng.integers(30)] for _ in range(onset)]
    phonemes.append(inventory.vowels[rng.integers(16)])
    phonemes += [inventory.consonants[rng.integers(30)] for _ in range(coda)]
    return Syllable(phonemes)


def _random_annotation(rng, inventory):
    words = []
    for _ in range(2 + rng.integers(4)):
        n_syll = 1 + rng.integers(4)
        words.append(Word([_random_syllable(rng, inventory)
                           for _ in range(n_syll)]))
    return UtteranceAnnotation(words)


def generate_synthetic_corpus(out_dir, n_utterances, inventory, seed,
                              noise_std=0.0):
    """Write a deterministic synthetic corpus; returns the manifest path.

    Annotations respect the structural bounds; state targets come from
    SyntheticTargets.for_seed(seed) (plus optional Gaussian noise); tracks
    are the spline expansion of the targets, so state extraction
    round-trips.
    """
    if n_utterances < 1:
        raise ValueError("need at least one utterance")
    targets = SyntheticTargets.for_seed(seed)
    rng = Rng.derived(seed, _STRUCTURE_STREAM)
    utterances = {}
    for i in range(n_utterances):
        utt_id = f"utt{i:04d}"
        annotation = _random_annotation(rng, inventory)
        feats = encode_utterance(annotation, inventory)
        n_ph = len(feats)
        durations = StateDurations(
            2 + rng.integers(4, shape=(n_ph, STATES_PER_PHONEME)))
        state_vals = np.stack([targets.state_targets(f) for f in feats])
        if noise_std > 0.0:
            state_vals = state_vals + rng.normal(state_vals.shape, scale=noise_std)
        track = spline_expand(StateF0(state_vals), durations)
        utterances[utt_id] = Utterance(
            utt_id, annotation, F0Track(track.values), durations)
    return save_corpus(Corpus(utterances), out_dir)
