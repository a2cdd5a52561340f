import numpy as np
import pytest

from dbnf0.contour import F0Track, StateDurations, continuize, extract_state_f0
from dbnf0.corpus import (AlignmentError, Corpus, MissingFileError,
                          ModelFormatError, ParseError, SyntheticTargets,
                          Utterance, assemble_features, assemble_samples,
                          format_annotation, format_durations, format_f0,
                          generate_synthetic_corpus, load_corpus, load_model,
                          parse_annotation, parse_durations, parse_f0,
                          save_corpus, save_model, split)
from dbnf0.dbn import DbnModel
from dbnf0.dnn import DnnModel, forward
from dbnf0.features import default_inventory, encode_utterance
from dbnf0.rbm import RbmParams

INV = default_inventory()


def write_utt(tmp, utt_id, ann, f0=None, dur=None):
    (tmp / f"{utt_id}.ann").write_text(ann)
    fields = [utt_id, f"{utt_id}.ann"]
    if f0 is not None:
        (tmp / f"{utt_id}.f0").write_text(f0)
        (tmp / f"{utt_id}.dur").write_text(dur)
        fields += [f"{utt_id}.f0", f"{utt_id}.dur"]
    return "\t".join(fields)


def random_dbn(sizes, seed=0):
    rng = np.random.default_rng(seed)
    return DbnModel([RbmParams(rng.normal(size=(v, h)), rng.normal(size=v),
                               rng.normal(size=h))
                     for v, h in zip(sizes, sizes[1:])])


def random_dnn(seed=0, with_stats=True):
    rng = np.random.default_rng(seed)
    model = DnnModel([(rng.normal(size=(8, 6)), rng.normal(size=6)),
                      (rng.normal(size=(6, 4)), rng.normal(size=4))],
                     rng.normal(size=(4, 5)), rng.normal(size=5))
    if with_stats:
        model.target_mean, model.target_std = 4.78, 0.21
    return model


# --- parsing -------------------------------------------------------------------

def test_parse_annotation_round_trip():
    text = "k a | m aa l\nb i\n"
    ann = parse_annotation(text)
    assert ann.n_phonemes() == 7
    assert format_annotation(ann) == text


def test_parse_annotation_rejects_oversized():
    with pytest.raises(ParseError):
        parse_annotation("k k k k k k k\n")  # 7-phoneme syllable


def test_parse_f0_round_trip():
    track = F0Track(np.array([123.456, 0.0, 130.000001]))
    again = parse_f0(format_f0(track))
    assert np.array_equal(track.values, again.values)


def test_parse_f0_bad_value():
    with pytest.raises(ParseError):
        parse_f0("120.0\nnope\n")


def test_parse_durations_round_trip():
    d = StateDurations([[2, 3, 1, 0, 4], [1, 1, 1, 1, 1]])
    again = parse_durations(format_durations(d))
    assert np.array_equal(d.frames, again.frames)


def test_parse_durations_wrong_width():
    with pytest.raises(ParseError):
        parse_durations("1 2 3\n")


# --- corpus load ------------------------------------------------------------------

def test_load_empty_manifest(tmp_path):
    m = tmp_path / "manifest.tsv"
    m.write_text("")
    assert len(load_corpus(m)) == 0


def test_load_labeled_and_unlabeled(tmp_path):
    lines = [
        write_utt(tmp_path, "a", "k a\n", "120.0\n" * 20,
                  "2 2 2 2 2\n2 2 2 2 2\n"),
        write_utt(tmp_path, "b", "m i\n"),
    ]
    m = tmp_path / "manifest.tsv"
    m.write_text("\n".join(lines) + "\n")
    corpus = load_corpus(m)
    assert corpus["a"].labeled and not corpus["b"].labeled
    assert corpus.ids == ["a", "b"]


def test_load_alignment_error_names_utterance(tmp_path):
    line = write_utt(tmp_path, "bad", "k a\n", "120.0\n" * 9, "2 2 2 2 2\n")
    m = tmp_path / "manifest.tsv"
    m.write_text(line + "\n")
    with pytest.raises(AlignmentError) as err:
        load_corpus(m)
    assert err.value.utterance_id == "bad"


def test_load_missing_file(tmp_path):
    m = tmp_path / "manifest.tsv"
    m.write_text("x\tmissing.ann\n")
    with pytest.raises(MissingFileError):
        load_corpus(m)


def test_load_duplicate_id(tmp_path):
    (tmp_path / "a.ann").write_text("k a\n")
    m = tmp_path / "manifest.tsv"
    m.write_text("a\ta.ann\na\ta.ann\n")
    with pytest.raises(ParseError):
        load_corpus(m)


def test_corpus_save_load_round_trip(tmp_path):
    manifest = generate_synthetic_corpus(tmp_path / "gen", 6, INV, seed=3)
    corpus = load_corpus(manifest)
    manifest2 = save_corpus(corpus, tmp_path / "resave")
    corpus2 = load_corpus(manifest2)
    assert corpus.ids == corpus2.ids
    for uid in corpus.ids:
        a, b = corpus[uid], corpus2[uid]
        assert format_annotation(a.annotation) == format_annotation(b.annotation)
        assert np.array_equal(a.f0.values, b.f0.values)
        assert np.array_equal(a.durations.frames, b.durations.frames)
    # resaving the reloaded corpus is byte-identical
    assert (tmp_path / "resave" / "manifest.tsv").read_bytes() == \
        manifest2.read_bytes()


# --- split ---------------------------------------------------------------------------

def corpus_of(n):
    ann = parse_annotation("k a\n")
    return Corpus({f"u{i}": Utterance(f"u{i}", ann) for i in range(n)})


def test_split_sizes_and_disjoint():
    s = split(corpus_of(10), (5, 2, 3), seed=0)
    assert (len(s.train), len(s.cv), len(s.test)) == (5, 2, 3)
    all_ids = s.train + s.cv + s.test
    assert len(set(all_ids)) == 10


def test_split_deterministic():
    a = split(corpus_of(10), (5, 2, 3), seed=4)
    b = split(corpus_of(10), (5, 2, 3), seed=4)
    assert (a.train, a.cv, a.test) == (b.train, b.cv, b.test)


def test_split_rejects_oversize():
    with pytest.raises(ValueError):
        split(corpus_of(5), (4, 2, 1), seed=0)


# --- model persistence -----------------------------------------------------------------

def test_dbn_model_round_trip(tmp_path):
    model = random_dbn([6, 4, 3], seed=1)
    path = tmp_path / "m.dbn.json"
    save_model(model, path, config={"epochs": 50}, seed=9)
    loaded = load_model(path)
    assert loaded.kind == "dbn"
    assert loaded.seed == 9
    assert loaded.config == {"epochs": 50}
    for a, b in zip(model.layers, loaded.model.layers):
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.visible_bias, b.visible_bias)
        assert np.array_equal(a.hidden_bias, b.hidden_bias)


def test_model_save_is_canonical(tmp_path):
    model = random_dnn()
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_model(model, p1, seed=3)
    save_model(model, p2, seed=3)
    assert p1.read_bytes() == p2.read_bytes()
    # save -> load -> save is byte-identical
    save_model(load_model(p1).model, p2, seed=3)
    assert p1.read_bytes() == p2.read_bytes()


def test_dnn_predictions_survive_round_trip(tmp_path):
    model = random_dnn(seed=5)
    path = tmp_path / "m.json"
    save_model(model, path)
    loaded = load_model(path).model
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = (rng.uniform(size=8) < 0.5).astype(float)
        assert np.array_equal(forward(model, x), forward(loaded, x))
    assert loaded.target_mean == model.target_mean
    assert loaded.target_std == model.target_std


def test_truncated_model_fails_checksum(tmp_path):
    model = random_dnn()
    path = tmp_path / "m.json"
    save_model(model, path)
    blob = path.read_text()
    path.write_text(blob[:len(blob) // 2])
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_tampered_model_fails_checksum(tmp_path):
    model = random_dnn()
    path = tmp_path / "m.json"
    save_model(model, path)
    path.write_text(path.read_text().replace('"seed":0', '"seed":1'))
    with pytest.raises(ModelFormatError) as err:
        load_model(path)
    assert err.value.reason == "checksum"


def test_version_mismatch_detected(tmp_path):
    import json
    model = random_dnn()
    path = tmp_path / "m.json"
    save_model(model, path)
    body = json.loads(path.read_text())
    body.pop("checksum")
    body["format_version"] = 99
    from dbnf0.corpus import _canonical, _checksum
    body["checksum"] = _checksum(body)
    path.write_text(_canonical(body))
    with pytest.raises(ModelFormatError) as err:
        load_model(path)
    assert err.value.reason == "version"


# --- synthetic corpus ---------------------------------------------------------------------

def test_generator_respects_structural_bounds(tmp_path):
    corpus = load_corpus(generate_synthetic_corpus(tmp_path, 15, INV, seed=5))
    assert len(corpus) == 15
    for uid in corpus.ids:
        for word in corpus[uid].annotation.words:
            assert 1 <= len(word.syllables) <= 10
            for syll in word.syllables:
                assert 1 <= len(syll.phonemes) <= 6


def test_generator_zero_noise_recovers_targets(tmp_path):
    corpus = load_corpus(generate_synthetic_corpus(tmp_path, 8, INV, seed=11))
    targets = SyntheticTargets.for_seed(11)
    for uid in corpus.ids:
        utt = corpus[uid]
        feats = encode_utterance(utt.annotation, INV)
        want = np.stack([targets.state_targets(f) for f in feats])
        got = extract_state_f0(continuize(utt.f0), utt.durations).log_hz
        assert np.max(np.abs(got - want)) < 0.02


def test_generator_deterministic(tmp_path):
    m1 = generate_synthetic_corpus(tmp_path / "a", 5, INV, seed=8)
    m2 = generate_synthetic_corpus(tmp_path / "b", 5, INV, seed=8)
    assert m1.read_bytes() == m2.read_bytes()
    for sub in ("ann", "f0", "dur"):
        for f1 in sorted((tmp_path / "a" / sub).iterdir()):
            f2 = tmp_path / "b" / sub / f1.name
            assert f1.read_bytes() == f2.read_bytes()


def test_generator_target_function_is_pure():
    a = SyntheticTargets.for_seed(4)
    b = SyntheticTargets.for_seed(4)
    assert np.array_equal(a.weights, b.weights)
    x = np.zeros(220)
    x[[3, 50, 120]] = 1.0
    assert np.array_equal(a.state_targets(x), b.state_targets(x))


def test_assemble_samples(tmp_path):
    corpus = load_corpus(generate_synthetic_corpus(tmp_path, 4, INV, seed=2))
    samples = assemble_samples(corpus, corpus.ids, INV)
    total_phonemes = sum(corpus[u].annotation.n_phonemes() for u in corpus.ids)
    assert len(samples) == total_phonemes
    assert samples[0].features.shape == (220,)
    feats = assemble_features(corpus, corpus.ids, INV)
    assert feats.shape == (total_phonemes, 220)
