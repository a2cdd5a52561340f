import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbnf0.features import (FEATURE_DIM, GROUP_WIDTHS, PhonemeInventory,
                            Syllable, UtteranceAnnotation, Word,
                            decode_subgroup, default_inventory, encode,
                            encode_utterance, one_of_n, parse_inventory,
                            subgroup_slices)

INV = default_inventory()


def syll(*phonemes):
    return Syllable(list(phonemes))


def simple_utterance():
    # two words; mid-word phonemes have full context
    return UtteranceAnnotation([
        Word([syll("k", "a"), syll("m", "aa", "l")]),
        Word([syll("b", "i")]),
    ])


# --- inventory ----------------------------------------------------------------

def test_default_inventory_counts():
    assert len(INV.consonants) == 30
    assert len(INV.vowels) == 16


def test_inventory_indexing():
    assert INV.index(INV.consonants[0]) == 0
    assert INV.index(INV.vowels[0]) == 30
    assert INV.is_vowel("a") and not INV.is_vowel("k")
    with pytest.raises(ValueError):
        INV.index("zz")


def test_inventory_rejects_bad_counts():
    with pytest.raises(ValueError):
        PhonemeInventory(["k"], ["a"])


def test_inventory_rejects_duplicates():
    cons = list(INV.consonants)
    cons[1] = cons[0]
    with pytest.raises(ValueError):
        PhonemeInventory(cons, list(INV.vowels))


def test_inventory_version_check():
    with pytest.raises(ValueError):
        parse_inventory("version: 2\nconsonants: a\nvowels: b\n")


# --- one_of_n ------------------------------------------------------------------

def test_one_of_n_basic():
    v = one_of_n(3, 10)
    assert v.shape == (10,) and v[3] == 1.0 and v.sum() == 1.0


def test_one_of_n_absent():
    assert one_of_n(None, 6).sum() == 0.0


def test_one_of_n_out_of_range():
    with pytest.raises(ValueError):
        one_of_n(10, 10)


# --- layout -------------------------------------------------------------------

def test_group_widths_total():
    assert GROUP_WIDTHS == [138, 10, 12, 20, 18, 6, 16]
    assert FEATURE_DIM == 220
    slices = subgroup_slices()
    assert slices["vowel_identity"].stop == 220


def test_encode_width_and_binary():
    utt = simple_utterance()
    for k in range(utt.n_phonemes()):
        vec = encode(utt, k, INV)
        assert vec.shape == (220,)
        assert set(np.unique(vec)) <= {0.0, 1.0}


def test_utterance_initial_phoneme_has_no_previous():
    vec = encode(simple_utterance(), 0, INV)
    assert vec[:46].sum() == 0.0
    assert decode_subgroup(vec, "prev_phoneme") is None


def test_utterance_final_phoneme_has_no_next():
    utt = simple_utterance()
    vec = encode(utt, utt.n_phonemes() - 1, INV)
    assert decode_subgroup(vec, "next_phoneme") is None


def test_fully_specified_context_sets_13_bits():
    # phoneme 'aa' (index 3): mid-utterance, neighbors and both adjacent
    # syllables exist, and its syllable carries a vowel
    vec = encode(simple_utterance(), 3, INV)
    assert vec.sum() == 13.0


def test_encode_field_values_hand_checked():
    utt = simple_utterance()
    vec = encode(utt, 3, INV)  # 'aa' in syllable (m aa l), word 0, syllable 1
    assert decode_subgroup(vec, "prev_phoneme") == INV.index("m")
    assert decode_subgroup(vec, "cur_phoneme") == INV.index("aa")
    assert decode_subgroup(vec, "next_phoneme") == INV.index("l")
    assert decode_subgroup(vec, "word_syllable_count") == 1  # 2 syllables
    assert decode_subgroup(vec, "phoneme_pos_fwd") == 1
    assert decode_subgroup(vec, "phoneme_pos_bwd") == 1
    assert decode_subgroup(vec, "syllable_pos_fwd") == 1
    assert decode_subgroup(vec, "syllable_pos_bwd") == 0
    assert decode_subgroup(vec, "prev_syll_phonemes") == 1  # (k a)
    assert decode_subgroup(vec, "cur_syll_phonemes") == 2  # (m aa l)
    assert decode_subgroup(vec, "next_syll_phonemes") == 1  # (b i)
    assert decode_subgroup(vec, "vowel_pos_fwd") == 1
    assert decode_subgroup(vec, "vowel_identity") == INV.vowel_index("aa")


def test_context_crosses_word_boundary():
    utt = simple_utterance()
    # phoneme 'l' (index 4) precedes word-initial 'b'
    vec = encode(utt, 4, INV)
    assert decode_subgroup(vec, "next_phoneme") == INV.index("b")
    # and the next-syllable count crosses into word 1
    assert decode_subgroup(vec, "next_syll_phonemes") == 1


def test_vowel_less_syllable_zeroes_vowel_groups():
    utt = UtteranceAnnotation([Word([syll("k", "s")])])
    vec = encode(utt, 0, INV)
    assert decode_subgroup(vec, "vowel_pos_fwd") is None
    assert decode_subgroup(vec, "vowel_identity") is None


def test_encode_rejects_unknown_symbol():
    utt = UtteranceAnnotation([Word([Syllable(["k", "zz"])])])
    with pytest.raises(ValueError):
        encode(utt, 0, INV)


def test_structural_bounds_enforced():
    with pytest.raises(ValueError):
        Syllable(["k"] * 7)
    with pytest.raises(ValueError):
        Word([syll("a")] * 11)
    with pytest.raises(ValueError):
        Syllable([])
    with pytest.raises(ValueError):
        UtteranceAnnotation([])


def test_encode_utterance_lengths():
    utt = simple_utterance()
    vecs = encode_utterance(utt, INV)
    assert len(vecs) == utt.n_phonemes() == 7
    single = UtteranceAnnotation([Word([syll("a")])])
    assert len(encode_utterance(single, INV)) == 1


def test_identity_groups_recover_phoneme_sequence():
    utt = simple_utterance()
    vecs = encode_utterance(utt, INV)
    symbols = INV.consonants + INV.vowels
    decoded = [symbols[decode_subgroup(v, "cur_phoneme")] for v in vecs]
    assert decoded == ["k", "a", "m", "aa", "l", "b", "i"]


def test_encode_is_pure():
    utt = simple_utterance()
    assert np.array_equal(encode(utt, 2, INV), encode(utt, 2, INV))


# --- randomized structure checks ------------------------------------------------

def sane_random_annotation(rng):
    words = []
    for _ in range(int(rng.integers(1, 5))):
        sylls = []
        for _ in range(int(rng.integers(1, 11))):
            n = int(rng.integers(1, 7))
            phonemes = []
            for _ in range(n):
                if rng.uniform() < 0.4:
                    phonemes.append(INV.vowels[int(rng.integers(0, 16))])
                else:
                    phonemes.append(INV.consonants[int(rng.integers(0, 30))])
            sylls.append(Syllable(phonemes))
        words.append(Word(sylls))
    return UtteranceAnnotation(words)


def test_random_annotations_invariants():
    rng = np.random.default_rng(2024)
    slices = subgroup_slices()
    for _ in range(300):
        utt = sane_random_annotation(rng)
        k = int(rng.integers(0, utt.n_phonemes()))
        vec = encode(utt, k, INV)
        assert vec.shape == (220,)
        for name, sl in slices.items():
            assert vec[sl].sum() <= 1.0
        # always-defined groups have exactly one bit
        for name in ("cur_phoneme", "word_syllable_count", "phoneme_pos_fwd",
                     "phoneme_pos_bwd", "syllable_pos_fwd", "syllable_pos_bwd",
                     "cur_syll_phonemes"):
            assert vec[slices[name]].sum() == 1.0
        # forward + backward positions reconstruct the sizes
        fwd = decode_subgroup(vec, "phoneme_pos_fwd")
        bwd = decode_subgroup(vec, "phoneme_pos_bwd")
        size = decode_subgroup(vec, "cur_syll_phonemes")
        assert fwd + bwd == size
        sf = decode_subgroup(vec, "syllable_pos_fwd")
        sb = decode_subgroup(vec, "syllable_pos_bwd")
        wc = decode_subgroup(vec, "word_syllable_count")
        assert sf + sb == wc


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_encode_width_property(seed):
    rng = np.random.default_rng(seed)
    utt = sane_random_annotation(rng)
    k = int(rng.integers(0, utt.n_phonemes()))
    assert encode(utt, k, INV).shape == (220,)
