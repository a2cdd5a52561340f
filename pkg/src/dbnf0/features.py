"""Symbolic context to binary features: the 220-bit one-of-N encoding.

Per-phoneme context is packed into seven groups (widths 138/10/12/20/18/6/16):
previous/current/next phoneme identity, syllable count of the current word,
phoneme position in syllable (forward/backward), syllable position in word
(forward/backward), phoneme counts of the previous/current/next syllable,
vowel forward position in the syllable, and vowel identity. Absent context
(utterance edges, vowel-less syllables) leaves a group all-zero. Counts are
encoded as count-1 and positions 0-based so each group fits its width.

Phoneme and syllable neighbors cross word boundaries within the utterance.
"""

from dataclasses import dataclass
from importlib import resources

import numpy as np

N_CONSONANTS = 30
N_VOWELS = 16
N_PHONEMES = N_CONSONANTS + N_VOWELS
MAX_SYLLABLE_PHONEMES = 6
MAX_WORD_SYLLABLES = 10

GROUP_WIDTHS = [3 * N_PHONEMES, MAX_WORD_SYLLABLES, 2 * MAX_SYLLABLE_PHONEMES,
                2 * MAX_WORD_SYLLABLES, 3 * MAX_SYLLABLE_PHONEMES,
                MAX_SYLLABLE_PHONEMES, N_VOWELS]
FEATURE_DIM = sum(GROUP_WIDTHS)  # 220

# subgroup layout in bit order; each entry is (name, width)
_SUBGROUPS = [
    ("prev_phoneme", N_PHONEMES),
    ("cur_phoneme", N_PHONEMES),
    ("next_phoneme", N_PHONEMES),
    ("word_syllable_count", MAX_WORD_SYLLABLES),
    ("phoneme_pos_fwd", MAX_SYLLABLE_PHONEMES),
    ("phoneme_pos_bwd", MAX_SYLLABLE_PHONEMES),
    ("syllable_pos_fwd", MAX_WORD_SYLLABLES),
    ("syllable_pos_bwd", MAX_WORD_SYLLABLES),
    ("prev_syll_phonemes", MAX_SYLLABLE_PHONEMES),
    ("cur_syll_phonemes", MAX_SYLLABLE_PHONEMES),
    ("next_syll_phonemes", MAX_SYLLABLE_PHONEMES),
    ("vowel_pos_fwd", MAX_SYLLABLE_PHONEMES),
    ("vowel_identity", N_VOWELS),
]


def subgroup_slices():
    """Mapping of subgroup name to its slice in the 220-bit vector."""
    out = {}
    start = 0
    for name, width in _SUBGROUPS:
        out[name] = slice(start, start + width)
        start += width
    return out


@dataclass
class PhonemeInventory:
    consonants: list
    vowels: list

    def __post_init__(self):
        if len(self.consonants) != N_CONSONANTS or len(self.vowels) != N_VOWELS:
            raise ValueError(
                f"inventory must hold {N_CONSONANTS} consonants and {N_VOWELS} vowels")
        symbols = list(self.consonants) + list(self.vowels)
        if len(set(symbols)) != N_PHONEMES:
            raise ValueError("inventory symbols must be unique")
        self._index = {s: i for i, s in enumerate(symbols)}
        self._vowel_index = {s: i for i, s in enumerate(self.vowels)}

    def __contains__(self, symbol):
        return symbol in self._index

    def index(self, symbol):
        try:
            return self._index[symbol]
        except KeyError:
            raise ValueError(f"symbol {symbol!r} not in inventory") from None

    def is_vowel(self, symbol):
        if symbol not in self._index:
            raise ValueError(f"symbol {symbol!r} not in inventory")
        return symbol in self._vowel_index

    def vowel_index(self, symbol):
        try:
            return self._vowel_index[symbol]
        except KeyError:
            raise ValueError(f"symbol {symbol!r} is not a vowel") from None


def parse_inventory(text):
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(":")
        fields[key.strip()] = value.split()
    if fields.get("version") != ["1"]:
        raise ValueError("unrecognized inventory version")
    return PhonemeInventory(fields.get("consonants", []), fields.get("vowels", []))


def load_inventory(path):
    with open(path, encoding="utf-8") as fh:
        return parse_inventory(fh.read())


def default_inventory():
    text = resources.files("dbnf0.data").joinpath("inventory_bn.txt").read_text("utf-8")
    return parse_inventory(text)


@dataclass
class Syllable:
    phonemes: list
    vowel_index: int = None  # None: first vowel per the inventory

    def __post_init__(self):
        if not 1 <= len(self.phonemes) <= MAX_SYLLABLE_PHONEMES:
            raise ValueError(
                f"syllable must hold 1..{MAX_SYLLABLE_PHONEMES} phonemes")
        if self.vowel_index is not None and not 0 <= self.vowel_index < len(self.phonemes):
            raise ValueError("vowel_index out of range")


@dataclass
class Word:
    syllables: list

    def __post_init__(self):
        if not 1 <= len(self.syllables) <= MAX_WORD_SYLLABLES:
            raise ValueError(f"word must hold 1..{MAX_WORD_SYLLABLES} syllables")


@dataclass
class UtteranceAnnotation:
    words: list

    def __post_init__(self):
        if not self.words:
            raise ValueError("utterance must hold at least one word")

    def flat_phonemes(self):
        """[(word_idx, syllable_idx, phoneme_idx), ...] in utterance order."""
        out = []
        for wi, word in enumerate(self.words):
            for si, syll in enumerate(word.syllables):
                out.extend((wi, si, pi) for pi in range(len(syll.phonemes)))
        return out

    def flat_syllables(self):
        return [(wi, si) for wi, word in enumerate(self.words)
                for si in range(len(word.syllables))]

    def n_phonemes(self):
        return sum(len(s.phonemes) for w in self.words for s in w.syllables)

    def validate_symbols(self, inventory):
        for word in self.words:
            for syll in word.syllables:
                for sym in syll.phonemes:
                    if sym not in inventory:
                        raise ValueError(f"symbol {sym!r} not in inventory")


def one_of_n(index, n):
    """Length-n binary vector with bit `index` set; None encodes absence."""
    out = np.zeros(n)
    if index is not None:
        if not 0 <= index < n:
            raise ValueError(f"index {index} out of range for one-of-{n}")
        out[index] = 1.0
    return out


def _syllable_vowel(syll, inventory):
    """(position, vowel symbol) of the syllable's vowel, or (None, None)."""
    if syll.vowel_index is not None:
        sym = syll.phonemes[syll.vowel_index]
        if not inventory.is_vowel(sym):
            raise ValueError(f"marked vowel {sym!r} is not in the vowel set")
        return syll.vowel_index, sym
    for pos, sym in enumerate(syll.phonemes):
        if inventory.is_vowel(sym):
            return pos, sym
    return None, None


def encode(annotation, phoneme_index, inventory):
    """220-bit feature vector for one phoneme of the utterance."""
    annotation.validate_symbols(inventory)
    flat = annotation.flat_phonemes()
    if not 0 <= phoneme_index < len(flat):
        raise ValueError("phoneme_index out of range")
    wi, si, pi = flat[phoneme_index]
    word = annotation.words[wi]
    syll = word.syllables[si]

    def symbol_at(k):
        w, s, p = flat[k]
        return annotation.words[w].syllables[s].phonemes[p]

    prev_sym = symbol_at(phoneme_index - 1) if phoneme_index > 0 else None
    next_sym = symbol_at(phoneme_index + 1) if phoneme_index + 1 < len(flat) else None

    sylls = annotation.flat_syllables()
    syll_seq_idx = sylls.index((wi, si))

    def syllable_at(k):
        if 0 <= k < len(sylls):
            w, s = sylls[k]
            return annotation.words[w].syllables[s]
        return None

    prev_syll = syllable_at(syll_seq_idx - 1)
    next_syll = syllable_at(syll_seq_idx + 1)
    vowel_pos, vowel_sym = _syllable_vowel(syll, inventory)

    parts = [
        one_of_n(inventory.index(prev_sym) if prev_sym is not None else None, N_PHONEMES),
        one_of_n(inventory.index(syll.phonemes[pi]), N_PHONEMES),
        one_of_n(inventory.index(next_sym) if next_sym is not None else None, N_PHONEMES),
        one_of_n(len(word.syllables) - 1, MAX_WORD_SYLLABLES),
        one_of_n(pi, MAX_SYLLABLE_PHONEMES),
        one_of_n(len(syll.phonemes) - 1 - pi, MAX_SYLLABLE_PHONEMES),
        one_of_n(si, MAX_WORD_SYLLABLES),
        one_of_n(len(word.syllables) - 1 - si, MAX_WORD_SYLLABLES),
        one_of_n(len(prev_syll.phonemes) - 1 if prev_syll else None,
                 MAX_SYLLABLE_PHONEMES),
        one_of_n(len(syll.phonemes) - 1, MAX_SYLLABLE_PHONEMES),
        one_of_n(len(next_syll.phonemes) - 1 if next_syll else None,
                 MAX_SYLLABLE_PHONEMES),
        one_of_n(vowel_pos, MAX_SYLLABLE_PHONEMES),
        one_of_n(inventory.vowel_index(vowel_sym) if vowel_sym is not None else None, N_VOWELS),
    ]
    return np.concatenate(parts)


def encode_utterance(annotation, inventory):
    """One feature vector per phoneme, in utterance order."""
    return [encode(annotation, k, inventory)
            for k in range(annotation.n_phonemes())]


def decode_subgroup(vector, name):
    """Set-bit index of a subgroup, or None if the group is all-zero."""
    bits = vector[subgroup_slices()[name]]
    hot = np.flatnonzero(bits)
    if hot.size == 0:
        return None
    if hot.size > 1:
        raise ValueError(f"subgroup {name} has {hot.size} bits set")
    return int(hot[0])
