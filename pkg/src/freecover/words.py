"""Reduced words over a free group of fixed finite rank.

A letter is a nonzero signed integer: ``+g`` is the g-th generator and
``-g`` its inverse, with ``1 <= g <= rank``.  Words are stored as read-only
``int64`` arrays in reduced form (no adjacent cancelling pair); every
constructor reduces eagerly, so two words are equal as group elements iff
their arrays are equal.

Text grammar: ``'a'..'z'`` are generators 1..26, ``'A'..'Z'`` their
inverses, whitespace is ignored, and ``"1"`` (or the empty string) is the
identity.  ``parse_word`` and ``word_to_text`` round-trip byte-exactly on
reduced words.

All values are immutable and all operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

__all__ = [
    "Word",
    "Homomorphism",
    "parse_word",
    "word_to_text",
    "reduce",
    "multiply",
    "inverse",
    "commutator",
    "abelianize",
    "in_commutator_subgroup",
    "hom_apply",
]

MAX_TEXT_RANK = 26


def _as_letter_array(letters, rank: int) -> np.ndarray:
    arr = np.asarray(list(letters) if not isinstance(letters, np.ndarray) else letters,
                     dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("letters must be a flat sequence")
    if arr.size and (np.any(arr == 0) or np.any(np.abs(arr) > rank)):
        raise ValueError(f"letter out of range for rank {rank}")
    return arr


class Word:
    """A reduced word, identified with an element of the free group F_rank."""

    __slots__ = ("rank", "letters")

    def __init__(self, rank: int, letters: Iterable[int] = ()):
        if rank < 0:
            raise ValueError("rank must be nonnegative")
        arr = _as_letter_array(letters, rank)
        arr = _kernels.reduce_letters(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "letters", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Word is immutable")

    def __len__(self) -> int:
        return int(self.letters.size)

    def __bool__(self) -> bool:
        return True

    def __eq__(self, other) -> bool:
        if not isinstance(other, Word):
            return NotImplemented
        return self.rank == other.rank and np.array_equal(self.letters, other.letters)

    def __hash__(self) -> int:
        return hash((self.rank, self.letters.tobytes()))

    def __mul__(self, other: "Word") -> "Word":
        return multiply(self, other)

    def __invert__(self) -> "Word":
        return inverse(self)

    def __str__(self) -> str:
        if self.rank <= MAX_TEXT_RANK:
            return word_to_text(self)
        return repr(list(self.letters))

    def __repr__(self) -> str:
        return f"Word({self.rank}, {str(self)!r})"

    def is_identity(self) -> bool:
        return self.letters.size == 0

    @classmethod
    def identity(cls, rank: int) -> "Word":
        return cls(rank, ())

    @classmethod
    def generator(cls, rank: int, g: int) -> "Word":
        return cls(rank, (g,))


def parse_word(text: str, rank: int) -> Word:
    """Parse the letter grammar into a reduced word of the given rank."""
    if rank > MAX_TEXT_RANK:
        raise ValueError(f"text grammar supports rank <= {MAX_TEXT_RANK}, got {rank}")
    stripped = "".join(text.split())
    if stripped in ("", "1"):
        return Word.identity(rank)
    letters = []
    for ch in stripped:
        if "a" <= ch <= "z":
            g = ord(ch) - ord("a") + 1
        elif "A" <= ch <= "Z":
            g = -(ord(ch) - ord("A") + 1)
        else:
            raise ValueError(f"invalid character {ch!r} in word")
        if abs(g) > rank:
            raise ValueError(f"letter {ch!r} is beyond declared rank {rank}")
        letters.append(g)
    return Word(rank, letters)


def word_to_text(w: Word) -> str:
    """Inverse of parse_word; the identity prints as "1"."""
    if w.letters.size == 0:
        return "1"
    out = []
    for g in w.letters:
        if abs(g) > MAX_TEXT_RANK:
            raise ValueError("generator index beyond text grammar")
        base = ord("a") if g > 0 else ord("A")
        out.append(chr(base + abs(int(g)) - 1))
    return "".join(out)


def reduce(letters: Iterable[int], rank: int) -> Word:
    """Reduced word for an arbitrary letter sequence (single stack pass)."""
    return Word(rank, letters)


def _require_same_rank(u: Word, v: Word) -> None:
    if u.rank != v.rank:
        raise ValueError(f"rank mismatch: {u.rank} vs {v.rank}")


def multiply(u: Word, v: Word) -> Word:
    _require_same_rank(u, v)
    return Word(u.rank, np.concatenate([u.letters, v.letters]))


def inverse(w: Word) -> Word:
    return Word(w.rank, -w.letters[::-1])


def commutator(u: Word, v: Word) -> Word:
    _require_same_rank(u, v)
    return Word(u.rank, np.concatenate(
        [u.letters, v.letters, -u.letters[::-1], -v.letters[::-1]]))


def abelianize(w: Word) -> tuple[int, ...]:
    """Exponent-sum vector of w, a homomorphism onto Z^rank."""
    vec = np.zeros(w.rank, dtype=np.int64)
    if w.letters.size:
        np.add.at(vec, np.abs(w.letters) - 1, np.sign(w.letters))
    return tuple(int(c) for c in vec)


def in_commutator_subgroup(w: Word) -> bool:
    """True iff w has zero exponent sum in every generator."""
    return all(c == 0 for c in abelianize(w))


@dataclass(frozen=True)
class Homomorphism:
    """A homomorphism between free groups, given by generator images.

    The map extending ``generator g of F_source_rank -> images[g-1]`` is the
    unique homomorphism with those values.
    """

    source_rank: int
    images: tuple[Word, ...]

    def __post_init__(self):
        if len(self.images) != self.source_rank:
            raise ValueError("need exactly one image per source generator")
        ranks = {im.rank for im in self.images}
        if len(ranks) > 1:
            raise ValueError("generator images must share one target rank")

    @property
    def target_rank(self) -> int:
        return self.images[0].rank if self.images else 0

    @classmethod
    def identity(cls, rank: int) -> "Homomorphism":
        return cls(rank, tuple(Word.generator(rank, g) for g in range(1, rank + 1)))


def hom_apply(h: Homomorphism, w: Word) -> Word:
    """Image of w: substitute each letter by its generator image and reduce."""
    if w.rank != h.source_rank:
        raise ValueError(f"word rank {w.rank} does not match source rank {h.source_rank}")
    pieces = []
    for g in w.letters:
        img = h.images[abs(int(g)) - 1].letters
        pieces.append(img if g > 0 else -img[::-1])
    if not pieces:
        return Word.identity(h.target_rank)
    return Word(h.target_rank, np.concatenate(pieces))
