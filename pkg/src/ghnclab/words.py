"""Free group words: reduction, cyclic words, primitive roots, ASCII syntax.

Letters are signed generator indices: ``k`` is the k-th generator and ``-k``
its inverse.  Generators 1..26 are written ``a``..``z`` (inverses in upper
case); for alphabets of rank > 26 the tokens ``x<k>`` / ``X<k>`` are used.
The identity is written ``1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

Letters = tuple[int, ...]


class AlphabetError(ValueError):
    """A letter lies outside the generator range of an alphabet."""


class WordParseError(ValueError):
    def __init__(self, message: str, offset: int, token: str):
        super().__init__(f"{message} at offset {offset}: {token!r}")
        self.offset = offset
        self.token = token


def letter_key(letter: int) -> int:
    """Sort key realising the letter order 1 < -1 < 2 < -2 < ..."""
    return 2 * abs(letter) + (letter < 0)


def word_key(letters: Sequence[int]) -> tuple[int, ...]:
    return tuple(2 * abs(x) + (x < 0) for x in letters)


def shortlex_key(letters: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    return len(letters), word_key(letters)


def free_reduce(letters: Iterable[int]) -> Letters:
    stack: list[int] = []
    for x in letters:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


def invert(letters: Sequence[int]) -> Letters:
    return tuple(-x for x in reversed(letters))


def multiply(*words: Sequence[int]) -> Letters:
    out: list[int] = []
    for w in words:
        for x in w:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
    return tuple(out)


@dataclass(frozen=True)
class Alphabet:
    rank: int

    def __post_init__(self):
        if not isinstance(self.rank, int) or self.rank < 1:
            raise AlphabetError(f"alphabet rank must be a positive integer, got {self.rank!r}")

    def check(self, letters: Iterable[int]) -> None:
        for x in letters:
            if x == 0 or abs(x) > self.rank:
                raise AlphabetError(f"letter {x} outside alphabet of rank {self.rank}")

    def generators(self) -> list[int]:
        return list(range(1, self.rank + 1))

    def letters(self) -> list[int]:
        """All signed letters in the canonical letter order."""
        return [s * g for g in range(1, self.rank + 1) for s in (1, -1)]

    def parse(self, text: str) -> "Word":
        return parse_word(text, self.rank)

    def format(self, word: "Word | Sequence[int]") -> str:
        return format_word(word, self.rank)


@dataclass(frozen=True)
class Word:
    """A freely reduced word.  Build through :func:`reduce`."""

    letters: Letters = ()

    def __post_init__(self):
        for a, b in zip(self.letters, self.letters[1:]):
            if a == -b:
                raise ValueError(f"word {self.letters} is not freely reduced")

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __getitem__(self, i):
        return self.letters[i]

    def __mul__(self, other: "Word") -> "Word":
        return Word(multiply(self.letters, _letters(other)))

    def __pow__(self, n: int) -> "Word":
        base = self.letters if n >= 0 else invert(self.letters)
        return Word(free_reduce(base * abs(n)))

    def inverse(self) -> "Word":
        return Word(invert(self.letters))

    def is_identity(self) -> bool:
        return not self.letters

    def conjugate_by(self, t: "Word | Sequence[int]") -> "Word":
        """Return t^-1 w t."""
        t = _letters(t)
        return Word(multiply(invert(t), self.letters, t))

    def __str__(self) -> str:
        return format_word(self.letters)


IDENTITY = Word()


def _letters(w) -> Letters:
    if isinstance(w, (Word, CyclicWord)):
        return w.letters
    return tuple(w)


def reduce(letters: Iterable[int], alphabet: Alphabet | int | None = None) -> Word:
    """Freely reduce a raw letter sequence."""
    letters = tuple(letters)
    if alphabet is not None:
        if isinstance(alphabet, int):
            alphabet = Alphabet(alphabet)
        alphabet.check(letters)
    elif any(x == 0 for x in letters):
        raise AlphabetError("letter 0 is not a generator index")
    return Word(free_reduce(letters))


def is_cyclically_reduced(letters: Sequence[int]) -> bool:
    if any(a == -b for a, b in zip(letters, letters[1:])):
        return False
    return len(letters) < 2 or letters[0] != -letters[-1]


def least_rotation(letters: Sequence[int]) -> tuple[Letters, int]:
    """Lexicographically least rotation (letter order) and its offset."""
    n = len(letters)
    if n == 0:
        return (), 0
    keys = word_key(letters)
    best = 0
    best_key = keys
    for k in range(1, n):
        cand = keys[k:] + keys[:k]
        if cand < best_key:
            best, best_key = k, cand
    return tuple(letters[best:]) + tuple(letters[:best]), best


@dataclass(frozen=True)
class CyclicWord:
    """A cyclically reduced word, read up to rotation.

    ``letters`` keeps the orientation it was built with; :meth:`canonical`
    gives the class representative over rotations and inversion.
    """

    letters: Letters = ()

    def __post_init__(self):
        if not is_cyclically_reduced(self.letters):
            raise ValueError(f"{self.letters} is not cyclically reduced")

    def __len__(self) -> int:
        return len(self.letters)

    def inverse(self) -> "CyclicWord":
        return CyclicWord(invert(self.letters))

    def rotations(self) -> list[Letters]:
        w = self.letters
        return [w[k:] + w[:k] for k in range(max(len(w), 1))]

    def canonical(self) -> Letters:
        return self.canonical_with_orientation()[0]

    def canonical_with_orientation(self) -> tuple[Letters, int]:
        """Least rotation of the word or of its inverse, and which one it is.

        Orientation +1 means the representative is a rotation of ``letters``.
        Ties (the class is closed under inversion) report +1.
        """
        fwd, _ = least_rotation(self.letters)
        bwd, _ = least_rotation(invert(self.letters))
        if word_key(bwd) < word_key(fwd):
            return bwd, -1
        return fwd, 1

    def __str__(self) -> str:
        return format_word(self.letters)


def cyclic_reduce(w: Word | Sequence[int]) -> tuple[Word, CyclicWord]:
    """Split ``w`` as ``conjugator * core * conjugator^-1``.

    The core is the least rotation of the cyclic reduction of ``w``; among
    conjugators realising it, the shortlex-least is returned.
    """
    letters = free_reduce(_letters(w))
    i, j = 0, len(letters)
    while j - i >= 2 and letters[i] == -letters[j - 1]:
        i += 1
        j -= 1
    prefix = letters[:i]
    inner = letters[i:j]
    if not inner:
        return IDENTITY, CyclicWord(())
    core, _ = least_rotation(inner)
    n = len(inner)
    best: Letters | None = None
    for k in range(n):
        if inner[k:] + inner[:k] != core:
            continue
        # inner = x y and core = y x, so inner = x core x^-1 = y^-1 core y
        x, y = inner[:k], inner[k:]
        for c in (multiply(prefix, x), multiply(prefix, invert(y))):
            if best is None or shortlex_key(c) < shortlex_key(best):
                best = c
    return Word(best), CyclicWord(core)


def border_array(seq: Sequence[int]) -> list[int]:
    fail = [0] * len(seq)
    k = 0
    for i in range(1, len(seq)):
        while k and seq[i] != seq[k]:
            k = fail[k - 1]
        if seq[i] == seq[k]:
            k += 1
        fail[i] = k
    return fail


def smallest_period(seq: Sequence[int]) -> int:
    """Least p dividing len(seq) with seq invariant under rotation by p."""
    n = len(seq)
    if n == 0:
        return 0
    p = n - border_array(seq)[-1]
    return p if n % p == 0 else n


def primitive_root(w: Word | Sequence[int]) -> tuple[CyclicWord, int]:
    """Primitive root of the cyclic reduction of ``w`` and the exponent."""
    _, core = cyclic_reduce(w)
    if not core.letters:
        raise ValueError("the identity has no primitive root")
    p = smallest_period(core.letters)
    return CyclicWord(core.letters[:p]), len(core.letters) // p


def _is_rotation(u: Sequence[int], v: Sequence[int]) -> bool:
    if len(u) != len(v):
        return False
    if not u:
        return True
    doubled = tuple(u) + tuple(u)
    v = tuple(v)
    n = len(v)
    fail = border_array(v)
    k = 0
    for x in doubled:
        while k and x != v[k]:
            k = fail[k - 1]
        if x == v[k]:
            k += 1
            if k == n:
                return True
    return False


def cyclic_equal_up_to_inversion(u: CyclicWord, v: CyclicWord) -> tuple[bool, int]:
    """Is v a rotation of u (+1) or of u^-1 (-1)?  Returns (False, 0) otherwise."""
    a, b = _letters(u), _letters(v)
    if len(a) != len(b):
        return False, 0
    if _is_rotation(a, b):
        return True, 1
    if _is_rotation(invert(a), b):
        return True, -1
    return False, 0


# --- ASCII syntax -----------------------------------------------------------

_TOKEN = re.compile(r"\s+|[xX]\d+|[a-zA-Z]|1|.", re.S)


def parse_word(text: str, rank: int | None = None) -> Word:
    """Parse a word in ASCII syntax and freely reduce it."""
    letters: list[int] = []
    identity_at = -1
    for m in _TOKEN.finditer(text):
        tok = m.group()
        if tok.isspace():
            continue
        if tok == "1":
            identity_at = m.start()
            continue
        if len(tok) > 1:
            x = int(tok[1:])
            if x == 0:
                raise WordParseError("generator index 0", m.start(), tok)
            letter = x if tok[0] == "x" else -x
        elif tok.isalpha() and tok.isascii():
            letter = ord(tok.lower()) - ord("a") + 1
            if tok.isupper():
                letter = -letter
        else:
            raise WordParseError("unexpected character", m.start(), tok)
        if rank is not None and abs(letter) > rank:
            raise WordParseError(f"generator outside alphabet of rank {rank}", m.start(), tok)
        letters.append(letter)
    if identity_at >= 0 and letters:
        raise WordParseError("identity symbol inside a word", identity_at, "1")
    return Word(free_reduce(letters))


def format_letter(x: int, rank: int | None = None) -> str:
    g = abs(x)
    if (rank is None or rank <= 26) and g <= 26:
        c = chr(ord("a") + g - 1)
        return c if x > 0 else c.upper()
    return f"x{g}" if x > 0 else f"X{g}"


def format_word(w: Word | Sequence[int], rank: int | None = None) -> str:
    letters = _letters(w)
    if not letters:
        return "1"
    sep = "" if (rank is None or rank <= 26) and all(abs(x) <= 26 for x in letters) else " "
    return sep.join(format_letter(x, rank) for x in letters)


def reduced_words(rank: int, max_len: int, min_len: int = 0):
    """Yield every reduced word of length in [min_len, max_len], shortlex order."""
    alphabet = Alphabet(rank).letters()

    def extend(prefix: list[int], remaining: int):
        if remaining == 0:
            yield tuple(prefix)
            return
        last = prefix[-1] if prefix else 0
        for x in alphabet:
            if x == -last:
                continue
            prefix.append(x)
            yield from extend(prefix, remaining - 1)
            prefix.pop()

    for n in range(min_len, max_len + 1):
        yield from extend([], n)
