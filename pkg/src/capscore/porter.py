"""Classic Porter suffix-stripping stemmer (the 1980 algorithm, steps 1a to 5b).

Operates on lowercase ASCII words only; anything with a non-ASCII character is
returned unchanged, as are words of length <= 2. Behavior matches the widely
used reference ports, including their small deviations from the 1980 rule
text (the "logi" rule in step 2, the eed guard in step 1).
"""


class _Word:
    # mutable buffer with the b / k0..k / j indexing used by the reference code
    __slots__ = ("b", "k", "j")

    def __init__(self, word):
        self.b = word
        self.k = len(word) - 1
        self.j = 0

    def cons(self, i):
        ch = self.b[i]
        if ch in "aeiou":
            return False
        if ch == "y":
            return True if i == 0 else not self.cons(i - 1)
        return True

    def measure(self):
        # number of VC sequences in b[0..j]
        n = 0
        i = 0
        while True:
            if i > self.j:
                return n
            if not self.cons(i):
                break
            i += 1
        i += 1
        while True:
            while True:
                if i > self.j:
                    return n
                if self.cons(i):
                    break
                i += 1
            i += 1
            n += 1
            while True:
                if i > self.j:
                    return n
                if not self.cons(i):
                    break
                i += 1
            i += 1

    def vowel_in_stem(self):
        return any(not self.cons(i) for i in range(self.j + 1))

    def double_cons(self, i):
        return i >= 1 and self.b[i] == self.b[i - 1] and self.cons(i)

    def cvc(self, i):
        if i < 2 or not self.cons(i) or self.cons(i - 1) or not self.cons(i - 2):
            return False
        return self.b[i] not in "wxy"

    def ends(self, suffix):
        length = len(suffix)
        if length > self.k + 1 or not self.b.endswith(suffix, 0, self.k + 1):
            return False
        self.j = self.k - length
        return True

    def set_to(self, s):
        self.b = self.b[: self.j + 1] + s + self.b[self.j + 1 + len(s) :]
        self.k = self.j + len(s)

    def replace_if_stem(self, s):
        if self.measure() > 0:
            self.set_to(s)


# step 2 and 3 rule tables, keyed by the letter just before the end;
# within a key, order matters and mirrors the reference elif chains
_STEP2 = {
    "a": (("ational", "ate"), ("tional", "tion")),
    "c": (("enci", "ence"), ("anci", "ance")),
    "e": (("izer", "ize"),),
    "l": (("bli", "ble"), ("alli", "al"), ("entli", "ent"), ("eli", "e"), ("ousli", "ous")),
    "o": (("ization", "ize"), ("ation", "ate"), ("ator", "ate")),
    "s": (("alism", "al"), ("iveness", "ive"), ("fulness", "ful"), ("ousness", "ous")),
    "t": (("aliti", "al"), ("iviti", "ive"), ("biliti", "ble")),
    "g": (("logi", "log"),),
}

_STEP3 = {
    "e": (("icate", "ic"), ("ative", ""), ("alize", "al")),
    "i": (("iciti", "ic"),),
    "l": (("ical", "ic"), ("ful", "")),
    "s": (("ness", ""),),
}

_STEP4_PLAIN = {
    "a": ("al",),
    "c": ("ance", "ence"),
    "e": ("er",),
    "i": ("ic",),
    "l": ("able", "ible"),
    "n": ("ant", "ement", "ment", "ent"),
    "s": ("ism",),
    "t": ("ate", "iti"),
    "u": ("ous",),
    "v": ("ive",),
    "z": ("ize",),
}


def _step1ab(w):
    if w.b[w.k] == "s":
        if w.ends("sses"):
            w.k -= 2
        elif w.ends("ies"):
            w.set_to("i")
        elif w.b[w.k - 1] != "s":
            w.k -= 1
    if w.ends("eed"):
        if w.measure() > 0:
            w.k -= 1
    elif (w.ends("ed") or w.ends("ing")) and w.vowel_in_stem():
        w.k = w.j
        if w.ends("at"):
            w.set_to("ate")
        elif w.ends("bl"):
            w.set_to("ble")
        elif w.ends("iz"):
            w.set_to("ize")
        elif w.double_cons(w.k):
            if w.b[w.k - 1] not in "lsz":
                w.k -= 1
        elif w.measure() == 1 and w.cvc(w.k):
            w.set_to("e")


def _step1c(w):
    if w.ends("y") and w.vowel_in_stem():
        w.b = w.b[: w.k] + "i" + w.b[w.k + 1 :]


def _table_step(w, table):
    rules = table.get(w.b[w.k - 1] if table is _STEP2 else w.b[w.k])
    if not rules:
        return
    for suffix, repl in rules:
        if w.ends(suffix):
            w.replace_if_stem(repl)
            return


def _step4(w):
    key = w.b[w.k - 1]
    matched = False
    if key == "o":
        matched = (w.ends("ion") and w.b[w.j] in "st") or w.ends("ou")
    else:
        for suffix in _STEP4_PLAIN.get(key, ()):
            if w.ends(suffix):
                matched = True
                break
    if matched and w.measure() > 1:
        w.k = w.j


def _step5(w):
    w.j = w.k
    if w.b[w.k] == "e":
        a = w.measure()
        if a > 1 or (a == 1 and not w.cvc(w.k - 1)):
            w.k -= 1
    if w.b[w.k] == "l" and w.double_cons(w.k) and w.measure() > 1:
        w.k -= 1


def porter_stem(word: str) -> str:
    """Stem one lowercase ASCII token; non-ASCII input is returned as is."""
    if len(word) <= 2 or not word.isascii():
        return word
    w = _Word(word)
    _step1ab(w)
    _step1c(w)
    _table_step(w, _STEP2)
    _table_step(w, _STEP3)
    _step4(w)
    _step5(w)
    return w.b[: w.k + 1]
