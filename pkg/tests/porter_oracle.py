"""Independent table-driven Porter stemmer used only as a test oracle.

Deliberately structured differently from the production stemmer: the
word is translated to a consonant/vowel form string once per check, the
measure is counted on the collapsed form, and each step is a declarative
table of (suffix, replacement, condition) rules applied longest-suffix
first.  Same rule set: classic Porter with the bli/ble, logi/log and
fulli/ful amendments, words of length <= 2 untouched.
"""

from __future__ import annotations

import re


def _cv_form(word: str) -> str:
    """Translate to 'c'/'v' per Porter's definition (y is a vowel only
    when it follows a consonant)."""
    out = []
    for i, ch in enumerate(word):
        if ch in "aeiou":
            out.append("v")
        elif ch == "y":
            out.append("c" if i == 0 or out[i - 1] == "v" else "v")
        else:
            out.append("c")
    return "".join(out)


def _m(word: str) -> int:
    collapsed = re.sub(r"c+", "C", re.sub(r"v+", "V", _cv_form(word)))
    return collapsed.count("VC")


def _has_vowel(word: str) -> bool:
    return "v" in _cv_form(word)


def _ends_cvc_not_wxy(word: str) -> bool:
    return (
        len(word) >= 3
        and _cv_form(word).endswith("cvc")
        and word[-1] not in "wxy"
    )


def _double_cons(word: str) -> bool:
    return len(word) >= 2 and word[-1] == word[-2] and _cv_form(word)[-1] == "c"


def _apply_table(word, table):
    """Apply the single longest-suffix rule whose condition holds on the
    stem; a matched suffix with a failing condition still consumes the
    step (Porter: one rule per step)."""
    candidates = sorted(table, key=lambda r: -len(r[0]))
    for suffix, repl, cond in candidates:
        if word.endswith(suffix):
            stem = word[: -len(suffix)] if suffix else word
            if cond(stem):
                return stem + repl
            return word
    return word


def oracle_stem(word: str) -> str:
    if len(word) <= 2:
        return word

    # Step 1a
    if word.endswith("sses"):
        word = word[:-2]
    elif word.endswith("ies"):
        word = word[:-2]
    elif word.endswith("s") and not word.endswith("ss"):
        word = word[:-1]

    # Step 1b
    if word.endswith("eed"):
        if _m(word[:-3]) > 0:
            word = word[:-1]
    else:
        hit = None
        if word.endswith("ed") and _has_vowel(word[:-2]):
            hit = word[:-2]
        elif word.endswith("ing") and _has_vowel(word[:-3]):
            hit = word[:-3]
        if hit is not None:
            if re.search(r"(at|bl|iz)$", hit):
                word = hit + "e"
            elif _double_cons(hit) and hit[-1] not in "lsz":
                word = hit[:-1]
            elif _m(hit) == 1 and _ends_cvc_not_wxy(hit):
                word = hit + "e"
            else:
                word = hit

    # Step 1c
    if word.endswith("y") and _has_vowel(word[:-1]):
        word = word[:-1] + "i"

    m_pos = lambda stem: _m(stem) > 0
    word = _apply_table(
        word,
        [
            ("ational", "ate", m_pos), ("tional", "tion", m_pos),
            ("enci", "ence", m_pos), ("anci", "ance", m_pos),
            ("izer", "ize", m_pos), ("bli", "ble", m_pos),
            ("alli", "al", m_pos), ("fulli", "ful", m_pos),
            ("entli", "ent", m_pos), ("eli", "e", m_pos),
            ("ousli", "ous", m_pos), ("ization", "ize", m_pos),
            ("ation", "ate", m_pos), ("ator", "ate", m_pos),
            ("alism", "al", m_pos), ("iveness", "ive", m_pos),
            ("fulness", "ful", m_pos), ("ousness", "ous", m_pos),
            ("aliti", "al", m_pos), ("iviti", "ive", m_pos),
            ("biliti", "ble", m_pos), ("logi", "log", m_pos),
        ],
    )
    word = _apply_table(
        word,
        [
            ("icate", "ic", m_pos), ("ative", "", m_pos),
            ("alize", "al", m_pos), ("iciti", "ic", m_pos),
            ("ical", "ic", m_pos), ("ful", "", m_pos),
            ("ness", "", m_pos),
        ],
    )
    m_gt1 = lambda stem: _m(stem) > 1
    word = _apply_table(
        word,
        [(s, "", m_gt1) for s in (
            "al", "ance", "ence", "er", "ic", "able", "ible", "ant",
            "ement", "ment", "ent", "ou", "ism", "ate", "iti",
            "ous", "ive", "ize",
        )] + [("ion", "", lambda stem: stem.endswith(("s", "t")) and _m(stem) > 1)],
    )

    # Step 5a
    if word.endswith("e"):
        stem = word[:-1]
        if _m(stem) > 1 or (_m(stem) == 1 and not _ends_cvc_not_wxy(stem)):
            word = stem
    # Step 5b
    if word.endswith("ll") and _m(word[:-1]) > 1:
        word = word[:-1]
    return word
