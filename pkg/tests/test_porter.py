"""Stemmer unit tests and the dual-implementation agreement check."""

from __future__ import annotations

import time

import pytest

from tagforge.porter import stem

from porter_oracle import oracle_stem

# Classic suffix-stripping exemplars (inputs on the left of each rule
# family), plus hash-tag-ish material.
EXPLICIT_WORDS = """
caresses ponies ties caress cats feed agreed plastered bled motoring
sing conflated troubled sized hopping tanned falling hissing fizzed
failing filing happy sky relational conditional rational valenci
hesitanci digitizer conformabli radicalli differentli vileli
analogousli vietnamization predication operator feudalism decisiveness
hopefulness callousness formaliti sensitiviti sensibiliti triplicate
formative formalize electriciti electrical hopeful goodness revival
allowance inference airliner gyroscopical adjustable defensible
irritant replacement adjustment dependent adoption homologou communism
activate angulariti homologous effective bowdlerize probate rate cease
controll roll controlling generalizations oscillators
fish fished fishing fisher beauty beautiful beautifully beautify
basketball dunk ballislife hoopmixtape workout gym burpees exercise
kayaking statepark lake whitewater paddleboard lagoon lakelife boat
volleyball benchpress yoyo salsa skateboarding skiing soccer swing
tennis juggling lunges nunchucks piano polevault pushups diving
drumming fencing golf highjump horseriding hulahoop billiards boxing
breaststroke baseball biking instafitness armday gymflow gymday
muscleup calisthenics superset gymrat athlete tracknation trackandfield
discusthrow highjump maxvelocity blockstart longjump laugh fail win
fight lol funny videos summer adventure state park proceed exceed
succeed canning inning outing herring earring dying lying tying news
innings proceeded dies die agree agreeable disagreement lovely lively
singly singeing aging ageing controlled enjoyable enjoyably enjoyment
yellow yearly year yes eye eyes oyster say day destroy destroying
employ employer employee deploy deployed deployment annoy annoyingly
happily happiness unhappiness snappy toy toys try tries trying use
useful usefulness user using ice ore are eve axes axe box boxes boxer
quiz quizzed whiz buzz buzzing fuzzy was his hers its as is be by on
""".split()

ROOTS = """
act bake call dance educate farm glow hunt invite joke kick love mourn
nominate open play question rest stream talk unify visit walk yield
zone adapt bless climb drift excite flood grasp hover ignite jump knit
lift mend notice obey paint quote rescue shout trust urge vanish wish
absorb borrow create deliver expand follow gather happen imagine
""".split()

SUFFIXES = [
    "", "s", "es", "ed", "ing", "ings", "ly", "ful", "fully", "fulness",
    "ness", "ation", "ations", "ization", "er", "ers", "ies", "y",
    "ally", "ment",
]


def corpus_wordlist() -> list[str]:
    words = set(EXPLICIT_WORDS)
    for root in ROOTS:
        for suffix in SUFFIXES:
            words.add(root + suffix)
    return sorted(words)


def test_inflection_families_share_a_stem():
    assert stem("fish") == "fish"
    assert stem("fished") == "fish"
    assert stem("fishing") == "fish"
    assert stem("beauty") == "beauti"
    assert stem("beautiful") == "beauti"
    assert stem("beautifully") == "beauti"


@pytest.mark.parametrize(
    "word,expected",
    [
        ("caresses", "caress"),
        ("ponies", "poni"),
        ("ties", "ti"),
        ("cats", "cat"),
        ("feed", "feed"),
        ("agreed", "agre"),
        ("motoring", "motor"),
        ("sing", "sing"),
        ("hopping", "hop"),
        ("falling", "fall"),
        ("filing", "file"),
        ("happy", "happi"),
        ("sky", "sky"),
        ("relational", "relat"),
        ("vietnamization", "vietnam"),
        ("triplicate", "triplic"),
        ("hopeful", "hope"),
        ("goodness", "good"),
        ("revival", "reviv"),
        ("adjustment", "adjust"),
        ("homologous", "homolog"),
        ("controlling", "control"),
        ("rate", "rate"),
        ("cease", "ceas"),
        ("on", "on"),
    ],
)
def test_known_stems(word, expected):
    assert stem(word) == expected


def test_short_words_untouched():
    for word in ("a", "is", "as", "by", "ox"):
        assert stem(word) == word


def test_agreement_with_oracle_on_corpus_list():
    words = corpus_wordlist()
    assert len(words) >= 1000
    start = time.monotonic()
    mismatches = [
        (w, stem(w), oracle_stem(w)) for w in words if stem(w) != oracle_stem(w)
    ]
    elapsed = time.monotonic() - start
    assert mismatches == []
    assert elapsed < 1.0
