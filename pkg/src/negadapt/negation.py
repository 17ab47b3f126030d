"""Rule-based verbal negation of simple English sentences.

Three rules, applied in priority order to the first finite verb:

1. A copula, auxiliary, or modal gets "not" inserted after it.
2. If that token is already negated ("not" follows it, or it is a
   negative contraction), the negation cue is deleted instead.
3. Otherwise the first recognizable lexical verb is replaced with
   do-support: "do/does/did not" + lemma.

This is a deliberate approximation: it negates the first finite verb
only, knows a fixed table of common verbs plus a suffix-stripping
fallback, and makes no attempt at parsing. Sentences it cannot handle
raise CannotNegate so callers can skip them explicitly.
"""

from __future__ import annotations

from .errors import CannotNegate

AUXILIARIES = frozenset(
    "is are was were am has have had will would can could may might must should do does did".split()
)

# negative contraction -> positive auxiliary
_CONTRACTIONS = {
    "isn't": "is",
    "aren't": "are",
    "wasn't": "was",
    "weren't": "were",
    "hasn't": "has",
    "haven't": "have",
    "hadn't": "had",
    "won't": "will",
    "wouldn't": "would",
    "can't": "can",
    "cannot": "can",
    "couldn't": "could",
    "mightn't": "might",
    "mustn't": "must",
    "shouldn't": "should",
    "don't": "do",
    "doesn't": "does",
    "didn't": "did",
}

_LEMMAS = (
    "add allow appear ask bark believe bring build buy call catch change choose clap come "
    "continue create cry cut dance die drink drive drop eat expect fall feel fight find fly "
    "follow get give go grab grow happen hate hear hold include jump kill know laugh lead "
    "learn leave like live lose love make meet move need offer open pay plan play provide "
    "reach read remain remember ride run say see seem sell send serve set sing sit sleep "
    "smile speak spend stand stay stop swim take talk teach tell think throw trip try "
    "understand wait walk want watch wear win work write"
).split()

_IRREGULAR_PAST = {
    "bring": "brought", "build": "built", "buy": "bought", "catch": "caught",
    "choose": "chose", "come": "came", "cut": "cut", "drink": "drank",
    "drive": "drove", "eat": "ate", "fall": "fell", "feel": "felt",
    "fight": "fought", "find": "found", "fly": "flew", "get": "got",
    "give": "gave", "go": "went", "grow": "grew", "hear": "heard",
    "hold": "held", "know": "knew", "lead": "led", "leave": "left",
    "lose": "lost", "make": "made", "meet": "met", "pay": "paid",
    "read": "read", "ride": "rode", "run": "ran", "say": "said",
    "see": "saw", "sell": "sold", "send": "sent", "set": "set",
    "sing": "sang", "sit": "sat", "sleep": "slept", "speak": "spoke",
    "spend": "spent", "stand": "stood", "swim": "swam", "take": "took",
    "teach": "taught", "tell": "told", "think": "thought", "throw": "threw",
    "understand": "understood", "wear": "wore", "win": "won", "write": "wrote",
}

_VOWELS = set("aeiou")


def _doubles_final(lemma: str) -> bool:
    # consonant-vowel-consonant endings double before -ed (stop -> stopped)
    if len(lemma) < 3:
        return False
    a, b, c = lemma[-3], lemma[-2], lemma[-1]
    return a not in _VOWELS and b in _VOWELS and c not in _VOWELS and c not in "wxy"


def _third_person(lemma: str) -> str:
    if lemma.endswith(("s", "sh", "ch", "x", "z", "o")):
        return lemma + "es"
    if lemma.endswith("y") and len(lemma) > 1 and lemma[-2] not in _VOWELS:
        return lemma[:-1] + "ies"
    return lemma + "s"


def _past(lemma: str) -> str:
    if lemma in _IRREGULAR_PAST:
        return _IRREGULAR_PAST[lemma]
    if lemma.endswith("e"):
        return lemma + "d"
    if lemma.endswith("y") and len(lemma) > 1 and lemma[-2] not in _VOWELS:
        return lemma[:-1] + "ied"
    if _doubles_final(lemma):
        return lemma + lemma[-1] + "ed"
    return lemma + "ed"


def _build_form_table() -> dict[str, tuple[str, str]]:
    table: dict[str, tuple[str, str]] = {}
    for lemma in _LEMMAS:
        # base form last so it wins collisions like "read" (base vs past)
        table[_past(lemma)] = ("did", lemma)
        table[_third_person(lemma)] = ("does", lemma)
        table[lemma] = ("do", lemma)
    return table


_VERB_FORMS = _build_form_table()

_TRAILING_PUNCT = ".,!?;:\"'"


def _split_punct(token: str) -> tuple[str, str]:
    core = token.rstrip(_TRAILING_PUNCT)
    return core, token[len(core):]


def _strip_and_guess(core: str) -> tuple[str, str] | None:
    """Suffix-stripping fallback for inflected verbs missing from the table."""
    low = core.lower()
    if len(low) > 4 and low.endswith("ied"):
        return "did", low[:-3] + "y"
    if len(low) > 4 and low.endswith("ed"):
        stem = low[:-2]
        if len(stem) > 2 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS:
            stem = stem[:-1]
        return "did", stem
    if len(low) > 4 and low.endswith("ies"):
        return "does", low[:-3] + "y"
    if len(low) > 3 and low.endswith("es") and low[:-2].endswith(("s", "sh", "ch", "x", "z", "o")):
        return "does", low[:-2]
    if len(low) > 3 and low.endswith("s") and not low.endswith("ss"):
        return "does", low[:-1]
    return None


def _match_case(template: str, word: str) -> str:
    if template[:1].isupper():
        return word[:1].upper() + word[1:]
    return word


def negate_sentence(sentence: str) -> str:
    """Negate the first finite verb of `sentence`, or undo an existing negation.

    Raises CannotNegate when no auxiliary and no recognizable lexical verb
    is found.
    """
    if not sentence or not sentence.strip():
        raise CannotNegate("empty sentence")
    tokens = sentence.split()

    for i, token in enumerate(tokens):
        core, punct = _split_punct(token)
        low = core.lower()

        if low in _CONTRACTIONS:
            positive = _match_case(core, _CONTRACTIONS[low])
            out = tokens[:i] + [positive + punct] + tokens[i + 1:]
            return " ".join(out)

        if low in AUXILIARIES:
            if i + 1 < len(tokens):
                next_core, next_punct = _split_punct(tokens[i + 1])
                if next_core.lower() == "not":
                    # deletion branch: drop "not", hand its punctuation back
                    out = tokens[:i] + [core + punct + next_punct] + tokens[i + 2:]
                    return " ".join(out)
            out = tokens[:i] + [core, "not" + punct] + tokens[i + 1:]
            return " ".join(out)

    # do-support: look up lexical verbs beyond the first token (subject
    # position collides with plural nouns too often to trust)
    start = 1 if len(tokens) > 1 else 0
    for i in range(start, len(tokens)):
        core, punct = _split_punct(tokens[i])
        hit = _VERB_FORMS.get(core.lower())
        if hit is not None:
            aux, lemma = hit
            replacement = [_match_case(core, aux), "not", lemma + punct]
            return " ".join(tokens[:i] + replacement + tokens[i + 1:])

    for i in range(start, len(tokens)):
        core, punct = _split_punct(tokens[i])
        guess = _strip_and_guess(core)
        if guess is not None:
            aux, lemma = guess
            replacement = [_match_case(core, aux), "not", lemma + punct]
            return " ".join(tokens[:i] + replacement + tokens[i + 1:])

    raise CannotNegate(f"no negatable verb found in: {sentence!r}")
