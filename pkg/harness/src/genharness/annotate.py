"""Caption annotation: universal POS tags, token flags, entity counts.

Uses spaCy when an English pipeline is importable; otherwise falls back
to a deterministic rule-based tagger (closed-class lexicons, suffix
heuristics, capitalization-based proper-noun detection). The fallback is
approximate by design: what matters downstream is that every token
carries a tag from the universal inventory and that the output JSONL is
machine-consumable, one record per manifest id.
"""

from __future__ import annotations

import json
import re
import sys
from dataclasses import dataclass

from . import manifest_io

UPOS_TAGS = frozenset((
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X", "SPACE",
))

_TOKEN_RE = re.compile(r"\s+|[A-Za-z]+(?:'[A-Za-z]+)?|\d+(?:[.,]\d+)*|.")

_LEXICON = {
    "DET": {"a", "an", "the", "this", "that", "these", "those", "some",
            "any", "no", "every", "each", "another", "all", "both"},
    "ADP": {"in", "on", "at", "by", "with", "from", "of", "to", "into",
            "onto", "over", "under", "near", "through", "between", "behind",
            "above", "below", "during", "against", "across", "along",
            "around", "beside", "inside", "outside", "off", "up", "down"},
    "PRON": {"i", "you", "he", "she", "it", "we", "they", "me", "him",
             "her", "us", "them", "his", "hers", "its", "their", "my",
             "your", "our", "mine", "yours", "theirs", "who", "whom",
             "which", "what", "something", "someone", "anything", "nothing",
             "everything", "itself", "himself", "herself", "themselves"},
    "AUX": {"is", "are", "was", "were", "be", "been", "being", "am",
            "has", "have", "had", "do", "does", "did", "will", "would",
            "shall", "should", "can", "could", "may", "might", "must"},
    "CCONJ": {"and", "or", "but", "nor", "yet", "so"},
    "SCONJ": {"if", "because", "while", "although", "though", "since",
              "unless", "until", "whereas", "when", "where", "as"},
    "PART": {"not", "n't", "to"},
    "INTJ": {"oh", "wow", "hey", "ah", "hmm", "ouch", "yay"},
    "ADV": {"very", "quite", "too", "also", "then", "there", "here", "now",
            "never", "always", "often", "again", "still", "just", "only",
            "together", "away", "back", "well", "perhaps", "almost"},
    "NUM": {"zero", "one", "two", "three", "four", "five", "six", "seven",
            "eight", "nine", "ten", "eleven", "twelve", "twenty", "thirty",
            "hundred", "thousand", "million", "first", "second", "third"},
    "ADJ": {"big", "small", "large", "little", "old", "young", "new",
            "long", "short", "tall", "high", "low", "red", "blue", "green",
            "yellow", "white", "black", "brown", "orange", "purple", "pink",
            "gray", "grey", "good", "bad", "hot", "cold", "warm", "dark",
            "bright", "happy", "sad", "empty", "full", "open", "closed",
            "wooden", "metal", "busy", "quiet", "modern", "vintage",
            "giant", "tiny", "fluffy", "shiny", "rusty", "colorful",
            "crowded", "sunny", "cloudy", "snowy", "rainy", "foggy",
            "several", "many", "few", "wild", "fresh", "delicious"},
    "VERB": {"run", "runs", "ran", "running", "walk", "walks", "walking",
             "sit", "sits", "sitting", "stand", "stands", "standing",
             "eat", "eats", "eating", "sleep", "sleeps", "sleeping",
             "play", "plays", "playing", "jump", "jumps", "jumping",
             "fly", "flies", "flying", "swim", "swims", "swimming",
             "ride", "rides", "riding", "hold", "holds", "holding",
             "look", "looks", "looking", "rest", "rests", "resting",
             "visit", "visits", "visited", "visiting", "wear", "wears",
             "wearing", "carry", "carries", "carrying", "drive", "drives",
             "driving", "parked", "cover", "covered", "fill",
             "filled", "hang", "hanging", "graze", "grazing", "perch",
             "perched", "lie", "lying", "lean", "leaning", "wait",
             "waiting", "cross", "crossing", "climb", "climbing"},
}

_STOP_WORDS = (_LEXICON["DET"] | _LEXICON["ADP"] | _LEXICON["PRON"]
               | _LEXICON["AUX"] | _LEXICON["CCONJ"] | _LEXICON["SCONJ"]
               | _LEXICON["PART"]
               | {"very", "too", "also", "then", "there", "here", "now",
                  "just", "only", "so", "such", "own", "same", "other"})

_VERB_SUFFIXES = ("ize", "izes", "ized", "izing", "ify", "ifies", "ified")
_ADJ_SUFFIXES = ("ous", "ful", "ive", "able", "ible", "less", "ish", "al",
                 "ic", "iest")
_ADV_SUFFIX = "ly"


class AnnotateError(RuntimeError):
    pass


@dataclass(frozen=True)
class AnnotationJob:
    manifest_path: str
    out_path: str
    lang: str = "en"
    pipeline: str = ""  # spaCy model name; empty -> auto with fallback


def _tag_word(word: str, sentence_initial: bool) -> str:
    lower = word.lower()
    for tag, words in _LEXICON.items():
        if lower in words:
            return tag
    if len(word) >= 2 and word.isupper():
        return "PROPN"
    if word[:1].isupper() and not sentence_initial:
        return "PROPN"
    if word.endswith(_ADV_SUFFIX) and len(word) > 3:
        return "ADV"
    if lower.endswith(_VERB_SUFFIXES):
        return "VERB"
    if lower.endswith(_ADJ_SUFFIXES) and len(word) > 4:
        return "ADJ"
    if word[:1].isupper() and sentence_initial and lower.endswith(
            ("s", "a", "n", "y", "e")) and len(word) > 2 and not any(
            lower in words for words in _LEXICON.values()):
        # capitalized sentence opener that no lexicon knows: likely a name
        return "PROPN"
    return "NOUN"


def rule_annotate(caption: str) -> tuple[list[dict], int]:
    """Tokenize and tag one caption; returns (tokens, n_entities)."""
    tokens: list[dict] = []
    n_entities = 0
    in_entity = False
    sentence_initial = True
    for match in _TOKEN_RE.finditer(caption):
        text = match.group(0)
        if text.isspace():
            tokens.append({"text": text, "upos": "SPACE", "is_stop": False,
                           "is_alpha": False, "is_space": True})
            continue
        if text[0].isalpha():
            upos = _tag_word(text, sentence_initial)
            is_alpha = text.isalpha()
        elif text[0].isdigit():
            upos, is_alpha = "NUM", False
        elif text in "$%+=<>^|~&#@*":
            upos, is_alpha = "SYM", False
        else:
            upos, is_alpha = "PUNCT", False
        tokens.append({
            "text": text,
            "upos": upos,
            "is_stop": text.lower() in _STOP_WORDS,
            "is_alpha": is_alpha,
            "is_space": False,
        })
        if upos == "PROPN":
            if not in_entity:
                n_entities += 1
            in_entity = True
        else:
            in_entity = False
        if upos != "PUNCT" or text not in "\"'([{":
            sentence_initial = text in ".!?"
    return tokens, n_entities


def _spacy_pipeline(name: str):
    try:
        import spacy
    except ImportError:
        return None
    for candidate in filter(None, (name, "en_core_web_sm")):
        try:
            return spacy.load(candidate)
        except Exception:
            continue
    return None


def _spacy_annotate(nlp, caption: str) -> tuple[list[dict], int]:
    doc = nlp(caption)
    tokens = [{
        "text": tok.text_with_ws if tok.is_space else tok.text,
        "upos": tok.pos_ if tok.pos_ in UPOS_TAGS else "X",
        "is_stop": tok.is_stop,
        "is_alpha": tok.is_alpha,
        "is_space": tok.is_space,
    } for tok in doc]
    return tokens, len(doc.ents)


def annotate(job: AnnotationJob, log=sys.stderr) -> int:
    """Write one annotation row per manifest record; returns row count."""
    if job.lang != "en":
        raise AnnotateError(f"unsupported language {job.lang!r}")
    rows = manifest_io.read_rows(job.manifest_path)
    nlp = _spacy_pipeline(job.pipeline)
    if nlp is None:
        print("annotate: spaCy pipeline unavailable, using rule-based "
              "fallback tagger", file=log)
    count = 0
    with open(job.out_path, "w", encoding="utf-8") as fh:
        for row in rows:
            caption = row["caption"]
            if nlp is not None:
                tokens, n_entities = _spacy_annotate(nlp, caption)
            else:
                tokens, n_entities = rule_annotate(caption)
            fh.write(json.dumps({
                "id": row["id"],
                "caption": caption,
                "tokens": tokens,
                "n_entities": n_entities,
            }, ensure_ascii=False))
            fh.write("\n")
            count += 1
    return count
