"""Tokenization shared by features and title vectors."""

import re

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_SENTENCE_RE = re.compile(r"[.!?]+")
_URL_RE = re.compile(r"https?://\S+|www\.\S+")
_CLOSING_RE = re.compile(r"[.!?]")


def tokenize(text):
    """Lowercase alphanumeric tokens, punctuation stripped."""
    return _TOKEN_RE.findall(text.lower())


def sentences(text):
    """Non-empty sentence chunks, split on closing punctuation . ! ?"""
    return [s for s in (p.strip() for p in _SENTENCE_RE.split(text)) if s]


def count_urls(text):
    return len(_URL_RE.findall(text))


def count_closing_punct(text):
    return len(_CLOSING_RE.findall(text))
