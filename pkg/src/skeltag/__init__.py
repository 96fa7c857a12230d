"""Part-of-speech tagging toolkit for skeletal sentence structure extraction."""

from skeltag.corpus import Corpus, TaggedSentence, TagSet, parse_conll, write_conll

__all__ = ["Corpus", "TaggedSentence", "TagSet", "parse_conll", "write_conll"]

__version__ = "0.1.0"
