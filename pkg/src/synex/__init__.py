"""Example sentence selection for confusing near-synonyms.

Given a small set of easily-confused words and candidate sentence pools,
rank the sentences that best expose how the words differ, using per-word
usage models (a context-window Gaussian mixture or a whole-sentence
BiLSTM), a dictionary-likeness filter, and a clarification score; with
optional pool restriction to sentences sharing a first-language gloss.
"""

__version__ = "0.1.0"
