"""Word and character error rates.

Rates are (S + I + D) / len(reference) and may exceed 1; they are never
clipped. The caller normalizes text exactly as it was normalized for
training; WER then tokenizes on whitespace and CER on Unicode codepoints
with spaces included.
"""

from ..errors import EmptyReferenceError
from .edits import edit_distance


def wer(ref: str, hyp: str) -> float:
    ref_tokens = ref.split()
    if not ref_tokens:
        raise EmptyReferenceError("WER against an empty reference is undefined")
    return edit_distance(ref_tokens, hyp.split()).total / len(ref_tokens)


def cer(ref: str, hyp: str) -> float:
    ref_chars = list(ref)
    if not ref_chars:
        raise EmptyReferenceError("CER against an empty reference is undefined")
    return edit_distance(ref_chars, list(hyp)).total / len(ref_chars)
