"""Supervised fine-tuning heads: language identification and CTC speech
recognition, plus the data-balancing rules they train under."""

from .vocab import CharVocab, build_char_vocab, normalize_text
from .pooling import SlidHead, attentive_pool
from .asr import AsrHead, collapse_ctc, decode_ctc_greedy
from .data import cap_slid_data, read_transcripts, sample_asr_hours, write_transcripts
from .finetune import (
    LR_GRID,
    FinetuneConfig,
    evaluate_asr,
    evaluate_slid,
    load_finetuned,
    train_asr,
    train_slid,
)

__all__ = [
    "CharVocab",
    "build_char_vocab",
    "normalize_text",
    "SlidHead",
    "attentive_pool",
    "AsrHead",
    "decode_ctc_greedy",
    "collapse_ctc",
    "cap_slid_data",
    "sample_asr_hours",
    "read_transcripts",
    "write_transcripts",
    "FinetuneConfig",
    "LR_GRID",
    "train_slid",
    "train_asr",
    "evaluate_slid",
    "evaluate_asr",
    "load_finetuned",
]
