"""Best-effort wrapper turning a Hugging Face cross-encoder into a scorer.

Requires the ``hf`` extra (torch + transformers). The model is loaded once
and shared across request threads; inference runs under a lock, so this
trades throughput for simplicity. Score mapping (see README): one logit ->
that logit; two logits -> positive minus negative class; anything wider ->
the last logit. All mappings are monotone per model, which is all the
reranking loop needs.
"""

from __future__ import annotations

import threading
from pathlib import Path

DEFAULT_TEMPLATE = "Query: {query} Document: {doc} Relevant:"


def load_hf_scorer(model_id: str, prompt_file: str | None = None):
    import torch
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    template = Path(prompt_file).read_text(encoding="utf-8") if prompt_file else DEFAULT_TEMPLATE
    if "{query}" not in template or "{doc}" not in template:
        raise ValueError("prompt template must contain {query} and {doc} placeholders")
    tokenizer = AutoTokenizer.from_pretrained(model_id)
    model = AutoModelForSequenceClassification.from_pretrained(model_id)
    model.eval()
    lock = threading.Lock()

    def score(query_text: str, doc_id: str, doc_text: str) -> float:
        prompt = template.format(query=query_text, doc=doc_text)
        with lock, torch.no_grad():
            inputs = tokenizer(prompt, return_tensors="pt", truncation=True, max_length=512)
            logits = model(**inputs).logits[0]
        if logits.numel() == 1:
            return float(logits.item())
        if logits.numel() == 2:
            return float(logits[1].item() - logits[0].item())
        return float(logits[-1].item())

    return score
