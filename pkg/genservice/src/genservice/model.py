"""Toy sequence-to-sequence model and fine-tuning loop.

Word-level GRU encoder-decoder trained with teacher forcing on the
pipeline's training-pair JSONL files ({"input", "target", ...} per
line). Desk-scale only; the checkpoint format is internal to this
service, the wire protocol is the contract.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field

import torch
from torch import nn

log = logging.getLogger(__name__)

PAD, BOS, EOS, UNK = 0, 1, 2, 3
_SPECIALS = ["<pad>", "<bos>", "<eos>", "<unk>"]

PROMPTER_ROLE = "prompter"
QG_ROLE = "qg"


@dataclass
class Hyperparams:
    epochs: int = 30
    learning_rate: float = 3e-5
    adam_epsilon: float = 1e-8
    batch_size: int = 8
    hidden_size: int = 64
    embed_size: int = 32
    # epochs without train-loss improvement before stopping
    early_stop_patience: int = 10
    warmup_steps: int = 0
    max_input_tokens: int = 512
    max_target_tokens: int = 128
    seed: int = 0
    extra: dict = field(default_factory=dict)


def read_pairs(path):
    pairs = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            pairs.append((rec["input"], rec["target"]))
    if not pairs:
        raise ValueError(f"no training pairs in {path}")
    return pairs


def build_vocab(pairs):
    tokens = sorted({t for src, tgt in pairs for t in (src + " " + tgt).split()})
    vocab = {tok: i for i, tok in enumerate(_SPECIALS)}
    for tok in tokens:
        vocab.setdefault(tok, len(vocab))
    return vocab


def encode(text: str, vocab: dict, cap: int):
    return [vocab.get(t, UNK) for t in text.split()[:cap]]


class Seq2Seq(nn.Module):
    def __init__(self, vocab_size: int, embed_size: int, hidden_size: int):
        super().__init__()
        self.embed = nn.Embedding(vocab_size, embed_size, padding_idx=PAD)
        self.encoder = nn.GRU(embed_size, hidden_size, batch_first=True)
        self.decoder = nn.GRU(embed_size, hidden_size, batch_first=True)
        self.out = nn.Linear(hidden_size, vocab_size)

    def forward(self, src, tgt_in):
        _, state = self.encoder(self.embed(src))
        hidden, _ = self.decoder(self.embed(tgt_in), state)
        return self.out(hidden)

    def encode_state(self, src):
        _, state = self.encoder(self.embed(src))
        return state

    def step(self, token, state):
        hidden, state = self.decoder(self.embed(token), state)
        return self.out(hidden[:, -1]), state


def _batches(items, size):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def _pad(rows, pad=PAD):
    width = max(len(r) for r in rows)
    return torch.tensor([r + [pad] * (width - len(r)) for r in rows])


def finetune(pairs_path, role: str, hp: Hyperparams, checkpoint_path) -> dict:
    """Train on a training-pair file and write a loadable checkpoint.

    Returns a summary dict with per-epoch losses. The QG role lowercases
    both sides before training; prompter pairs are consumed as given
    (the pipeline already merged and shuffled them).
    """
    if role not in (PROMPTER_ROLE, QG_ROLE):
        raise ValueError(f"unknown role {role!r}")
    pairs = read_pairs(pairs_path)
    if role == QG_ROLE:
        pairs = [(s.lower(), t.lower()) for s, t in pairs]
    vocab = build_vocab(pairs)

    torch.manual_seed(hp.seed)
    rng = random.Random(hp.seed)
    model = Seq2Seq(len(vocab), hp.embed_size, hp.hidden_size)
    optim = torch.optim.Adam(model.parameters(), lr=hp.learning_rate,
                             eps=hp.adam_epsilon)
    loss_fn = nn.CrossEntropyLoss(ignore_index=PAD)

    encoded = [
        (encode(s, vocab, hp.max_input_tokens),
         encode(t, vocab, hp.max_target_tokens))
        for s, t in pairs
    ]

    losses = []
    best = math.inf
    stale = 0
    step = 0
    for epoch in range(1, hp.epochs + 1):
        order = list(range(len(encoded)))
        rng.shuffle(order)
        total = 0.0
        count = 0
        for batch_ids in _batches(order, hp.batch_size):
            batch = [encoded[i] for i in batch_ids]
            src = _pad([s for s, _ in batch])
            tgt_in = _pad([[BOS] + t for _, t in batch])
            tgt_out = _pad([t + [EOS] for _, t in batch])
            logits = model(src, tgt_in)
            loss = loss_fn(logits.reshape(-1, logits.size(-1)),
                           tgt_out.reshape(-1))
            optim.zero_grad()
            loss.backward()
            step += 1
            if hp.warmup_steps and step <= hp.warmup_steps:
                scale = step / hp.warmup_steps
                for group in optim.param_groups:
                    group["lr"] = hp.learning_rate * scale
            optim.step()
            total += loss.item() * len(batch)
            count += len(batch)
        epoch_loss = total / count
        losses.append(epoch_loss)
        log.info("epoch %d loss %.4f", epoch, epoch_loss)
        if epoch_loss < best - 1e-6:
            best = epoch_loss
            stale = 0
        else:
            stale += 1
            if stale >= hp.early_stop_patience:
                log.info("early stop at epoch %d", epoch)
                break

    torch.save(
        {
            "role": role,
            "vocab": vocab,
            "state_dict": model.state_dict(),
            "embed_size": hp.embed_size,
            "hidden_size": hp.hidden_size,
            "max_input_tokens": hp.max_input_tokens,
        },
        checkpoint_path,
    )
    return {"epochs_run": len(losses), "losses": losses, "best": best}


class ModelBackend:
    """Beam-search decoding over a fine-tuned checkpoint."""

    def __init__(self, checkpoint_path):
        ckpt = torch.load(checkpoint_path, map_location="cpu",
                          weights_only=False)
        self.vocab = ckpt["vocab"]
        self.inverse = {i: t for t, i in self.vocab.items()}
        self.role = ckpt["role"]
        self.max_input_tokens = ckpt.get("max_input_tokens", 512)
        self.model = Seq2Seq(len(self.vocab), ckpt["embed_size"],
                             ckpt["hidden_size"])
        self.model.load_state_dict(ckpt["state_dict"])
        self.model.eval()

    @torch.no_grad()
    def _beam_decode(self, ids, beam_size, length_penalty, max_length):
        src = torch.tensor([ids or [UNK]])
        state = self.model.encode_state(src)
        beams = [([BOS], 0.0, state, False)]
        for _ in range(max_length):
            if all(done for _, _, _, done in beams):
                break
            candidates = []
            for tokens, score, st, done in beams:
                if done:
                    candidates.append((tokens, score, st, True))
                    continue
                logits, new_state = self.model.step(
                    torch.tensor([[tokens[-1]]]), st
                )
                logprobs = torch.log_softmax(logits[0], dim=-1)
                top = torch.topk(logprobs, beam_size)
                for lp, idx in zip(top.values.tolist(), top.indices.tolist()):
                    candidates.append(
                        (tokens + [idx], score + lp, new_state, idx == EOS)
                    )

            def ranked(c):
                tokens, score, _, _ = c
                length = max(len(tokens) - 1, 1)
                return score / (length ** length_penalty)

            candidates.sort(key=ranked, reverse=True)
            beams = candidates[:beam_size]
        tokens = beams[0][0]
        words = [
            self.inverse.get(t, "<unk>")
            for t in tokens
            if t not in (BOS, EOS, PAD)
        ]
        return " ".join(words)

    def generate(self, inputs, beam_size=10, length_penalty=1.0,
                 max_length=128):
        outputs = []
        for text in inputs:
            if self.role == QG_ROLE:
                text = text.lower()
            ids = encode(text, self.vocab, self.max_input_tokens)
            outputs.append(
                self._beam_decode(ids, beam_size, length_penalty, max_length)
            )
        return outputs
