"""scikit-learn style estimators wrapping labeling, the NAR repair model and the AR baseline."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from narfix.depmat import DEFAULT_P_MAX
from narfix.labeling import label_records
from narfix.narmodel.ar import ARRepairNet
from narfix.narmodel.config import ModelConfig
from narfix.narmodel.model import NARRepairNet
from narfix.pipeline.checkpoint import load_model, save_model
from narfix.pipeline.repair import DEFAULT_WIDTH, generate_candidates
from narfix.pipeline.train import TrainConfig, train_model
from narfix.toylang.vocab import Vocabulary
from narfix.validation import check_pairs, check_token_sequences

_MODEL_PARAMS = tuple(ModelConfig.__dataclass_fields__)
_TRAIN_PARAMS = tuple(TrainConfig.__dataclass_fields__)


class RepairLabeler(TransformerMixin, BaseEstimator):
    """Stateless transformer: (buggy, fixed) records -> records with actions, lengths and dep."""

    def __init__(self, p_max=DEFAULT_P_MAX, threads=1):
        self.p_max = p_max
        self.threads = threads

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return label_records(check_pairs(X), self.p_max, self.threads)


class _RepairEstimator(BaseEstimator):
    _net_class = None

    def _model_config(self) -> ModelConfig:
        return ModelConfig(**{k: getattr(self, k) for k in _MODEL_PARAMS})

    def _train_config(self) -> TrainConfig:
        return TrainConfig(**{k: getattr(self, k) for k in _TRAIN_PARAMS})

    def _records(self, X, y):
        if y is not None:
            X = [{"buggy": list(b), "fixed": list(f)} for b, f in zip(check_token_sequences(X),
                                                                      check_token_sequences(y))]
        records = check_pairs(X)
        if records and "actions" not in records[0]:
            records = RepairLabeler(p_max=self.p_max).transform(records)
        return records

    def fit(self, X, y=None, log_path=None, ckpt_path=None, resume_from=None, on_batch=None,
            stop_after_epochs=None, vocab=None):
        """Fit on labeled records, or on buggy sequences ``X`` with fixed sequences ``y``."""
        records = self._records(X, y)
        if vocab is None:
            vocab = Vocabulary.build(s for r in records for s in (r["buggy"], r["fixed"]))
        self.vocab_ = vocab
        self.net_ = self._net_class(self._model_config(), len(vocab), seed=self.seed)
        self.history_ = train_model(
            self.net_, records, vocab, self._train_config(), self.seed, log_path=log_path,
            ckpt_path=ckpt_path, resume_from=resume_from, on_batch=on_batch,
            stop_after_epochs=stop_after_epochs,
        )
        self.net_.eval()
        return self

    def save(self, path) -> None:
        check_is_fitted(self, "net_")
        save_model(path, self.net_, self.vocab_, extra_header={"estimator": self.get_params()})

    @classmethod
    def load(cls, path):
        net, vocab, header, _ = load_model(path, expect_kind=cls._kind)
        params = {k: v for k, v in header.get("estimator", {}).items() if k in cls().get_params()}
        params.update({k: v for k, v in header["config"].items() if k in _MODEL_PARAMS})
        est = cls(**params)
        est.net_, est.vocab_ = net.eval(), vocab
        return est

    @classmethod
    def from_net(cls, net, vocab, **params):
        est = cls(**{**net.cfg.to_dict(), **params})
        est.net_, est.vocab_ = net.eval(), vocab
        return est


class NARRepairer(_RepairEstimator):
    """Non-autoregressive repair model with action prediction and two-stage decoding."""

    _net_class = NARRepairNet
    _kind = "nar"

    def __init__(self, d_model=64, n_enc=4, n_dec=4, k_split=2, n_heads=4, d_ff=128, l_max=8,
                 max_len=128, p_max=DEFAULT_P_MAX, tau=0.7, alpha=0.1, lam=0.1, dropout=0.1,
                 layer_dropout=0.0, conv_kernel=3, use_action_predictor=True,
                 use_dependency_extractor=True, use_two_stage=True, precision="f32", epochs=10,
                 batch_size=50, lr=1e-3, warmup=200, checkpoint_every=0, max_seconds=None,
                 n_candidates=DEFAULT_WIDTH, seed=0):
        self.d_model = d_model
        self.n_enc = n_enc
        self.n_dec = n_dec
        self.k_split = k_split
        self.n_heads = n_heads
        self.d_ff = d_ff
        self.l_max = l_max
        self.max_len = max_len
        self.p_max = p_max
        self.tau = tau
        self.alpha = alpha
        self.lam = lam
        self.dropout = dropout
        self.layer_dropout = layer_dropout
        self.conv_kernel = conv_kernel
        self.use_action_predictor = use_action_predictor
        self.use_dependency_extractor = use_dependency_extractor
        self.use_two_stage = use_two_stage
        self.precision = precision
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.warmup = warmup
        self.checkpoint_every = checkpoint_every
        self.max_seconds = max_seconds
        self.n_candidates = n_candidates
        self.seed = seed

    def predict_candidates(self, X, k=None):
        check_is_fitted(self, "net_")
        k = self.n_candidates if k is None else k
        return [generate_candidates(self.net_, self.vocab_, seq, k) for seq in check_token_sequences(X)]

    def predict(self, X):
        """Top-1 repaired token sequence per input (empty list if every variant deletes all)."""
        return [list(c[0].tokens) if c else [] for c in self.predict_candidates(X, k=1)]

    def score(self, X, y):
        pred = self.predict(X)
        return float(np.mean([p == list(t) for p, t in zip(pred, check_token_sequences(y))]))


class ARRepairer(_RepairEstimator):
    """Greedy left-to-right baseline with the same layer/width configuration."""

    _net_class = ARRepairNet
    _kind = "ar"

    def __init__(self, d_model=64, n_enc=4, n_dec=4, k_split=2, n_heads=4, d_ff=128, l_max=8,
                 max_len=128, p_max=DEFAULT_P_MAX, tau=0.7, alpha=0.1, lam=0.1, dropout=0.1,
                 layer_dropout=0.0, conv_kernel=3, use_action_predictor=True,
                 use_dependency_extractor=True, use_two_stage=True, precision="f32", epochs=10,
                 batch_size=50, lr=1e-3, warmup=200, checkpoint_every=0, max_seconds=None,
                 max_steps=None, seed=0):
        self.d_model = d_model
        self.n_enc = n_enc
        self.n_dec = n_dec
        self.k_split = k_split
        self.n_heads = n_heads
        self.d_ff = d_ff
        self.l_max = l_max
        self.max_len = max_len
        self.p_max = p_max
        self.tau = tau
        self.alpha = alpha
        self.lam = lam
        self.dropout = dropout
        self.layer_dropout = layer_dropout
        self.conv_kernel = conv_kernel
        self.use_action_predictor = use_action_predictor
        self.use_dependency_extractor = use_dependency_extractor
        self.use_two_stage = use_two_stage
        self.precision = precision
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.warmup = warmup
        self.checkpoint_every = checkpoint_every
        self.max_seconds = max_seconds
        self.max_steps = max_steps
        self.seed = seed

    def predict(self, X):
        check_is_fitted(self, "net_")
        out = []
        for seq in check_token_sequences(X):
            steps = self.max_steps or self.net_.cfg.max_len - 1
            ids, _ = self.net_.greedy(self.vocab_.encode(seq), steps)
            out.append(self.vocab_.decode(ids))
        return out

    def score(self, X, y):
        pred = self.predict(X)
        return float(np.mean([p == list(t) for p, t in zip(pred, check_token_sequences(y))]))
