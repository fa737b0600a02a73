from __future__ import annotations

from dataclasses import asdict, dataclass, fields


@dataclass
class ModelConfig:
    d_model: int = 64
    n_enc: int = 4
    n_dec: int = 4
    k_split: int = 2  # layers in the second decoding stage
    n_heads: int = 4
    d_ff: int = 128
    l_max: int = 8  # length classes 0 .. l_max - 1
    max_len: int = 128
    p_max: int = 64
    tau: float = 0.7
    alpha: float = 0.1
    lam: float = 0.1
    dropout: float = 0.1  # predictor features, embeddings, fused dependency features
    layer_dropout: float = 0.0  # residual dropout inside transformer layers
    conv_kernel: int = 3
    use_action_predictor: bool = True
    use_dependency_extractor: bool = True
    use_two_stage: bool = True
    precision: str = "f32"

    def __post_init__(self):
        if not 1 <= self.k_split < self.n_dec:
            raise ValueError(f"need 1 <= k_split < n_dec, got k={self.k_split}, n_dec={self.n_dec}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if self.l_max < 2:
            raise ValueError("l_max must be >= 2")
        if self.alpha < 0 or self.lam < 0:
            raise ValueError("loss weights must be non-negative")
        if self.d_model % self.n_heads:
            raise ValueError("d_model must be divisible by n_heads")
        if self.precision not in ("f32", "f64"):
            raise ValueError(f"precision must be f32 or f64, got {self.precision!r}")
        if self.conv_kernel % 2 == 0:
            raise ValueError("conv_kernel must be odd")

    @property
    def stage1_layers(self) -> int:
        return self.n_dec - self.k_split

    @classmethod
    def from_dict(cls, d) -> ModelConfig:
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def to_dict(self) -> dict:
        return asdict(self)

    def architecture(self) -> dict:
        """The fields two checkpoints must share to be benchmarked against each other."""
        return {k: getattr(self, k) for k in ("d_model", "n_enc", "n_dec", "n_heads", "d_ff")}
