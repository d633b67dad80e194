"""
Model configuration for the 1-D masked autoencoder.

Defaults are the full-size architecture (5 s at 500 Hz, 100-sample patches,
768/512-wide encoder/decoder). ``ModelConfig.tiny()`` is the desk-scale
configuration used throughout the test-suite.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    signal_len: int = Field(default=2500, ge=1)
    patch_len: int = Field(default=100, ge=1)
    enc_dim: int = Field(default=768, ge=2)
    enc_depth: int = Field(default=12, ge=0)
    enc_heads: int = Field(default=8, ge=1)
    dec_dim: int = Field(default=512, ge=2)
    dec_depth: int = Field(default=8, ge=0)
    dec_heads: int = Field(default=16, ge=1)
    mlp_ratio: int = Field(default=4, ge=1)
    qkv_bias: bool = True
    mask_ratio: float = Field(default=0.75, ge=0.0, lt=1.0)
    norm_eps: float = Field(default=1e-6, gt=0.0)

    @model_validator(mode="after")
    def _check_divisibility(self) -> ModelConfig:
        if self.signal_len % self.patch_len != 0:
            raise ValueError(
                f"signal_len ({self.signal_len}) must be a multiple of "
                f"patch_len ({self.patch_len})"
            )
        if self.enc_dim % self.enc_heads != 0:
            raise ValueError(f"enc_dim ({self.enc_dim}) must be divisible by enc_heads")
        if self.dec_dim % self.dec_heads != 0:
            raise ValueError(f"dec_dim ({self.dec_dim}) must be divisible by dec_heads")
        if self.enc_dim % 2 or self.dec_dim % 2:
            raise ValueError("enc_dim and dec_dim must be even for sine-cosine positions")
        return self

    @property
    def n_patches(self) -> int:
        return self.signal_len // self.patch_len

    @classmethod
    def full(cls) -> ModelConfig:
        return cls()

    @classmethod
    def tiny(cls) -> ModelConfig:
        return cls(
            signal_len=100,
            patch_len=10,
            enc_dim=32,
            enc_depth=2,
            enc_heads=4,
            dec_dim=16,
            dec_depth=1,
            dec_heads=4,
            mlp_ratio=2,
            mask_ratio=0.75,
        )
