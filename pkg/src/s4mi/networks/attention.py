"""Windowed self-attention segmenter (a micro Swin-style stand-in).

Patch embedding, alternating plain/shifted window attention blocks, then a
transposed-conv decoder fused with a shallow full-resolution stem.
"""

import torch
from torch import nn

from ..model.config import ModelSpec
from .interfaces import DifferentiableModel


def window_partition(x: torch.Tensor, window: int) -> torch.Tensor:
    """B×H×W×C -> (B·nW)×(window²)×C."""
    b, h, w, c = x.shape
    x = x.view(b, h // window, window, w // window, window, c)
    return x.permute(0, 1, 3, 2, 4, 5).reshape(-1, window * window, c)


def window_reverse(windows: torch.Tensor, window: int, b: int, h: int, w: int) -> torch.Tensor:
    """Inverse of window_partition."""
    c = windows.shape[-1]
    x = windows.view(b, h // window, w // window, window, window, c)
    return x.permute(0, 1, 3, 2, 4, 5).reshape(b, h, w, c)


class WindowBlock(nn.Module):

    def __init__(self, dim: int, num_heads: int, window: int, shift: int, mlp_ratio: float):
        super().__init__()
        self.window = window
        self.shift = shift
        self.norm1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, num_heads, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        hidden = max(1, int(dim * mlp_ratio))
        self.mlp = nn.Sequential(nn.Linear(dim, hidden), nn.GELU(), nn.Linear(hidden, dim))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, h, w, _ = x.shape
        y = self.norm1(x)
        if self.shift:
            y = torch.roll(y, shifts=(-self.shift, -self.shift), dims=(1, 2))
        windows = window_partition(y, self.window)
        attended, _ = self.attn(windows, windows, windows, need_weights=False)
        y = window_reverse(attended, self.window, b, h, w)
        if self.shift:
            y = torch.roll(y, shifts=(self.shift, self.shift), dims=(1, 2))
        x = x + y
        return x + self.mlp(self.norm2(x))


class WindowAttentionSegmenter(DifferentiableModel):

    def __init__(self, spec: ModelSpec):
        super().__init__(spec)
        dim = spec.width
        grid = spec.input_size // spec.patch_size
        # shifting is a no-op when a single window covers the grid
        shift = spec.window_size // 2 if grid > spec.window_size else 0

        self.patch_embed = nn.Conv2d(spec.in_channels, dim, spec.patch_size, stride=spec.patch_size)
        self.blocks = nn.ModuleList([
            WindowBlock(dim, spec.num_heads, spec.window_size, shift if i % 2 else 0, spec.mlp_ratio)
            for i in range(spec.depth)
        ])
        self.norm = nn.LayerNorm(dim)

        up_dim = max(1, dim // 2)
        stem_dim = max(1, dim // 4)
        self.upsample = nn.ConvTranspose2d(dim, up_dim, spec.patch_size, stride=spec.patch_size)
        self.stem = nn.Sequential(nn.Conv2d(spec.in_channels, stem_dim, 3, padding=1), nn.ReLU(inplace=True))
        self.fuse = nn.Sequential(nn.Conv2d(up_dim + stem_dim, stem_dim, 3, padding=1), nn.ReLU(inplace=True))
        self.head = nn.Conv2d(stem_dim, spec.num_classes, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        tokens = self.patch_embed(x).permute(0, 2, 3, 1)
        for block in self.blocks:
            tokens = block(tokens)
        features = self.norm(tokens).permute(0, 3, 1, 2)
        fused = self.fuse(torch.cat([self.upsample(features), self.stem(x)], dim=1))
        return self.head(fused)
