"""Classification backbones (convolutional and attention-based) and heads."""

import torch
from torch import nn

from ..model.config import ModelSpec
from .interfaces import Backbone
from .unet import DoubleConv


class ConvClassifier(Backbone):
    """Stacked double-conv stages, global average pooling, linear head."""

    def __init__(self, spec: ModelSpec):
        super().__init__(spec)
        widths = [spec.width * 2 ** i for i in range(spec.depth)]
        stages = []
        in_channels = spec.in_channels
        for index, width in enumerate(widths):
            stages.append(DoubleConv(in_channels, width))
            if index < len(widths) - 1:
                stages.append(nn.MaxPool2d(2))
            in_channels = width
        self.stages = nn.Sequential(*stages)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self._feature_dim = widths[-1]
        self.head = nn.Linear(widths[-1], spec.num_classes)

    @property
    def feature_dim(self) -> int:
        return self._feature_dim

    def features(self, x: torch.Tensor) -> torch.Tensor:
        return self.pool(self.stages(x)).flatten(1)


class AttentionClassifier(Backbone):
    """ViT-style: patch tokens plus a class token through a transformer encoder."""

    def __init__(self, spec: ModelSpec):
        super().__init__(spec)
        dim = spec.width
        num_patches = (spec.input_size // spec.patch_size) ** 2
        self.patch_embed = nn.Conv2d(spec.in_channels, dim, spec.patch_size, stride=spec.patch_size)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, dim))
        self.pos_embed = nn.Parameter(torch.zeros(1, num_patches + 1, dim))
        nn.init.trunc_normal_(self.cls_token, std=0.02)
        nn.init.trunc_normal_(self.pos_embed, std=0.02)
        layer = nn.TransformerEncoderLayer(
            dim, spec.num_heads, dim_feedforward=max(1, int(dim * spec.mlp_ratio)),
            dropout=0.0, batch_first=True, norm_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=spec.depth, enable_nested_tensor=False)
        self.norm = nn.LayerNorm(dim)
        self.head = nn.Linear(dim, spec.num_classes)

    @property
    def feature_dim(self) -> int:
        return self.spec.width

    def features(self, x: torch.Tensor) -> torch.Tensor:
        tokens = self.patch_embed(x).flatten(2).transpose(1, 2)
        cls = self.cls_token.expand(tokens.shape[0], -1, -1)
        tokens = torch.cat([cls, tokens], dim=1) + self.pos_embed
        return self.norm(self.encoder(tokens))[:, 0]


class ProjectionHead(nn.Module):
    """Two-layer MLP mapping backbone features to the joint embedding space."""

    def __init__(self, in_dim: int, out_dim: int = 64, hidden_dim: int = 128):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(in_dim, hidden_dim), nn.ReLU(inplace=True), nn.Linear(hidden_dim, out_dim))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class EmbeddingNetwork(nn.Module):
    """Backbone features followed by a projection head."""

    def __init__(self, backbone: Backbone, embedding_dim: int = 64):
        super().__init__()
        self.backbone = backbone
        self.projector = ProjectionHead(backbone.feature_dim, embedding_dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.projector(self.backbone.features(x))


class LinearHeadClassifier(nn.Module):
    """A backbone with a freshly attached linear classification head."""

    def __init__(self, backbone: Backbone, num_classes: int):
        super().__init__()
        self.backbone = backbone
        self.classifier = nn.Linear(backbone.feature_dim, num_classes)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.classifier(self.backbone.features(x))
