"""Micro convolutional encoder-decoder and pointwise feature networks."""

import torch
from torch import nn

from ..model.config import ModelSpec
from .interfaces import DifferentiableModel


class DoubleConv(nn.Sequential):
    """(conv3x3 -> BN -> ReLU) twice."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__(
            nn.Conv2d(in_channels, out_channels, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(out_channels, out_channels, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
        )


class ConvUNet(DifferentiableModel):
    """U-Net with `depth` stages, channel width doubling per stage."""

    def __init__(self, spec: ModelSpec):
        super().__init__(spec)
        widths = [spec.width * 2 ** i for i in range(spec.depth)]

        self.encoders = nn.ModuleList()
        in_channels = spec.in_channels
        for width in widths:
            self.encoders.append(DoubleConv(in_channels, width))
            in_channels = width
        self.pool = nn.MaxPool2d(2)

        self.upsamplers = nn.ModuleList()
        self.decoders = nn.ModuleList()
        for high, low in zip(reversed(widths[1:]), reversed(widths[:-1])):
            self.upsamplers.append(nn.ConvTranspose2d(high, low, 2, stride=2))
            self.decoders.append(DoubleConv(2 * low, low))

        self.head = nn.Conv2d(widths[0], spec.num_classes, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        skips = []
        for index, encoder in enumerate(self.encoders):
            x = encoder(x)
            if index < len(self.encoders) - 1:
                skips.append(x)
                x = self.pool(x)
        for upsample, decoder, skip in zip(self.upsamplers, self.decoders, reversed(skips)):
            x = decoder(torch.cat([upsample(x), skip], dim=1))
        return self.head(x)


class PointwiseNet(DifferentiableModel):
    """Stack of 1×1 convolutions: no spatial mixing, exactly equivariant."""

    def __init__(self, spec: ModelSpec):
        super().__init__(spec)
        layers = []
        in_channels = spec.in_channels
        for _ in range(spec.depth - 1):
            layers += [nn.Conv2d(in_channels, spec.width, 1), nn.ReLU()]
            in_channels = spec.width
        self.body = nn.Sequential(*layers)
        self.head = nn.Conv2d(in_channels, spec.num_classes, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.body(x))
