"""The differentiable-model contract every segmenter and classifier satisfies."""

from abc import ABC, abstractmethod
from collections import OrderedDict
from typing import Dict, List, Tuple

import torch
from torch import nn

from ..model.config import ModelSpec


class DifferentiableModel(nn.Module, ABC):
    """A torch module built from a ModelSpec.

    Parameters are enumerable via named_parameters() and updated in place by
    an optimizer; forward output shape depends only on the input shape.
    """

    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.spec = spec

    @abstractmethod
    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Map an image batch B×C×H×W to logits."""
        pass

    @property
    def mode(self) -> str:
        return 'train' if self.training else 'eval'

    def named_parameter_groups(self) -> Dict[str, List[Tuple[str, nn.Parameter]]]:
        """Parameters grouped by their owning top-level submodule."""
        groups: Dict[str, List[Tuple[str, nn.Parameter]]] = OrderedDict()
        for name, parameter in self.named_parameters():
            groups.setdefault(name.split('.')[0], []).append((name, parameter))
        return groups


class Backbone(DifferentiableModel):
    """A classifier whose pooled features can be reused by other heads."""

    @property
    @abstractmethod
    def feature_dim(self) -> int:
        pass

    @abstractmethod
    def features(self, x: torch.Tensor) -> torch.Tensor:
        """Map an image batch to B×feature_dim pooled features."""
        pass

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.features(x))
