"""Small CNN classifier with taps on its second conv and second pool layers."""

import numpy as np
import torch
from torch import nn


class SmallCnn(nn.Module):
    """2 conv + 2 maxpool + 2 dense, for 32x32x3 inputs and 10 classes."""

    def __init__(self, num_classes=10):
        super().__init__()
        self.conv1 = nn.Conv2d(3, 32, kernel_size=5, padding=2)
        self.pool1 = nn.MaxPool2d(2)
        self.conv2 = nn.Conv2d(32, 64, kernel_size=5, padding=2)
        self.pool2 = nn.MaxPool2d(2)
        self.fc1 = nn.Linear(64 * 8 * 8, 256)
        self.fc2 = nn.Linear(256, num_classes)

    def features(self, x):
        """(conv2 activations, pool2 activations) for feature-distance use."""
        h = self.pool1(torch.relu(self.conv1(x)))
        conv2_act = torch.relu(self.conv2(h))
        pool2_act = self.pool2(conv2_act)
        return conv2_act, pool2_act

    def forward(self, x):
        _, pooled = self.features(x)
        h = torch.relu(self.fc1(pooled.flatten(1)))
        return self.fc2(h)


def to_batches(images, batch_size):
    """NHWC float32 numpy -> NCHW torch batches."""
    tensor = torch.from_numpy(np.ascontiguousarray(images)).permute(0, 3, 1, 2)
    for lo in range(0, tensor.shape[0], batch_size):
        yield lo, tensor[lo:lo + batch_size]


def save_model(model, path, seed, baseline):
    torch.save({"state_dict": model.state_dict(), "seed": seed,
                "baseline": baseline}, path)


def load_model(path):
    payload = torch.load(path, map_location="cpu", weights_only=True)
    model = SmallCnn()
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload["seed"], payload["baseline"]
