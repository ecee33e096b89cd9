"""Procedural piecewise-smooth test images in [0, 1]."""
import numpy as np


def _ellipse(X, Y, cx, cy, ax, ay, theta):
    c, s = np.cos(theta), np.sin(theta)
    xr = (X - cx) * c + (Y - cy) * s
    yr = -(X - cx) * s + (Y - cy) * c
    return (xr / ax) ** 2 + (yr / ay) ** 2 <= 1.0


def piecewise_phantom(size=128):
    """Ellipses and a bar with constant levels over a gentle smooth background."""
    t = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    Y, X = np.meshgrid(t, t, indexing="ij")
    img = 0.15 + 0.05 * X + 0.05 * np.exp(-((X + 0.3) ** 2 + (Y - 0.4) ** 2) / 0.1)
    img[_ellipse(X, Y, 0.0, 0.0, 0.8, 0.62, 0.0)] = 0.55
    img[_ellipse(X, Y, -0.25, 0.1, 0.18, 0.32, 0.35)] = 0.9
    img[_ellipse(X, Y, 0.3, -0.05, 0.22, 0.14, -0.5)] = 0.3
    img[_ellipse(X, Y, 0.05, 0.42, 0.1, 0.1, 0.0)] = 1.0
    img[(np.abs(X - 0.1) < 0.35) & (np.abs(Y + 0.45) < 0.06)] = 0.75
    return np.clip(img, 0.0, 1.0)
