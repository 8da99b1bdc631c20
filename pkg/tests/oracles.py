"""Reference implementations that share no code with the package under test."""
import numpy as np


def bcirc(a):
    """Block-circulant matrix of a tensor: block (i, j) is frontal slice (i - j) mod I3."""
    n1, n2, n3 = a.shape
    out = np.zeros((n1 * n3, n2 * n3))
    for i in range(n3):
        for j in range(n3):
            out[i * n1:(i + 1) * n1, j * n2:(j + 1) * n2] = a[:, :, (i - j) % n3]
    return out


def unfold(b):
    n1, n2, n3 = b.shape
    return np.concatenate([b[:, :, k] for k in range(n3)], axis=0)


def fold(m, n1, n3):
    return np.stack([m[k * n1:(k + 1) * n1] for k in range(n3)], axis=2)


def tprod(a, b):
    return fold(bcirc(a) @ unfold(b), a.shape[0], a.shape[2])


def ttrans(x):
    n3 = x.shape[2]
    return np.stack([x[:, :, (-k) % n3].T for k in range(n3)], axis=2)


def full_spectrum(x):
    """All I3 Fourier slices via the complex FFT, shape (I3, I1, I2)."""
    return np.moveaxis(np.fft.fft(x, axis=2), 2, 0)


def from_full_spectrum(xh):
    return np.real(np.fft.ifft(np.moveaxis(xh, 0, 2), axis=2))


def rel(a, b):
    den = np.linalg.norm(np.ravel(b))
    return np.linalg.norm(np.ravel(a) - np.ravel(b)) / (den if den else 1.0)


def eye3(n, n3):
    e = np.zeros((n, n, n3))
    e[:, :, 0] = np.eye(n)
    return e


def lowrank(rng, n1, n2, n3, r):
    return tprod(rng.standard_normal((n1, r, n3)), rng.standard_normal((r, n2, n3)))
