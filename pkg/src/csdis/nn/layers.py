"""Layer kernels with hand-written backward passes.

Spatial activations are kept channels-last, ``(B, H, W, C)``, inside the
network; :class:`~csdis.nn.model.DecoderModel` converts from and to the
public ``(B, C, H, W)`` layout at its boundaries. Reshape and flatten
layers go through the channel-major layout so they agree with
:func:`csdis.tensor.flatten_sample`.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.fft as sfft

IN_EPS = 1e-5
FFT_MIN_KERNEL = 25


def im2col(xp, kh, kw, sh, sw, ho, wo):
    """Gather ``(B*ho*wo, kh*kw*C)`` patches from a padded channels-last map."""
    b, _, _, c = xp.shape
    cols = np.empty((b, ho, wo, kh, kw, c), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, :, i, j, :] = xp[:, i : i + sh * ho : sh, j : j + sw * wo : sw, :]
    return cols.reshape(b * ho * wo, kh * kw * c)


def col2im(cols, out, kh, kw, sh, sw, ho, wo):
    """Scatter-add ``(B*ho*wo, kh*kw*C)`` patches into ``out`` (padded, channels-last)."""
    b, c = out.shape[0], out.shape[3]
    cols = cols.reshape(b, ho, wo, kh, kw, c)
    for i in range(kh):
        for j in range(kw):
            out[:, i : i + sh * ho : sh, j : j + sw * wo : sw, :] += cols[:, :, :, i, j, :]
    return out


def _crop(x, ph, pw):
    h, w = x.shape[1], x.shape[2]
    return x[:, ph : h - ph, pw : w - pw, :]


def _pad(x, ph, pw):
    if ph == 0 and pw == 0:
        return x
    return np.pad(x, ((0, 0), (ph, ph), (pw, pw), (0, 0)))


def kaiming_bound(fan_in, negative_slope=0.2):
    gain = math.sqrt(2.0 / (1.0 + negative_slope**2))
    return gain * math.sqrt(3.0 / fan_in)


class Layer:
    params: dict
    grads: dict

    def __init__(self):
        self.params = {}
        self.grads = {}

    def forward(self, x):
        raise NotImplementedError

    def backward(self, dy, need_dx=True):
        raise NotImplementedError


class Conv2d(Layer):
    """Cross-correlation; weight stored as ``(kh, kw, C_in, C_out)``.

    Stride-1 convolutions with large kernels run through real FFTs, the
    rest through im2col and a matrix product.
    """

    def __init__(self, in_ch, out_ch, kernel, stride, padding, dtype, rng):
        super().__init__()
        self.kh, self.kw = kernel
        self.sh, self.sw = stride
        self.ph, self.pw = padding
        self.in_ch, self.out_ch = in_ch, out_ch
        bound = kaiming_bound(in_ch * self.kh * self.kw)
        w = rng.uniform(-bound, bound, size=(self.kh, self.kw, in_ch, out_ch))
        self.params = {"weight": w.astype(dtype), "bias": np.zeros(out_ch, dtype)}
        self.use_fft = stride == (1, 1) and self.kh * self.kw >= FFT_MIN_KERNEL

    def forward(self, x):
        b, h, w, _ = x.shape
        ho = (h + 2 * self.ph - self.kh) // self.sh + 1
        wo = (w + 2 * self.pw - self.kw) // self.sw + 1
        xp = _pad(x, self.ph, self.pw)
        if self.use_fft:
            return self._fft_forward(xp, ho, wo)
        cols = im2col(xp, self.kh, self.kw, self.sh, self.sw, ho, wo)
        wmat = self.params["weight"].reshape(-1, self.out_ch)
        y = cols @ wmat
        y += self.params["bias"]
        self._cache = (cols, xp.shape, ho, wo)
        return y.reshape(b, ho, wo, self.out_ch)

    def backward(self, dy, need_dx=True):
        if self.use_fft:
            return self._fft_backward(dy, need_dx)
        cols, xp_shape, ho, wo = self._cache
        dmat = dy.reshape(-1, self.out_ch)
        self.grads["weight"] = (cols.T @ dmat).reshape(self.params["weight"].shape)
        self.grads["bias"] = dmat.sum(axis=0, dtype=np.float64).astype(dmat.dtype)
        if not need_dx:
            return None
        wmat = self.params["weight"].reshape(-1, self.out_ch)
        dcols = dmat @ wmat.T
        dxp = np.zeros(xp_shape, dtype=dy.dtype)
        col2im(dcols, dxp, self.kh, self.kw, self.sh, self.sw, ho, wo)
        return _crop(dxp, self.ph, self.pw)

    # Valid cross-correlation is read off a circular one: with transform
    # size >= padded input size no output index in [0, ho) wraps around.
    def _fft_forward(self, xp, ho, wo):
        hp, wp = xp.shape[1], xp.shape[2]
        fs = (sfft.next_fast_len(hp, True), sfft.next_fast_len(wp, True))
        xf = sfft.rfft2(xp, s=fs, axes=(1, 2), workers=1)
        wf = sfft.rfft2(self.params["weight"], s=fs, axes=(0, 1), workers=1)
        yf = np.matmul(xf.transpose(1, 2, 0, 3), np.conj(wf))
        y = sfft.irfft2(yf.transpose(2, 0, 1, 3), s=fs, axes=(1, 2), workers=1)
        y = y[:, :ho, :wo, :].astype(xp.dtype, copy=False) + self.params["bias"]
        self._cache = (xf, wf, fs, xp.shape, ho, wo)
        return y

    def _fft_backward(self, dy, need_dx):
        xf, wf, fs, xp_shape, ho, wo = self._cache
        dyf = sfft.rfft2(dy, s=fs, axes=(1, 2), workers=1)
        # dW[i, j] = sum_b,h,w xp[h+i, w+j] dy[h, w]
        gf = np.matmul(xf.transpose(1, 2, 3, 0), np.conj(dyf).transpose(1, 2, 0, 3))
        g = sfft.irfft2(gf, s=fs, axes=(0, 1), workers=1)[: self.kh, : self.kw]
        self.grads["weight"] = np.ascontiguousarray(g, dtype=dy.dtype)
        self.grads["bias"] = dy.sum(axis=(0, 1, 2), dtype=np.float64).astype(dy.dtype)
        if not need_dx:
            return None
        # full convolution of dy with the kernel, length ho + kh - 1 = padded size
        dxf = np.matmul(dyf.transpose(1, 2, 0, 3), wf.transpose(0, 1, 3, 2))
        dxp = sfft.irfft2(dxf.transpose(2, 0, 1, 3), s=fs, axes=(1, 2), workers=1)
        dxp = dxp[:, : xp_shape[1], : xp_shape[2], :].astype(dy.dtype, copy=False)
        return _crop(dxp, self.ph, self.pw)


class Deconv2d(Layer):
    """Transposed convolution (the input gradient of :class:`Conv2d`).

    Output size is ``(in - 1) * stride - 2 * padding + kernel``; weight is
    stored as ``(C_in, kh, kw, C_out)``.
    """

    def __init__(self, in_ch, out_ch, kernel, stride, padding, dtype, rng):
        super().__init__()
        self.kh, self.kw = kernel
        self.sh, self.sw = stride
        self.ph, self.pw = padding
        self.in_ch, self.out_ch = in_ch, out_ch
        fan_in = in_ch * self.kh * self.kw / (self.sh * self.sw)
        bound = kaiming_bound(fan_in)
        w = rng.uniform(-bound, bound, size=(in_ch, self.kh, self.kw, out_ch))
        self.params = {"weight": w.astype(dtype), "bias": np.zeros(out_ch, dtype)}

    def forward(self, x):
        b, h, w, _ = x.shape
        xmat = x.reshape(-1, self.in_ch)
        cols = xmat @ self.params["weight"].reshape(self.in_ch, -1)
        hf = (h - 1) * self.sh + self.kh
        wf = (w - 1) * self.sw + self.kw
        full = np.zeros((b, hf, wf, self.out_ch), dtype=cols.dtype)
        col2im(cols, full, self.kh, self.kw, self.sh, self.sw, h, w)
        y = _crop(full, self.ph, self.pw)
        y = y + self.params["bias"]
        self._cache = (xmat, h, w)
        return y

    def backward(self, dy, need_dx=True):
        xmat, h, w = self._cache
        dfull = _pad(dy, self.ph, self.pw)
        dcols = im2col(dfull, self.kh, self.kw, self.sh, self.sw, h, w)
        self.grads["weight"] = (xmat.T @ dcols).reshape(self.params["weight"].shape)
        self.grads["bias"] = dy.sum(axis=(0, 1, 2), dtype=np.float64).astype(dy.dtype)
        if not need_dx:
            return None
        dx = dcols @ self.params["weight"].reshape(self.in_ch, -1).T
        return dx.reshape(dy.shape[0], h, w, self.in_ch)


class FullyConnected(Layer):
    def __init__(self, in_features, out_features, dtype, rng):
        super().__init__()
        bound = kaiming_bound(in_features)
        w = rng.uniform(-bound, bound, size=(in_features, out_features))
        self.params = {"weight": w.astype(dtype), "bias": np.zeros(out_features, dtype)}

    def forward(self, x):
        self._cache = x
        return x @ self.params["weight"] + self.params["bias"]

    def backward(self, dy, need_dx=True):
        x = self._cache
        self.grads["weight"] = x.T @ dy
        self.grads["bias"] = dy.sum(axis=0, dtype=np.float64).astype(dy.dtype)
        if not need_dx:
            return None
        return dy @ self.params["weight"].T


def _spatial_mean(x, ones):
    """Per-sample, per-channel mean of a channels-last map, as ``(B, 1, 1, C)``."""
    b, h, w, c = x.shape
    m = np.matmul(ones, x.reshape(b, h * w, c)) / (h * w)
    return m.reshape(b, 1, 1, c)


class InstanceNorm(Layer):
    """Per-sample, per-channel normalisation over H and W; no affine parameters."""

    def __init__(self, eps=IN_EPS):
        super().__init__()
        self.eps = eps

    def forward(self, x):
        ones = np.ones(x.shape[1] * x.shape[2], dtype=x.dtype)
        xc = x - _spatial_mean(x, ones)
        var = _spatial_mean(xc * xc, ones)
        inv = (1.0 / np.sqrt(var + self.eps)).astype(x.dtype, copy=False)
        xhat = xc * inv
        self._cache = (xhat, inv, ones)
        return xhat

    def backward(self, dy, need_dx=True):
        if not need_dx:
            return None
        xhat, inv, ones = self._cache
        m1 = _spatial_mean(dy, ones)
        m2 = _spatial_mean(dy * xhat, ones)
        return (dy - m1 - xhat * m2) * inv


class LeakyReLU(Layer):
    def __init__(self, negative_slope=0.2):
        super().__init__()
        self.slope = negative_slope

    def forward(self, x):
        self._mask = x > 0
        s = x.dtype.type(self.slope)
        if self.slope <= 1:
            return np.maximum(x, x * s)
        return np.where(self._mask, x, x * s)

    def backward(self, dy, need_dx=True):
        if not need_dx:
            return None
        dx = dy * dy.dtype.type(self.slope)
        np.copyto(dx, dy, where=self._mask)
        return dx


class Tanh(Layer):
    def forward(self, x):
        y = np.tanh(x)
        self._y = y
        return y

    def backward(self, dy, need_dx=True):
        if not need_dx:
            return None
        return dy * (1 - self._y * self._y)


def to_internal(x):
    """``(B, C, H, W)`` -> channels-last; flat inputs pass through."""
    if x.ndim == 4:
        return np.ascontiguousarray(x.transpose(0, 2, 3, 1))
    return x


def to_public(x):
    if x.ndim == 4:
        return np.ascontiguousarray(x.transpose(0, 3, 1, 2))
    return x


class Reshape(Layer):
    """Reshape each sample through the channel-major layout."""

    def __init__(self, target_shape):
        super().__init__()
        self.target = tuple(target_shape)

    def forward(self, x):
        self._in_shape = x.shape
        y = to_public(x).reshape((x.shape[0],) + self.target)
        return to_internal(y)

    def backward(self, dy, need_dx=True):
        if not need_dx:
            return None
        public_in = self._in_shape
        if len(public_in) == 4:
            b, h, w, c = public_in
            public_in = (b, c, h, w)
        return to_internal(to_public(dy).reshape(public_in))


class Flatten(Reshape):
    def __init__(self, size):
        super().__init__((size,))
