# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the batch-gradient kernel.

Per-sample forward/backward through the dense layers and the evidential
head in plain C loops.  Mirrors kernels/reference.py; the two backends
are cross-checked by the test suite.  Special functions reuse the same
recurrence-shift + asymptotic-series scheme as evcore.special.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log, log1p, tanh

from ..errors import EvidenceOverflowError

cnp.import_array()

cdef double HALF_LN_TWO_PI = 0.9189385332046727

cdef int ACT_RELU = 0, ACT_SOFTPLUS = 1, ACT_EXP = 2, ACT_SELU = 3
cdef int LOSS_MSE = 0, LOSS_CE = 1, LOSS_LOG = 2
cdef int NL_TANH = 0, NL_RELU = 1, NL_IDENTITY = 2


cdef double lgamma_c(double x):
    cdef double shift = 0.0, inv2, series, power
    if x == 1.0 or x == 2.0:
        return 0.0
    while x < 8.0:
        shift -= log(x)
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = 1.0 / x
    series += (1.0 / 12.0) * power; power *= inv2
    series += (-1.0 / 360.0) * power; power *= inv2
    series += (1.0 / 1260.0) * power; power *= inv2
    series += (-1.0 / 1680.0) * power; power *= inv2
    series += (1.0 / 1188.0) * power
    return (x - 0.5) * log(x) - x + HALF_LN_TWO_PI + series + shift


cdef double digamma_c(double x):
    cdef double shift = 0.0, inv2, series, power
    while x < 6.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    series += (1.0 / 12.0) * power; power *= inv2
    series += (-1.0 / 120.0) * power; power *= inv2
    series += (1.0 / 252.0) * power; power *= inv2
    series += (-1.0 / 240.0) * power; power *= inv2
    series += (1.0 / 132.0) * power; power *= inv2
    series += (-691.0 / 32760.0) * power
    return log(x) - 0.5 / x - series + shift


cdef double trigamma_c(double x):
    cdef double shift = 0.0, inv, inv2, series, power
    while x < 6.0:
        shift += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    power = inv * inv2
    series += (1.0 / 6.0) * power; power *= inv2
    series += (-1.0 / 30.0) * power; power *= inv2
    series += (1.0 / 42.0) * power; power *= inv2
    series += (-1.0 / 30.0) * power; power *= inv2
    series += (5.0 / 66.0) * power
    return inv + 0.5 * inv2 + series + shift


cdef double sigmoid_c(double o):
    cdef double z
    if o >= 0.0:
        return 1.0 / (1.0 + exp(-o))
    z = exp(o)
    return z / (1.0 + z)


def batch_grad(list weights, list biases, cnp.int64_t[::1] hidden_nl_codes,
               double[:, ::1] X, cnp.int64_t[::1] gt,
               int loss_code, int act_code, double eta1, bint use_correct_reg,
               bint want_input_grads):
    """Same contract as kernels.reference.batch_grad, int-coded kinds."""
    cdef Py_ssize_t n_samples = X.shape[0]
    cdef Py_ssize_t n_layers = len(weights)
    cdef Py_ssize_t K = (<object> weights[n_layers - 1]).shape[0]
    cdef Py_ssize_t s, l, i, j, k
    cdef double kd = <double> K

    cdef list w_views = [np.ascontiguousarray(w, dtype=np.float64) for w in weights]
    cdef list b_views = [np.ascontiguousarray(b, dtype=np.float64) for b in biases]
    dims = [(<object> w_views[0]).shape[1]] + [(<object> w).shape[0] for w in w_views]
    cdef Py_ssize_t max_width = max(dims)

    grad_w_arrs = [np.zeros_like(w) for w in w_views]
    grad_b_arrs = [np.zeros_like(b) for b in b_views]
    act_arrs = [np.empty(d, dtype=np.float64) for d in dims[:-1]]
    nld_arrs = [np.empty(d, dtype=np.float64) for d in dims[1:-1]]

    losses_arr = np.empty(n_samples, dtype=np.float64)
    supnorm_arr = np.zeros(n_samples, dtype=np.float64)
    ig_arr = np.zeros((n_samples, dims[0]), dtype=np.float64) if want_input_grads else None

    cdef double[::1] losses = losses_arr
    cdef double[::1] supnorms = supnorm_arr
    cdef double[:, ::1] input_grads = ig_arr if want_input_grads else None

    logits_np = np.empty(K, dtype=np.float64)
    ebuf_np = np.empty(K, dtype=np.float64)
    debuf_np = np.empty(K, dtype=np.float64)
    alpha_np = np.empty(K, dtype=np.float64)
    dalpha_np = np.empty(K, dtype=np.float64)
    mbuf_np = np.empty(K, dtype=np.float64)
    dcur_np = np.empty(max_width, dtype=np.float64)
    dnext_np = np.empty(max_width, dtype=np.float64)

    cdef double[::1] logits = logits_np
    cdef double[::1] ebuf = ebuf_np
    cdef double[::1] debuf = debuf_np
    cdef double[::1] alpha = alpha_np
    cdef double[::1] dalpha = dalpha_np
    cdef double[::1] mbuf = mbuf_np
    cdef double[::1] dcur = dcur_np
    cdef double[::1] dnext = dnext_np

    cdef double[:, ::1] wv
    cdef double[::1] bv, a_prev, a_out, nld, gb
    cdef double[:, ::1] gw

    cdef Py_ssize_t in_dim, out_dim, gti
    cdef int nlc
    cdef double acc, z, o, e, de, S, P, mgt, lossval, St, dgst, tgst, ak, klv
    cdef double nu, coeff, ogt, dmax, amax, contrib, inv_n

    for s in range(n_samples):
        gti = gt[s]

        # forward
        a_prev = act_arrs[0]
        for j in range(dims[0]):
            a_prev[j] = X[s, j]
        for l in range(n_layers):
            wv = w_views[l]
            bv = b_views[l]
            in_dim = wv.shape[1]
            out_dim = wv.shape[0]
            a_prev = act_arrs[l]
            if l < n_layers - 1:
                a_out = act_arrs[l + 1]
                nld = nld_arrs[l]
                nlc = <int> hidden_nl_codes[l]
                for i in range(out_dim):
                    acc = bv[i]
                    for j in range(in_dim):
                        acc += wv[i, j] * a_prev[j]
                    if nlc == NL_TANH:
                        z = tanh(acc)
                        a_out[i] = z
                        nld[i] = 1.0 - z * z
                    elif nlc == NL_RELU:
                        if acc > 0.0:
                            a_out[i] = acc
                            nld[i] = 1.0
                        else:
                            a_out[i] = 0.0
                            nld[i] = 0.0
                    else:
                        a_out[i] = acc
                        nld[i] = 1.0
            else:
                for i in range(out_dim):
                    acc = bv[i]
                    for j in range(in_dim):
                        acc += wv[i, j] * a_prev[j]
                    logits[i] = acc

        # evidential head
        S = 0.0
        for k in range(K):
            o = logits[k]
            if act_code == ACT_RELU:
                if o > 0.0:
                    e = o
                    de = 1.0
                else:
                    e = 0.0
                    de = 0.0
            elif act_code == ACT_SOFTPLUS:
                if o > 0.0:
                    e = o + log1p(exp(-o))
                else:
                    e = log1p(exp(o))
                de = sigmoid_c(o)
            elif act_code == ACT_EXP:
                if o > 700.0:
                    raise EvidenceOverflowError(
                        f"exp evidence overflow at sample {s}, class {k}: logit {o}",
                        index=k,
                    )
                e = exp(o)
                de = e
            else:
                if o > 0.0:
                    e = o + 1.0
                    de = 1.0
                else:
                    e = exp(o)
                    de = e
            ebuf[k] = e
            debuf[k] = de
            alpha[k] = e + 1.0
            S += e + 1.0

        if loss_code == LOSS_MSE:
            P = 0.0
            for k in range(K):
                mbuf[k] = alpha[k] / S
                P += mbuf[k] * mbuf[k]
            mgt = mbuf[gti]
            lossval = P - 2.0 * mgt + 1.0 + (1.0 - P) / (S + 1.0)
            for k in range(K):
                acc = mbuf[k] + mgt - P
                if k == gti:
                    acc -= 1.0
                dalpha[k] = (2.0 / S) * acc \
                    - (1.0 - P) / ((S + 1.0) * (S + 1.0)) \
                    - 2.0 * (mbuf[k] - P) / (S * (S + 1.0))
        elif loss_code == LOSS_CE:
            lossval = digamma_c(S) - digamma_c(alpha[gti])
            z = trigamma_c(S)
            for k in range(K):
                dalpha[k] = z
            dalpha[gti] -= trigamma_c(alpha[gti])
        else:
            lossval = log(S) - log(alpha[gti])
            z = 1.0 / S
            for k in range(K):
                dalpha[k] = z
            dalpha[gti] -= 1.0 / alpha[gti]

        if eta1 != 0.0:
            St = S - alpha[gti] + 1.0
            dgst = digamma_c(St)
            tgst = trigamma_c(St)
            klv = lgamma_c(St) - lgamma_c(kd)
            for k in range(K):
                ak = 1.0 if k == gti else alpha[k]
                klv += (ak - 1.0) * (digamma_c(ak) - dgst) - lgamma_c(ak)
                if k != gti:
                    dalpha[k] += eta1 * ((ak - 1.0) * trigamma_c(ak) - (St - kd) * tgst)
            if klv < 0.0:
                klv = 0.0
            lossval += eta1 * klv

        for k in range(K):
            dcur[k] = dalpha[k] * debuf[k]

        if use_correct_reg:
            ogt = logits[gti]
            if ogt < 0.0:
                nu = kd / S
                lossval += -nu * ogt
                coeff = ogt * kd / (S * S)
                for k in range(K):
                    dcur[k] += coeff * debuf[k]
                dcur[gti] -= nu

        losses[s] = lossval

        # backward
        for l in range(n_layers - 1, -1, -1):
            wv = w_views[l]
            gw = grad_w_arrs[l]
            gb = grad_b_arrs[l]
            in_dim = wv.shape[1]
            out_dim = wv.shape[0]
            a_prev = act_arrs[l]
            dmax = 0.0
            for i in range(out_dim):
                z = dcur[i]
                gb[i] += z
                if fabs(z) > dmax:
                    dmax = fabs(z)
                for j in range(in_dim):
                    gw[i, j] += z * a_prev[j]
            amax = 0.0
            for j in range(in_dim):
                if fabs(a_prev[j]) > amax:
                    amax = fabs(a_prev[j])
            contrib = dmax * amax
            if dmax > contrib:
                contrib = dmax
            if contrib > supnorms[s]:
                supnorms[s] = contrib
            if l > 0:
                nld = nld_arrs[l - 1]
                for j in range(in_dim):
                    acc = 0.0
                    for i in range(out_dim):
                        acc += dcur[i] * wv[i, j]
                    dnext[j] = acc * nld[j]
                for j in range(in_dim):
                    dcur[j] = dnext[j]
            elif want_input_grads:
                for j in range(in_dim):
                    acc = 0.0
                    for i in range(out_dim):
                        acc += dcur[i] * wv[i, j]
                    input_grads[s, j] = acc

    inv_n = 1.0 / <double> n_samples
    for l in range(n_layers):
        grad_w_arrs[l] *= inv_n
        grad_b_arrs[l] *= inv_n

    return losses_arr, grad_w_arrs, grad_b_arrs, supnorm_arr, ig_arr
