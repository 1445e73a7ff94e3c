"""Independent scalar-loop oracles.

Deliberately plain Python over floats (``math`` only, no numpy) so they share
no code path with the package under test.
"""

import math


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def mod_pair(R, C, w_r, w_c, r_gain, c_gain, scale):
    d = len(R)
    fr = r_gain * dot(w_r, R) / d
    fc = c_gain * dot(w_c, C) / d
    g = scale * r_gain * c_gain * dot(R, C) / d
    return fr + fc + g


def precision_loop(evidence, contexts, w_r, w_c, r_gain, c_gain, scale, pi_min):
    out = []
    for R in evidence:
        row = []
        for C in contexts:
            row.append(min(1.0, max(pi_min, mod_pair(R, C, w_r, w_c, r_gain, c_gain, scale))))
        out.append(row)
    return out


def context_loop(c_internal, feedback, lam):
    return [c + lam * f for c, f in zip(c_internal, feedback)]


def gamma(s_c, s_r):
    g = s_c / s_r
    return g, ("Synchrony" if g >= 1 else "Overload")


def active_update_loop(mu, errors, pi, lr):
    out = []
    for i, m in enumerate(mu):
        acc = 0.0
        for j in range(len(errors[i])):
            acc += pi[i][j] * errors[i][j]
        out.append(m + lr * acc)
    return out


def attention_loop(Q, K, V, pi=None):
    d = len(Q[0])
    out = []
    for i, q in enumerate(Q):
        logits = []
        for j, k in enumerate(K):
            s = dot(q, k) / math.sqrt(d)
            if pi is not None:
                s += math.log(pi[i][j])
            logits.append(s)
        mx = max(logits)
        ws = [math.exp(s - mx) for s in logits]
        tot = sum(ws)
        ws = [w / tot for w in ws]
        out.append([sum(ws[j] * V[j][c] for j in range(len(K))) for c in range(len(V[0]))])
    return out
