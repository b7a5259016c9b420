"""Reference values for vector math, cross-entropy and a fixed MLP.

The fixed 4-8-8-2 net uses W_l[i][j] = 0.5*sin(1.3*(i*fan_in + j) + l) and
b_l[i] = 0.1*cos(0.7*i + l); the input is x_j = 0.25*j - 0.4. Gradients come
from torch autograd in float64.

    python3 numeric_oracle.py
"""

import json
from decimal import Decimal, getcontext

import numpy as np
import torch

getcontext().prec = 40


def cosine_hp(a, b):
    a = [Decimal(x) for x in a]
    b = [Decimal(x) for x in b]
    dot = sum(x * y for x, y in zip(a, b))
    return dot / (sum(x * x for x in a).sqrt() * sum(y * y for y in b).sqrt())


def interpolate_hp(t, v, alpha):
    alpha = Decimal(alpha)
    mixed = [alpha * Decimal(x) + (1 - alpha) * Decimal(y) for x, y in zip(t, v)]
    n = sum(x * x for x in mixed).sqrt()
    return [x / n for x in mixed]


def ce_hp(logits, label):
    ls = [Decimal(x) for x in logits]
    m = max(ls)
    z = sum((x - m).exp() for x in ls)
    return -((ls[label] - m) - z.ln())


def fixed_mlp(dims):
    params = []
    for l in range(3):
        fan_in, fan_out = dims[l], dims[l + 1]
        w = np.array([[0.5 * np.sin(1.3 * (i * fan_in + j) + l) for j in range(fan_in)] for i in range(fan_out)])
        b = np.array([0.1 * np.cos(0.7 * i + l) for i in range(fan_out)])
        params.append((torch.tensor(w, requires_grad=True), torch.tensor(b, requires_grad=True)))
    return params


def forward(params, x):
    h = x
    for l, (w, b) in enumerate(params):
        h = w @ h + b
        if l < 2:
            h = torch.relu(h)
    return h


if __name__ == "__main__":
    out = {}
    out["cosine_123_456"] = str(cosine_hp([1, 2, 3], [4, 5, 6]))[:14]
    out["interpolate_07"] = [str(x)[:14] for x in interpolate_hp([1, 0], [0, 1], "0.7")]
    out["ce_02_m04_label1"] = str(ce_hp(["0.2", "-0.4"], 1))[:14]

    rng = np.random.default_rng(7)
    rows = rng.normal(size=(5, 8))
    out["mean_pool_rows"] = rows.tolist()
    out["mean_pool"] = rows.mean(axis=0).tolist()

    dims = [4, 8, 8, 2]
    params = fixed_mlp(dims)
    x = torch.tensor([0.25 * j - 0.4 for j in range(4)], dtype=torch.float64)
    logits = forward(params, x)
    out["mlp_logits"] = logits.tolist()
    loss = torch.nn.functional.cross_entropy(logits.unsqueeze(0), torch.tensor([1]))
    loss.backward()
    out["mlp_loss_label1"] = loss.item()
    out["mlp_grad_w0_row0"] = params[0][0].grad[0].tolist()
    out["mlp_grad_b0"] = params[0][1].grad.tolist()
    out["mlp_grad_b1"] = params[1][1].grad.tolist()
    out["mlp_grad_w2"] = params[2][0].grad.tolist()
    out["mlp_grad_b2"] = params[2][1].grad.tolist()

    # generation selector: identical 2-6-6-3 towers, score = <f(mean frames), g(query)>
    towers = fixed_mlp([2, 6, 6, 3])
    frames = torch.tensor([[0.3, -0.2], [-0.1, 0.6]], dtype=torch.float64)
    query = torch.tensor([0.5, -0.3], dtype=torch.float64)
    with torch.no_grad():
        out["generation_score"] = torch.dot(forward(towers, frames.mean(dim=0)), forward(towers, query)).item()
    print(json.dumps(out, indent=1))
