"""Positional encodings, conditional/unconditional message passing, decoders.

Two forward paths share the same parameterization:

* a batched training path over a gradient tape (autodiff module), scoring
  Q queries against all nodes at once, with layer norm / dropout / skip
  connections as used for training; and
* an exact theorem path (`forward_exact`) in bare form that sums each
  node's incoming messages in lexicographically sorted order, so nodes
  with equal message multisets get bitwise-equal features — required by
  the refinement-and-matching checks against the WL engines.

The layer rule, for each node v with incidence pairs (e,i):

    h' = act( W [ h_v || sum_(e,i) g_(rho(e),q) * prod_{j != i}
                  (alpha h_e(j) + (1-alpha) p_j) ] + b )

with g a diagonal map: W_r z_q in query-dependent mode, w_r otherwise;
the empty product (arity-1 relations) is the all-ones vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Var
from .errors import DimensionTooSmall, QueryArityMismatch, ShapeMismatch
from .hypergraph import Query, RelationalHypergraph

Array = np.ndarray

PE_KINDS = ("sinusoidal", "one-hot", "constant", "learnable")
INIT_VARIANTS = ("pos+rel", "pos", "rel", "ones")


# --- positional encodings --------------------------------------------------


def positional_encoding(kind: str, i: int, d: int, table: Array | None = None) -> Array:
    """One encoding vector for position i (1-based; i=0 allowed)."""
    if kind == "sinusoidal":
        if d % 2 != 0:
            raise DimensionTooSmall("sinusoidal encoding needs even d")
        j = np.arange(d // 2)
        freq = 1.0 / (10000.0 ** (2.0 * j / d))
        out = np.empty(d)
        out[0::2] = np.sin(i * freq)
        out[1::2] = np.cos(i * freq)
        return out
    if kind == "one-hot":
        if d < i:
            raise DimensionTooSmall(f"one-hot position {i} needs d >= {i}")
        out = np.zeros(d)
        if i >= 1:
            out[i - 1] = 1.0
        return out
    if kind == "constant":
        return np.ones(d)
    if kind == "learnable":
        if table is None:
            raise ShapeMismatch("learnable encoding needs its table")
        return table[i]
    raise ShapeMismatch(f"unknown encoding kind {kind!r}")


def pe_table(kind: str, max_pos: int, d: int, rng: np.random.Generator | None = None) -> Array:
    """Rows 0..max_pos of the chosen encoding (row 0 present for indexing)."""
    if kind == "learnable":
        if rng is None:
            raise ShapeMismatch("learnable table needs an rng")
        return rng.standard_normal((max_pos + 1, d)) / np.sqrt(d)
    return np.stack([positional_encoding(kind, i, d) for i in range(max_pos + 1)])


# --- parameters ------------------------------------------------------------


@dataclass
class ModelConfig:
    kind: str = "hcnet"  # "hcnet" | "hrnet"
    d: int = 32
    layers: int = 7
    mode: str = "query-dependent"  # "query-dependent" | "query-independent"
    pe_kind: str = "sinusoidal"
    variant: str = "pos+rel"  # initialization: "pos+rel" | "pos" | "rel" | "ones"
    use_layernorm: bool = True
    use_skip: bool = True
    dropout: float = 0.0

    def bare(self) -> "ModelConfig":
        return replace(self, use_layernorm=False, use_skip=False, dropout=0.0)


@dataclass
class ModelParams:
    config: ModelConfig
    num_relations: int
    max_arity: int
    decoder_arities: tuple[int, ...]
    tensors: dict[str, Array]
    fixed: dict[str, Array] = field(default_factory=dict)

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.config,
            self.num_relations,
            self.max_arity,
            self.decoder_arities,
            {k: v.copy() for k, v in self.tensors.items()},
            dict(self.fixed),
        )

    def pe_row(self, i: int) -> Array:
        table = self.tensors.get("pe", self.fixed.get("pe"))
        return table[i]


def init_params(
    graph: RelationalHypergraph,
    config: ModelConfig,
    rng: np.random.Generator,
    extra_arities: tuple[int, ...] = (),
) -> ModelParams:
    """Fresh parameters: U[-1/sqrt(d), 1/sqrt(d)] matrices, zero biases,
    N(0,1)/sqrt(d) query embeddings, alpha = 0.5."""
    d = config.d
    bound = 1.0 / np.sqrt(d)
    num_rel = len(graph.relations)
    max_arity = max(graph.max_arity, 2)
    tensors: dict[str, Array] = {}
    fixed: dict[str, Array] = {}

    for ell in range(config.layers):
        tensors[f"W_l{ell}"] = rng.uniform(-bound, bound, (d, 2 * d))
        tensors[f"b_l{ell}"] = np.zeros(d)
        tensors[f"alpha_l{ell}"] = np.asarray(0.5)
        if config.use_layernorm:
            tensors[f"ln_g_l{ell}"] = np.ones(d)
            tensors[f"ln_b_l{ell}"] = np.zeros(d)
    for r in range(num_rel):
        if config.mode == "query-dependent":
            tensors[f"W_rel{r}"] = rng.uniform(-bound, bound, (d, d))
        else:
            tensors[f"w_rel{r}"] = rng.uniform(-bound, bound, d)
    tensors["z_q"] = rng.standard_normal((num_rel, d)) / np.sqrt(d)
    if config.pe_kind == "learnable":
        tensors["pe"] = pe_table("learnable", max_arity, d, rng)
    else:
        fixed["pe"] = pe_table(config.pe_kind, max_arity, d)

    def mlp(prefix: str, din: int) -> None:
        tensors[f"{prefix}_W1"] = rng.uniform(-bound, bound, (d, din))
        tensors[f"{prefix}_b1"] = np.zeros(d)
        tensors[f"{prefix}_W2"] = rng.uniform(-bound, bound, (1, d))
        tensors[f"{prefix}_b2"] = np.zeros(1)

    if config.kind == "hcnet":
        decoder_arities: tuple[int, ...] = ()
        mlp("dec", 2 * d)
    else:
        decoder_arities = tuple(
            sorted({r.arity for r in graph.relations} | set(extra_arities))
        )
        for k in decoder_arities:
            mlp(f"dec{k}", (k + 1) * d)
    return ModelParams(config, num_rel, max_arity, decoder_arities, tensors, fixed)


# --- forward: shared pieces -----------------------------------------------


def edges_by_relation(
    graph: RelationalHypergraph, masked_edges: frozenset[int] | set[int] | None = None
) -> dict[int, Array]:
    """Node-id arrays (E_r, k) per relation, skipping masked edge ids."""
    groups: dict[int, list[tuple[int, ...]]] = {}
    for e, ed in enumerate(graph.edges):
        if masked_edges and e in masked_edges:
            continue
        groups.setdefault(ed.relation, []).append(ed.nodes)
    return {r: np.asarray(rows, dtype=np.intp) for r, rows in groups.items()}


def hcnet_init(
    graph: RelationalHypergraph, query: Query, params: ModelParams, variant: str | None = None
) -> Array:
    """h0_v = sum over given positions i with u_i = v of (p_i + z_q);
    zero elsewhere. Ablation variants drop either addend or use a bare
    indicator."""
    variant = variant or params.config.variant
    if variant not in INIT_VARIANTS:
        raise ShapeMismatch(f"unknown init variant {variant!r}")
    d = params.config.d
    arity = graph.relations[query.relation].arity
    if len(query.given) != arity - 1:
        raise QueryArityMismatch(
            f"query gives {len(query.given)} nodes for arity {arity}"
        )
    if not (1 <= query.target <= arity):
        raise QueryArityMismatch(f"target position {query.target}")
    h0 = np.zeros((graph.node_count, d))
    zq = params.tensors["z_q"][query.relation]
    for u, i in zip(query.given, query.given_positions(arity)):
        if variant == "pos+rel":
            h0[u] += params.pe_row(i) + zq
        elif variant == "pos":
            h0[u] += params.pe_row(i)
        elif variant == "rel":
            h0[u] += zq
        else:
            h0[u] += np.ones(d)
    return h0


# --- forward: exact theorem path ------------------------------------------


def _g_vector(params: ModelParams, rel: int, query_rel: int | None) -> Array:
    if params.config.mode == "query-dependent":
        if query_rel is None:
            raise ShapeMismatch("query-dependent mode needs a query relation")
        return params.tensors[f"W_rel{rel}"] @ params.tensors["z_q"][query_rel]
    return params.tensors[f"w_rel{rel}"]


def forward_exact(
    graph: RelationalHypergraph,
    h0: Array,
    params: ModelParams,
    layers: int | None = None,
    query_rel: int | None = None,
) -> list[Array]:
    """Feature maps for rounds 0..L with multiset-order-independent sums.

    Messages destined for one node are sorted lexicographically before
    accumulation, so two nodes receiving equal multisets of messages end
    up with bitwise-identical features. Runs the bare layer form
    regardless of the config's norm/skip flags.
    """
    cfg = params.config
    L = cfg.layers if layers is None else layers
    V, d = h0.shape
    out = [h0.astype(np.float64)]
    h = out[0]
    for ell in range(L):
        alpha = float(params.tensors[f"alpha_l{ell}"])
        W = params.tensors[f"W_l{ell}"]
        b = params.tensors[f"b_l{ell}"]
        inbox: list[list[tuple]] = [[] for _ in range(V)]
        for ed in graph.edges:
            k = len(ed.nodes)
            g = _g_vector(params, ed.relation, query_rel)
            factors = [
                alpha * h[ed.nodes[j - 1]] + (1.0 - alpha) * params.pe_row(j)
                for j in range(1, k + 1)
            ]
            for i in range(1, k + 1):
                m = np.ones(d)
                for j in range(1, k + 1):
                    if j != i:
                        m = m * factors[j - 1]
                inbox[ed.nodes[i - 1]].append(tuple(g * m))
        new = np.empty_like(h)
        for v in range(V):
            acc = np.zeros(d)
            for m in sorted(inbox[v]):
                acc = acc + np.asarray(m)
            z = W @ np.concatenate([h[v], acc]) + b
            new[v] = np.maximum(z, 0.0)
        out.append(new)
        h = new
    return out


def hrnet_features_exact(
    graph: RelationalHypergraph, params: ModelParams, layers: int | None = None
) -> list[Array]:
    h0 = np.ones((graph.node_count, params.config.d))
    return forward_exact(graph, h0, params, layers)


def hcnet_features_exact(
    graph: RelationalHypergraph,
    query: Query,
    params: ModelParams,
    layers: int | None = None,
) -> list[Array]:
    h0 = hcnet_init(graph, query, params)
    return forward_exact(graph, h0, params, layers, query_rel=query.relation)


def feature_partition(features: Array, decimals: int | None = None) -> list[int]:
    """Exact-equality partition of feature rows as dense class ids."""
    keys: list[tuple] = []
    for row in features:
        r = np.round(row, decimals) if decimals is not None else row
        keys.append(tuple(r.tolist()))
    order = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


# --- forward: batched tape path -------------------------------------------


@dataclass
class ForwardTrace:
    tape: Tape
    bound: dict[str, Var]
    features: Var  # (Q, V, d)
    scores: Var | None = None  # (Q, V) logits, set by decoding
    zq_batch: Var | None = None  # (Q, d), hcnet batches only


def bind_params(tape: Tape, params: ModelParams) -> dict[str, Var]:
    bound = {name: tape.leaf(value) for name, value in params.tensors.items()}
    for name, value in params.fixed.items():
        bound[name] = tape.constant(value)
    return bound


def _pe_var(tape: Tape, bound: dict[str, Var], j: int) -> Var:
    table = bound["pe"]
    return tape.var(table.value[j], ((table, lambda g, j=j: _row_grad(table.value.shape, j, g)),))


def _row_grad(shape: tuple[int, ...], j: int, g: Array) -> Array:
    out = np.zeros(shape)
    out[j] = g
    return out


def _prods_excluding(tape: Tape, factors: list[Var]) -> list[Var]:
    """prods[i] = elementwise product of factors[j] for j != i."""
    k = len(factors)
    if k == 1:
        ones = tape.constant(np.ones_like(factors[0].value))
        return [ones]
    pre = [factors[0]]
    for t in range(1, k):
        pre.append(ad.mul(tape, pre[-1], factors[t]))
    suf = [factors[-1]]
    for t in range(k - 2, -1, -1):
        suf.append(ad.mul(tape, factors[t], suf[-1]))
    suf.reverse()
    out = []
    for i in range(k):
        if i == 0:
            out.append(suf[1])
        elif i == k - 1:
            out.append(pre[k - 2])
        else:
            out.append(ad.mul(tape, pre[i - 1], suf[i + 1]))
    return out


def _message_layer(
    tape: Tape,
    bound: dict[str, Var],
    cfg: ModelConfig,
    ell: int,
    h: Var,
    edge_groups: dict[int, Array],
    g_by_rel: dict[int, Var],
    train: bool,
    rng: np.random.Generator | None,
) -> Var:
    alpha = bound[f"alpha_l{ell}"]
    one_minus = ad.sub(tape, tape.constant(np.asarray(1.0)), alpha)
    msgs = tape.constant(np.zeros_like(h.value))
    for rel, nodes in edge_groups.items():
        k = nodes.shape[1]
        factors = []
        for j in range(1, k + 1):
            hj = ad.gather_nodes(tape, h, nodes[:, j - 1])  # (Q, E, d)
            pj = _pe_var(tape, bound, j)
            factors.append(
                ad.add(tape, ad.mul(tape, alpha, hj), ad.mul(tape, one_minus, pj))
            )
        prods = _prods_excluding(tape, factors)
        g = g_by_rel[rel]
        for i in range(k):
            m = ad.mul(tape, prods[i], g)
            msgs = ad.index_add(tape, msgs, nodes[:, i], m)
    z = ad.concat_last(tape, [h, msgs])
    z = ad.add(tape, ad.matmul_last(tape, z, bound[f"W_l{ell}"]), bound[f"b_l{ell}"])
    if cfg.use_layernorm:
        z = ad.layer_norm(tape, z, bound[f"ln_g_l{ell}"], bound[f"ln_b_l{ell}"])
    if train and cfg.dropout > 0.0:
        z = ad.dropout(tape, z, cfg.dropout, rng)
    z = ad.relu(tape, z)
    if cfg.use_skip:
        z = ad.add(tape, z, h)
    return z


def _g_vars(
    tape: Tape,
    bound: dict[str, Var],
    cfg: ModelConfig,
    edge_groups: dict[int, Array],
    zq_batch: Var | None,
) -> dict[int, Var]:
    out: dict[int, Var] = {}
    for rel in edge_groups:
        if cfg.mode == "query-dependent":
            g = ad.matmul_last(tape, zq_batch, bound[f"W_rel{rel}"])  # (Q, d)
            out[rel] = ad.reshape(tape, g, (g.value.shape[0], 1, g.value.shape[1]))
        else:
            out[rel] = bound[f"w_rel{rel}"]
    return out


def hcnet_forward_batch(
    graph: RelationalHypergraph,
    queries: list[Query],
    params: ModelParams,
    layers: int | None = None,
    train: bool = False,
    rng: np.random.Generator | None = None,
    masked_edges: set[int] | None = None,
    variant: str | None = None,
) -> ForwardTrace:
    """Conditional features (Q, V, d) for a batch of queries in one pass."""
    cfg = params.config
    L = cfg.layers if layers is None else layers
    d = cfg.d
    Q, V = len(queries), graph.node_count
    variant = variant or cfg.variant
    tape = Tape()
    bound = bind_params(tape, params)

    rows, cols, pe_idx = [], [], []
    for b, q in enumerate(queries):
        arity = graph.relations[q.relation].arity
        if len(q.given) != arity - 1:
            raise QueryArityMismatch(f"query {b}")
        for u, i in zip(q.given, q.given_positions(arity)):
            rows.append(b)
            cols.append(u)
            pe_idx.append(i)
    rows_a, cols_a, pe_a = (np.asarray(x, dtype=np.intp) for x in (rows, cols, pe_idx))
    qrel = np.asarray([q.relation for q in queries], dtype=np.intp)
    zq_batch = ad.take_rows(tape, bound["z_q"], qrel)  # (Q, d)

    parts: list[Var] = []
    if variant in ("pos+rel", "pos"):
        parts.append(ad.take_rows(tape, bound["pe"], pe_a))
    if variant in ("pos+rel", "rel"):
        parts.append(ad.take_rows(tape, bound["z_q"], qrel[rows_a]))
    if variant == "ones":
        parts.append(tape.constant(np.ones((len(rows), d))))
    vals = parts[0]
    for p in parts[1:]:
        vals = ad.add(tape, vals, p)
    h = ad.index_add_2d(
        tape, tape.constant(np.zeros((Q, V, d))), rows_a, cols_a, vals
    )

    edge_groups = edges_by_relation(graph, masked_edges)
    g_by_rel = _g_vars(tape, bound, cfg, edge_groups, zq_batch)
    for ell in range(L):
        h = _message_layer(tape, bound, cfg, ell, h, edge_groups, g_by_rel, train, rng)
    return ForwardTrace(tape, bound, h, zq_batch=zq_batch)


def hrnet_forward_batch(
    graph: RelationalHypergraph,
    params: ModelParams,
    layers: int | None = None,
    train: bool = False,
    rng: np.random.Generator | None = None,
    masked_edges: set[int] | None = None,
) -> ForwardTrace:
    """Query-agnostic features (1, V, d) from the all-ones initialization."""
    cfg = params.config
    L = cfg.layers if layers is None else layers
    tape = Tape()
    bound = bind_params(tape, params)
    h = tape.constant(np.ones((1, graph.node_count, cfg.d)))
    edge_groups = edges_by_relation(graph, masked_edges)
    g_by_rel = _g_vars(tape, bound, cfg, edge_groups, None)
    for ell in range(L):
        h = _message_layer(tape, bound, cfg, ell, h, edge_groups, g_by_rel, train, rng)
    return trace_with(tape, bound, h)


def trace_with(tape: Tape, bound: dict[str, Var], features: Var) -> ForwardTrace:
    return ForwardTrace(tape, bound, features)


def hcnet_forward(
    graph: RelationalHypergraph,
    query: Query,
    params: ModelParams,
    layers: int | None = None,
) -> tuple[Array, ForwardTrace]:
    """Single-query convenience wrapper: final (V, d) features plus trace."""
    trace = hcnet_forward_batch(graph, [query], params, layers)
    return trace.features.value[0], trace


def hrnet_forward(
    graph: RelationalHypergraph, params: ModelParams, layers: int | None = None
) -> tuple[Array, ForwardTrace]:
    trace = hrnet_forward_batch(graph, params, layers)
    return trace.features.value[0], trace


# --- decoders --------------------------------------------------------------


def _mlp_logits(tape: Tape, bound: dict[str, Var], prefix: str, x: Var) -> Var:
    hdn = ad.relu(
        tape,
        ad.add(tape, ad.matmul_last(tape, x, bound[f"{prefix}_W1"]), bound[f"{prefix}_b1"]),
    )
    out = ad.add(tape, ad.matmul_last(tape, hdn, bound[f"{prefix}_W2"]), bound[f"{prefix}_b2"])
    return ad.reshape(tape, out, out.value.shape[:-1])


def decode_unary_batch(trace: ForwardTrace, zq_batch: Var | None = None) -> Var:
    """Logits (Q, V) of the unary decoder over [h_v || z_q]."""
    tape, bound, h = trace.tape, trace.bound, trace.features
    if zq_batch is None:
        zq_batch = trace.zq_batch
    Q, V, d = h.value.shape
    z3 = ad.reshape(tape, zq_batch, (Q, 1, d))
    zb = ad.broadcast_middle(tape, z3, V)
    x = ad.concat_last(tape, [h, zb])
    logits = _mlp_logits(tape, bound, "dec", x)
    trace.scores = logits
    return logits


def decode_kary_batch(trace: ForwardTrace, tuples: Array, qrel: Array) -> Var:
    """Logits (M,) for node tuples (M, k) under query relations qrel (M,),
    from query-agnostic features (1, V, d)."""
    tape, bound, h = trace.tape, trace.bound, trace.features
    k = tuples.shape[1]
    parts = [
        ad.reshape(
            tape,
            ad.gather_nodes(tape, h, tuples[:, t]),
            (tuples.shape[0], h.value.shape[2]),
        )
        for t in range(k)
    ]
    parts.append(ad.take_rows(tape, bound["z_q"], qrel))
    x = ad.concat_last(tape, parts)
    logits = _mlp_logits(tape, bound, f"dec{k}", x)
    trace.scores = logits
    return logits


def _sigmoid_np(x: Array) -> Array:
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def decode_unary(h_v: Array, z_q: Array, params: ModelParams) -> float:
    """Probability from the 2-layer MLP over [h_v || z_q]."""
    t = params.tensors
    x = np.concatenate([h_v, z_q])
    hdn = np.maximum(t["dec_W1"] @ x + t["dec_b1"], 0.0)
    return float(_sigmoid_np(t["dec_W2"] @ hdn + t["dec_b2"])[0])


def decode_kary(h_tuple: list[Array], z_q: Array, params: ModelParams) -> float:
    """Probability for a full k-tuple of final representations."""
    k = len(h_tuple)
    t = params.tensors
    x = np.concatenate([*h_tuple, z_q])
    if f"dec{k}_W1" not in t:
        raise ShapeMismatch(f"no decoder for arity {k}")
    if t[f"dec{k}_W1"].shape[1] != x.shape[0]:
        raise ShapeMismatch("decoder width does not match tuple arity")
    hdn = np.maximum(t[f"dec{k}_W1"] @ x + t[f"dec{k}_b1"], 0.0)
    return float(_sigmoid_np(t[f"dec{k}_W2"] @ hdn + t[f"dec{k}_b2"])[0])


# --- gradients -------------------------------------------------------------


def backward(trace: ForwardTrace, loss_grad: Array, root: Var | None = None) -> dict[str, Array]:
    """Parameter gradients from a recorded forward pass."""
    root = root if root is not None else (trace.scores or trace.features)
    ad.backward(trace.tape, root, loss_grad)
    return {
        name: (var.grad if var.grad is not None else np.zeros_like(var.value))
        for name, var in trace.bound.items()
    }


def grad_check(
    graph: RelationalHypergraph,
    query: Query,
    params: ModelParams,
    eps: float = 1e-5,
    samples_per_tensor: int = 4,
    seed: int = 0,
    jitter: float = 0.05,
) -> float:
    """Max relative error of backward vs central finite differences on a
    subsample of entries of every trainable tensor (64-bit).

    Parameters are first nudged to a generic point (small uniform jitter):
    zero-initialized biases put entire feature rows exactly on the ReLU
    kink and at zero layer-norm variance, where the loss is genuinely
    non-differentiable and finite differences are meaningless."""
    rng = np.random.default_rng(seed)
    params = params.copy()
    if jitter > 0.0:
        for tensor in params.tensors.values():
            tensor += rng.uniform(-jitter, jitter, tensor.shape)

    def loss_of(p: ModelParams) -> tuple[float, dict[str, Array]]:
        trace = hcnet_forward_batch(graph, [query], p)
        logits = decode_unary_batch(trace)
        tape = trace.tape
        loss = ad.sum_all(tape, ad.sigmoid(tape, logits))
        grads = backward(trace, 1.0, root=loss)
        return float(loss.value), grads

    _, grads = loss_of(params)
    worst = 0.0
    for name, tensor in params.tensors.items():
        flat = tensor.reshape(-1)
        n = flat.size
        picks = rng.choice(n, size=min(samples_per_tensor, n), replace=False)
        for idx in picks:
            saved = flat[idx]
            flat[idx] = saved + eps
            up, _ = loss_of(params)
            flat[idx] = saved - eps
            down, _ = loss_of(params)
            flat[idx] = saved
            numeric = (up - down) / (2.0 * eps)
            analytic = grads[name].reshape(-1)[idx]
            err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-3)
            worst = max(worst, err)
    return worst
