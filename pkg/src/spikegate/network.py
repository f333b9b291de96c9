"""Declarative network specifications and parameter construction.

A NetworkSpec is an ordered tuple of layers and residual blocks. Layer ids
are positional paths ("0", "2.main.1", "2.post.0") and double as parameter
name prefixes ("0.weight"). Specs are immutable and safe to share; building
one yields a fresh ParameterSet.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import SpecError
from .layers import out_extent
from .neurons import IF, SOFT, NeuronConfig
from .seeding import rng_for
from .tensor import ParameterSet

CONV = "conv"
AFFINE = "affine"
BATCHNORM = "batchnorm"
MAXPOOL = "maxpool"
AVGPOOL = "avgpool"
DROPOUT = "dropout"
RELU = "relu"
SIGMOID_ACT = "sigmoid"
SPIKE = "spike"

LAYER_KINDS = (CONV, AFFINE, BATCHNORM, MAXPOOL, AVGPOOL, DROPOUT, RELU,
               SIGMOID_ACT, SPIKE)
ANN_ACTIVATIONS = (RELU, SIGMOID_ACT)


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    out_channels: int = 0      # conv
    kernel: int = 0            # conv / pools
    stride: int = 1            # conv / pools
    padding: int = 0           # conv
    features: int = 0          # affine output width
    p_drop: float = 0.0        # dropout
    neuron: NeuronConfig | None = None   # spike layers

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise SpecError(f"unknown layer kind {self.kind!r}")
        if self.kind == SPIKE and self.neuron is None:
            object.__setattr__(self, "neuron", NeuronConfig())


def conv(out_channels, kernel=3, stride=1, padding=0):
    return LayerSpec(CONV, out_channels=out_channels, kernel=kernel,
                     stride=stride, padding=padding)


def affine(features):
    return LayerSpec(AFFINE, features=features)


def batchnorm():
    return LayerSpec(BATCHNORM)


def maxpool(kernel=2, stride=None):
    return LayerSpec(MAXPOOL, kernel=kernel, stride=stride or kernel)


def avgpool(kernel=2, stride=None):
    return LayerSpec(AVGPOOL, kernel=kernel, stride=stride or kernel)


def dropout(p_drop=0.5):
    return LayerSpec(DROPOUT, p_drop=p_drop)


def relu():
    return LayerSpec(RELU)


def spike(neuron: NeuronConfig | None = None):
    return LayerSpec(SPIKE, neuron=neuron or NeuronConfig())


@dataclass(frozen=True)
class ResidualBlock:
    """main -> (+ skip of the block input) -> post. Empty skip = identity."""

    main: tuple[LayerSpec, ...]
    skip: tuple[LayerSpec, ...] = ()
    post: tuple[LayerSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "main", tuple(self.main))
        object.__setattr__(self, "skip", tuple(self.skip))
        object.__setattr__(self, "post", tuple(self.post))


@dataclass(frozen=True)
class NetworkSpec:
    items: tuple
    input_shape: tuple[int, ...]
    num_classes: int
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        if not self.items:
            raise SpecError("network spec has no layers")
        validate_spec(self)

    @property
    def is_spiking(self) -> bool:
        return any(l.kind == SPIKE for _, l in iter_layers(self))


def _step_shape(lid: str, layer: LayerSpec, shape: tuple[int, ...]) -> tuple[int, ...]:
    k = layer.kind
    if k == CONV:
        if len(shape) != 3:
            raise SpecError(f"layer {lid}: conv needs a C,H,W input, got {shape}")
        c, h, w = shape
        ho = out_extent(h, layer.kernel, layer.stride, layer.padding)
        wo = out_extent(w, layer.kernel, layer.stride, layer.padding)
        if ho < 1 or wo < 1:
            raise SpecError(f"layer {lid}: conv kernel does not fit input {shape}")
        return (layer.out_channels, ho, wo)
    if k in (MAXPOOL, AVGPOOL):
        if len(shape) != 3:
            raise SpecError(f"layer {lid}: pool needs a C,H,W input, got {shape}")
        c, h, w = shape
        ho = out_extent(h, layer.kernel, layer.stride, 0)
        wo = out_extent(w, layer.kernel, layer.stride, 0)
        if ho < 1 or wo < 1:
            raise SpecError(f"layer {lid}: pool window does not fit input {shape}")
        return (c, ho, wo)
    if k == AFFINE:
        return (layer.features,)
    return shape


def layers_with_shapes(spec: NetworkSpec):
    """(layer_id, LayerSpec, input_shape) in execution order, blocks included.

    Also validates residual-branch shape agreement at each merge.
    """
    out = []
    shape = spec.input_shape
    for i, item in enumerate(spec.items):
        if isinstance(item, ResidualBlock):
            s = shape
            for j, layer in enumerate(item.main):
                lid = f"{i}.main.{j}"
                out.append((lid, layer, s))
                s = _step_shape(lid, layer, s)
            s_skip = shape
            for j, layer in enumerate(item.skip):
                lid = f"{i}.skip.{j}"
                out.append((lid, layer, s_skip))
                s_skip = _step_shape(lid, layer, s_skip)
            if s != s_skip:
                raise SpecError(
                    f"block {i}: branch shapes differ at merge "
                    f"(main {s} vs skip {s_skip})"
                )
            for j, layer in enumerate(item.post):
                lid = f"{i}.post.{j}"
                out.append((lid, layer, s))
                s = _step_shape(lid, layer, s)
            shape = s
        else:
            lid = str(i)
            out.append((lid, item, shape))
            shape = _step_shape(lid, item, shape)
    return out, shape


def iter_layers(spec: NetworkSpec):
    """Yield (layer_id, LayerSpec) in execution order."""
    entries, _ = layers_with_shapes(spec)
    for lid, layer, _shape in entries:
        yield lid, layer


def output_shape(spec: NetworkSpec) -> tuple[int, ...]:
    _, shape = layers_with_shapes(spec)
    return shape


def validate_spec(spec: NetworkSpec) -> None:
    entries, out = layers_with_shapes(spec)
    kinds = {l.kind for _, l, _ in entries}
    if SPIKE in kinds and kinds & set(ANN_ACTIVATIONS):
        raise SpecError("spec mixes spike layers with ANN activations")
    if out != (spec.num_classes,):
        raise SpecError(
            f"network output shape {out} does not match class count "
            f"({spec.num_classes},)"
        )


# ---------------------------------------------------------------------------
# parameter construction


def build_network(spec: NetworkSpec, seed: int) -> ParameterSet:
    """Kaiming-uniform weights scaled by fan-in, zero biases, seeded."""
    params = ParameterSet()
    rng = rng_for(seed, "init", spec.name or "net")
    entries, _ = layers_with_shapes(spec)
    for lid, layer, in_shape in entries:
        if layer.kind == CONV:
            cin = in_shape[0]
            fan_in = cin * layer.kernel * layer.kernel
            bound = np.sqrt(6.0 / fan_in)
            params.add(f"{lid}.weight", rng.uniform(
                -bound, bound,
                size=(layer.out_channels, cin, layer.kernel, layer.kernel)))
            params.add(f"{lid}.bias", np.zeros(layer.out_channels))
        elif layer.kind == AFFINE:
            fan_in = int(np.prod(in_shape))
            bound = np.sqrt(6.0 / fan_in)
            params.add(f"{lid}.weight",
                       rng.uniform(-bound, bound, size=(fan_in, layer.features)))
            params.add(f"{lid}.bias", np.zeros(layer.features))
        elif layer.kind == BATCHNORM:
            c = in_shape[0]
            params.add(f"{lid}.gamma", np.ones(c))
            params.add(f"{lid}.beta", np.zeros(c))
            params.add(f"running.{lid}.mean", np.zeros(c))
            params.add(f"running.{lid}.var", np.ones(c))
    return params


@dataclass
class Model:
    """A spec plus its parameters; the unit every pipeline passes around."""

    spec: NetworkSpec
    params: ParameterSet

    @property
    def is_spiking(self) -> bool:
        return self.spec.is_spiking

    def copy(self) -> "Model":
        return Model(self.spec, self.params.copy())


# ---------------------------------------------------------------------------
# ANN <-> SNN topology mapping


def _substitute(layers, table):
    return tuple(table.get(l.kind, lambda x: x)(l) for l in layers)


def _map_items(spec: NetworkSpec, table) -> tuple:
    items = []
    for item in spec.items:
        if isinstance(item, ResidualBlock):
            items.append(ResidualBlock(
                main=_substitute(item.main, table),
                skip=_substitute(item.skip, table),
                post=_substitute(item.post, table),
            ))
        else:
            items.append(_substitute([item], table)[0])
    return tuple(items)


def ann_to_snn_topology(ann_spec: NetworkSpec,
                        neuron: NeuronConfig | None = None) -> NetworkSpec:
    """Replace every relu with a spike layer (soft-reset IF by default).

    The source spec must satisfy the conversion constraints structurally
    (relu-only activations, no normalization layers).
    """
    report = validate_conversion_constraints(ann_spec, params=None)
    if report.violations:
        from .errors import ConversionConstraintError

        raise ConversionConstraintError(report.violations)
    neuron = neuron or NeuronConfig(kind=IF, threshold=1.0, reset=SOFT)
    table = {RELU: lambda l: spike(neuron)}
    return replace(ann_spec, items=_map_items(ann_spec, table),
                   name=ann_spec.name + "-snn" if ann_spec.name else "")


def snn_to_ann_topology(snn_spec: NetworkSpec) -> NetworkSpec:
    """Inverse substitution: every spike layer becomes a relu."""
    table = {SPIKE: lambda l: relu()}
    name = snn_spec.name
    if name.endswith("-snn"):
        name = name[: -len("-snn")]
    return replace(snn_spec, items=_map_items(snn_spec, table), name=name)


@dataclass
class ConstraintReport:
    """Violations of the conversion constraints: (layer_id, rule) pairs."""

    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_conversion_constraints(ann_spec: NetworkSpec,
                                    params: ParameterSet | None = None) -> ConstraintReport:
    """Check relu-only activations, no normalization, zero biases.

    Structural rules come from the spec alone; the zero-bias rule needs the
    parameters and is skipped when ``params`` is None.
    """
    violations = []
    for lid, layer in iter_layers(ann_spec):
        if layer.kind == BATCHNORM:
            violations.append((lid, "normalization"))
        elif layer.kind in ANN_ACTIVATIONS and layer.kind != RELU:
            violations.append((lid, "activation"))
        elif layer.kind == SPIKE:
            violations.append((lid, "spike-in-ann"))
    if params is not None:
        for name, value in params.params.items():
            if name.endswith(".bias") and np.any(value != 0.0):
                violations.append((name[: -len(".bias")], "bias"))
    return ConstraintReport(violations=violations)


# ---------------------------------------------------------------------------
# JSON spec files


def _layer_to_dict(layer: LayerSpec) -> dict:
    d = {"kind": layer.kind}
    if layer.kind == CONV:
        d.update(out_channels=layer.out_channels, kernel=layer.kernel,
                 stride=layer.stride, padding=layer.padding)
    elif layer.kind in (MAXPOOL, AVGPOOL):
        d.update(kernel=layer.kernel, stride=layer.stride)
    elif layer.kind == AFFINE:
        d.update(features=layer.features)
    elif layer.kind == DROPOUT:
        d.update(p_drop=layer.p_drop)
    elif layer.kind == SPIKE:
        n = layer.neuron
        d.update(neuron={"kind": n.kind, "threshold": n.threshold,
                         "tau": n.tau, "reset": n.reset})
    return d


def _layer_from_dict(d: dict) -> LayerSpec:
    d = dict(d)
    kind = d.pop("kind")
    if kind == SPIKE and "neuron" in d:
        d["neuron"] = NeuronConfig(**d["neuron"])
    return LayerSpec(kind, **d)


def spec_to_json(spec: NetworkSpec) -> str:
    def item_dict(item):
        if isinstance(item, ResidualBlock):
            return {"block": {
                "main": [_layer_to_dict(l) for l in item.main],
                "skip": [_layer_to_dict(l) for l in item.skip],
                "post": [_layer_to_dict(l) for l in item.post],
            }}
        return _layer_to_dict(item)

    doc = {
        "name": spec.name,
        "input_shape": list(spec.input_shape),
        "num_classes": spec.num_classes,
        "layers": [item_dict(it) for it in spec.items],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def spec_from_json(text: str) -> NetworkSpec:
    doc = json.loads(text)
    items = []
    for entry in doc["layers"]:
        if "block" in entry:
            b = entry["block"]
            items.append(ResidualBlock(
                main=tuple(_layer_from_dict(l) for l in b["main"]),
                skip=tuple(_layer_from_dict(l) for l in b["skip"]),
                post=tuple(_layer_from_dict(l) for l in b["post"]),
            ))
        else:
            items.append(_layer_from_dict(entry))
    return NetworkSpec(items=tuple(items), input_shape=tuple(doc["input_shape"]),
                       num_classes=doc["num_classes"], name=doc.get("name", ""))
