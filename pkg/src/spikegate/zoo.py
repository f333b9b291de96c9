"""Canonical network skeletons.

Spike-based VGG11 and ResNet18 at full width, plus the desk-scale micro
variants the test suite trains: MicroVGG (Block1(8) - Block1(16) -
Block2(16) - global avgpool - two-affine classifier) and MicroResNet
(conv-bn-spike stem, two width-8 BasicBlocks). ANN twins swap spike
layers for relu; conversion-eligible variants carry no batchnorm.
"""

from __future__ import annotations

from .errors import SpecError
from .neurons import HARD, IF, SOFT, NeuronConfig
from .network import (NetworkSpec, ResidualBlock, affine, avgpool, batchnorm,
                      conv, dropout, maxpool, relu, spike)

LRB_NEURON = NeuronConfig(kind=IF, threshold=1.0, reset=HARD)
CONVERTED_NEURON = NeuronConfig(kind=IF, threshold=1.0, reset=SOFT)


def _act(spiking: bool, neuron: NeuronConfig):
    return spike(neuron) if spiking else relu()


def _block1(width, spiking, neuron):
    # conv3x3 (same padding) -> activation -> maxpool 2x2/2
    return [conv(width, 3, 1, 1), _act(spiking, neuron), maxpool(2)]


def _block2(width, spiking, neuron):
    return [conv(width, 3, 1, 1), _act(spiking, neuron),
            conv(width, 3, 1, 1), _act(spiking, neuron), maxpool(2)]


def micro_vgg(input_shape=(1, 16, 16), num_classes=10, spiking=True,
              neuron: NeuronConfig | None = None, hidden=32,
              p_drop=0.25) -> NetworkSpec:
    """Desk-scale VGG-pattern net: Block1(8), Block1(16), Block2(16),
    global avgpool, affine(hidden)-act-dropout-affine(classes)."""
    neuron = neuron or (LRB_NEURON if spiking else CONVERTED_NEURON)
    c, h, w = input_shape
    if h != w:
        raise SpecError("micro_vgg expects square inputs")
    items = []
    items += _block1(8, spiking, neuron)
    items += _block1(16, spiking, neuron)
    items += _block2(16, spiking, neuron)
    side = ((h // 2) // 2) // 2
    if side < 1:
        raise SpecError(f"input {input_shape} too small for micro_vgg")
    items += [avgpool(side)]  # global: collapses to 1x1
    items += [affine(hidden), _act(spiking, neuron), dropout(p_drop),
              affine(num_classes)]
    kind = "snn" if spiking else "ann"
    return NetworkSpec(tuple(items), input_shape, num_classes,
                       name=f"micro_vgg-{kind}")


def _basic_block(width, spiking, neuron, with_bn=True):
    bn = [batchnorm()] if with_bn else []
    main = [conv(width, 3, 1, 1)] + bn + [_act(spiking, neuron),
            conv(width, 3, 1, 1)] + bn
    # residual add lands on the input current of the closing activation
    return ResidualBlock(main=tuple(main), skip=(),
                         post=(_act(spiking, neuron),))


def micro_resnet(input_shape=(1, 16, 16), num_classes=10, spiking=True,
                 neuron: NeuronConfig | None = None, width=8,
                 with_bn=True) -> NetworkSpec:
    """Desk-scale residual net: stem conv-bn-act-maxpool, one BasicBlock
    pair at fixed width, global avgpool, affine classifier."""
    neuron = neuron or LRB_NEURON
    c, h, w = input_shape
    bn = [batchnorm()] if with_bn else []
    items = [conv(width, 3, 1, 1)] + bn + [_act(spiking, neuron), maxpool(2)]
    items += [_basic_block(width, spiking, neuron, with_bn),
              _basic_block(width, spiking, neuron, with_bn)]
    side = h // 2
    items += [avgpool(side), affine(num_classes)]
    kind = "snn" if spiking else "ann"
    return NetworkSpec(tuple(items), input_shape, num_classes,
                       name=f"micro_resnet-{kind}")


def vgg11(input_shape=(3, 32, 32), num_classes=10, spiking=True,
          neuron: NeuronConfig | None = None) -> NetworkSpec:
    """Full-width spike-based VGG11: Block1 x2, Block2 x3, avgpool,
    FC-act-dropout twice, FC."""
    neuron = neuron or LRB_NEURON
    c, h, w = input_shape
    items = []
    items += _block1(64, spiking, neuron)
    items += _block1(128, spiking, neuron)
    items += _block2(256, spiking, neuron)
    items += _block2(512, spiking, neuron)
    items += _block2(512, spiking, neuron)
    side = h // 32
    if side < 1:
        raise SpecError(f"input {input_shape} too small for vgg11")
    items += [avgpool(side)]
    items += [affine(4096), _act(spiking, neuron), dropout(0.5),
              affine(4096), _act(spiking, neuron), dropout(0.5),
              affine(num_classes)]
    kind = "snn" if spiking else "ann"
    return NetworkSpec(tuple(items), input_shape, num_classes,
                       name=f"vgg11-{kind}")


def resnet18(input_shape=(3, 32, 32), num_classes=10, spiking=True,
             neuron: NeuronConfig | None = None, with_bn=True) -> NetworkSpec:
    """Full-width spike-based ResNet18: stem, (BasicBlock x2) x4 at widths
    64/128/256/512, avgpool, FC. Stage transitions use a strided conv on
    both branches."""
    neuron = neuron or LRB_NEURON
    c, h, w = input_shape
    bn = [batchnorm()] if with_bn else []

    def transition_block(width):
        main = [conv(width, 3, 2, 1)] + bn + [_act(spiking, neuron),
                conv(width, 3, 1, 1)] + bn
        skip_layers = [conv(width, 1, 2, 0)] + bn
        return ResidualBlock(main=tuple(main), skip=tuple(skip_layers),
                             post=(_act(spiking, neuron),))

    items = [conv(64, 3, 1, 1)] + bn + [_act(spiking, neuron), maxpool(2)]
    side = h // 2
    for stage, width in enumerate((64, 128, 256, 512)):
        if stage == 0:
            items += [_basic_block(width, spiking, neuron, with_bn)]
        else:
            items += [transition_block(width)]
            side //= 2
        items += [_basic_block(width, spiking, neuron, with_bn)]
    if side < 1:
        raise SpecError(f"input {input_shape} too small for resnet18")
    items += [avgpool(side), affine(num_classes)]
    kind = "snn" if spiking else "ann"
    return NetworkSpec(tuple(items), input_shape, num_classes,
                       name=f"resnet18-{kind}")


REGISTRY = {
    "micro_vgg": micro_vgg,
    "micro_resnet": micro_resnet,
    "vgg11": vgg11,
    "resnet18": resnet18,
}


def make_spec(name: str, **kwargs) -> NetworkSpec:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise SpecError(f"unknown model {name!r}; choices: {sorted(REGISTRY)}")
    return factory(**kwargs)
