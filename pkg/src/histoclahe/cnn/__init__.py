from .layers import (
    conv2d_backward,
    conv2d_forward,
    fc_backward,
    fc_forward,
    maxpool2_backward,
    maxpool2_forward,
    relu_backward,
    relu_forward,
    softmax,
    softmax_cross_entropy,
)
from .network import (
    LayerSpec,
    ModelFileError,
    Network,
    NetworkSpec,
    count_params,
    gradient_check,
    load_params,
    propagate_shapes,
    save_params,
    tiny_vgg,
    vgg16_descriptor,
)
from .train import TrainConfig, TrainingDivergence, TrainResult, evaluate_classifier, train_classifier
