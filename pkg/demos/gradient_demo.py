"""Finite-difference check of the hand-written backward pass.

Run: python3 demos/gradient_demo.py
"""
import numpy as np

from histoclahe.cnn import Network, gradient_check, layers, tiny_vgg

net = Network(tiny_vgg(seed=3))
sample = (np.random.default_rng(0).normal(size=(1, 32, 32)), 1)
print("max relative error:", gradient_check(net, sample, 1e-5))

# break the ReLU backward pass on purpose and watch the check catch it
original = layers.relu_backward
layers.relu_backward = lambda d, x: -original(d, x)
try:
    print("with a sign flip:", gradient_check(net, sample, 1e-5))
finally:
    layers.relu_backward = original
