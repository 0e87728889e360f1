"""Shape propagation and parameter counts for VGG-16 and the small network.

Run: python3 demos/architecture_demo.py
"""
from histoclahe.cnn import count_params, propagate_shapes, tiny_vgg, vgg16_descriptor

spec = vgg16_descriptor()
shapes = propagate_shapes(spec)
for layer, shape in zip(spec.layers, shapes):
    if layer.kind in ("maxpool", "fully_connected"):
        print(f"{layer.kind:16s} input {shape}")
print("VGG-16 parameters:", f"{count_params(spec):,}")

small = tiny_vgg(seed=0)
print("small network shapes:", propagate_shapes(small))
print("small network parameters:", count_params(small))
