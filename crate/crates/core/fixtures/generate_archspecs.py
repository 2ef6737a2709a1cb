"""Regenerates the bundled architecture fixtures.

Ten models are read from keras.applications (weights=None, default input
shape); ShuffleNet (v1, g=3) and ViT-B/16 are not shipped with Keras and are
listed by hand from their reference layer structure. Layers are flattened in
`model.layers` order, which is Keras' construction (topological) order. The
InputLayer is dropped. Activation layers are named after their function.
"""
import json
import os
import sys

os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "3")

import keras  # noqa: E402

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "archspecs")
# Models outside the shortlisted twelve, kept for family comparisons.
EXTRA_OUT = os.path.join(HERE, "archspecs_extra")

KERAS_MODELS = {
    "VGG19": keras.applications.VGG19,
    "EfficientNetB0": keras.applications.EfficientNetB0,
    "DenseNet121": keras.applications.DenseNet121,
    "Xception": keras.applications.Xception,
    "NASNetMobile": keras.applications.NASNetMobile,
    "ResNet50": keras.applications.ResNet50,
    "ResNet50V2": keras.applications.ResNet50V2,
    "InceptionV3": keras.applications.InceptionV3,
    "MobileNet": keras.applications.MobileNet,
    "MobileNetV2": keras.applications.MobileNetV2,
}

EXTRA_MODELS = {
    "VGG16": keras.applications.VGG16,
}

RENAME = {
    "MaxPooling2D": "MaxPool",
    "AveragePooling2D": "AvgPool",
    "GlobalAveragePooling2D": "GlobalAvgPool",
    "GlobalMaxPooling2D": "GlobalMaxPool",
}

ACTIVATIONS = {
    "relu": "ReLU",
    "swish": "Swish",
    "silu": "Swish",
    "sigmoid": "Sigmoid",
    "softmax": "Softmax",
    "gelu": "GELU",
}


def layer_name(layer):
    kind = type(layer).__name__
    if kind == "Activation":
        fn = layer.activation.__name__
        return ACTIVATIONS[fn]
    if kind == "ReLU":
        return "ReLU6" if layer.max_value == 6 else "ReLU"
    return RENAME.get(kind, kind)


def keras_layers(ctor):
    model = ctor(weights=None)
    names = [layer_name(l) for l in model.layers if type(l).__name__ != "InputLayer"]
    return names


def shufflenet_v1():
    seq = ["Conv2D", "BatchNormalization", "ReLU", "MaxPool"]
    for repeats in (4, 8, 4):
        for unit in range(repeats):
            stride2 = unit == 0
            seq += ["Conv2D", "BatchNormalization", "ReLU"]
            seq += ["Reshape", "Permute", "Reshape"]  # channel shuffle
            seq += ["DepthwiseConv2D", "BatchNormalization"]
            seq += ["Conv2D", "BatchNormalization"]
            if stride2:
                seq += ["AvgPool", "Concatenate"]
            else:
                seq += ["Add"]
            seq += ["ReLU"]
    seq += ["GlobalAvgPool", "Dense", "Softmax"]
    return seq


def vit_b16():
    seq = ["Rescaling", "Conv2D", "Reshape", "ClassToken", "AddPositionEmbedding", "Dropout"]
    for _ in range(12):
        seq += ["LayerNormalization", "MultiHeadAttention", "Dropout", "Add"]
        seq += ["LayerNormalization", "Dense", "GELU", "Dropout", "Dense", "Dropout", "Add"]
    seq += ["LayerNormalization", "ExtractToken", "Dense", "Softmax"]
    return seq


def main():
    os.makedirs(OUT, exist_ok=True)
    specs = {name: keras_layers(ctor) for name, ctor in KERAS_MODELS.items()}
    specs["ShuffleNet"] = shufflenet_v1()
    specs["ViT"] = vit_b16()
    kinds = sorted({k for layers in specs.values() for k in layers})
    codes = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz"
    preferred = {"Conv2D": "C", "BatchNormalization": "B", "MaxPool": "M", "Dropout": "D", "ReLU": "R", "Dense": "F"}
    alphabet = dict(preferred)
    free = [c for c in codes if c not in preferred.values()]
    for k in kinds:
        if k not in alphabet:
            alphabet[k] = free.pop(0)
    alphabet = {k: alphabet[k] for k in sorted(alphabet)}
    os.makedirs(EXTRA_OUT, exist_ok=True)
    for name, ctor in EXTRA_MODELS.items():
        layers = keras_layers(ctor)
        assert all(k in alphabet for k in layers), name
        with open(os.path.join(EXTRA_OUT, f"{name}.json"), "w") as f:
            json.dump({"name": name, "layers": layers}, f, indent=1)
            f.write("\n")
    with open(os.path.join(HERE, "alphabet.json"), "w") as f:
        json.dump(alphabet, f, indent=2)
        f.write("\n")
    for name, layers in specs.items():
        with open(os.path.join(OUT, f"{name}.json"), "w") as f:
            json.dump({"name": name, "layers": layers}, f, indent=1)
            f.write("\n")
        print(name, len(layers), file=sys.stderr)
    print(len(alphabet), "kinds", file=sys.stderr)


if __name__ == "__main__":
    main()
