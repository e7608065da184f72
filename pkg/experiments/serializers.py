"""
Serializers for experiment documents.

An experiment document names one `kind` and carries a `parameters` block
validated against that kind's schema. Unknown keys are rejected at every
level and errors are reported with dotted key paths.

Example document:
    kind: simulate2d
    seed: 7
    parameters:
      N: 64
      epsilon: 1.0e-3
      T_end: 20
"""
import copy

from rest_framework import serializers

KINDS = [
    "simulate2d",
    "simulate3d",
    "linear-torus",
    "linear-whole-space",
    "perturbed-linear",
    "sharpness",
    "verify-lemmas",
    "stability-forms",
    "fit",
]

WEIGHTS = ["identity", "R1", "R1squared"]


class StrictSerializer(serializers.Serializer):
    """Serializer that rejects keys it does not declare."""

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["Unknown key."] for key in unknown})
        return super().to_internal_value(data)


def validate_power_of_two(value):
    if value < 8 or value & (value - 1):
        raise serializers.ValidationError("Must be a power of two and at least 8.")
    return value


def validate_window(value):
    if value is None:
        return value
    if len(value) != 2 or not value[0] < value[1]:
        raise serializers.ValidationError("Window must be [t_min, t_max] with t_min < t_max.")
    return value


class ProfileSerializer(StrictSerializer):
    """Stratified profile Ω(y) = K y + ω(y)."""

    kind = serializers.ChoiceField(choices=["linear", "linear_plus_sine", "samples"], default="linear")
    K = serializers.FloatField(default=1.0)
    amplitude = serializers.FloatField(default=1.0)
    frequency = serializers.IntegerField(default=1, min_value=1)
    samples = serializers.ListField(child=serializers.FloatField(), required=False, min_length=8)

    def validate(self, data):
        if data["kind"] == "samples" and not data.get("samples"):
            raise serializers.ValidationError({"samples": "Profiles of kind 'samples' need ω samples."})
        return data


class ModeSerializer(StrictSerializer):
    wavevector = serializers.ListField(child=serializers.IntegerField(), min_length=2, max_length=3)
    amplitude = serializers.FloatField(default=1.0)
    phase = serializers.FloatField(default=0.0)


class InitialConditionSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=["random", "modes"], default="random")
    norm_index = serializers.FloatField(default=4.0, min_value=0.0)
    band = serializers.IntegerField(default=8, min_value=1)
    slope = serializers.FloatField(default=6.0)
    modes = ModeSerializer(many=True, required=False)
    horizontal_mean = serializers.BooleanField(default=True)


class SimulationParametersSerializer(StrictSerializer):
    """Parameters of simulate2d and simulate3d."""

    N = serializers.IntegerField(default=64, validators=[validate_power_of_two])
    epsilon = serializers.FloatField(default=1e-3, min_value=0.0)
    T_end = serializers.FloatField(default=10.0, min_value=0.0)
    length = serializers.FloatField(default=None, allow_null=True, min_value=0.0)
    profile = ProfileSerializer(required=False)
    initial = InitialConditionSerializer(required=False)
    dt = serializers.FloatField(default=None, allow_null=True, min_value=0.0)
    cfl_safety = serializers.FloatField(default=None, allow_null=True, min_value=0.0, max_value=1.0)
    diagnostic_stride = serializers.IntegerField(default=10, min_value=1)
    checkpoint_stride = serializers.IntegerField(default=0, min_value=0)
    norms = serializers.ListField(child=serializers.FloatField(min_value=0.0), default=[0.0, 3.0, 4.0, 5.0, 10.0])
    split_index = serializers.FloatField(default=4.0, min_value=0.0)
    energy_index = serializers.FloatField(default=4.0, allow_null=True, min_value=4.0)
    nonlinear = serializers.BooleanField(default=True)
    dealias = serializers.BooleanField(default=True)
    fit_window = serializers.ListField(
        child=serializers.FloatField(min_value=0.0), default=None, allow_null=True, validators=[validate_window]
    )
    expect = serializers.ChoiceField(choices=["stable", "unstable", "none"], default="none")
    growth_bound = serializers.FloatField(default=2.0, min_value=0.0)
    velocity_decay = serializers.FloatField(default=0.1, min_value=0.0)
    bar_exponent_max = serializers.FloatField(default=-1.5)
    growth_factor = serializers.FloatField(default=10.0, min_value=0.0)

    def validate_T_end(self, value):
        if value <= 0:
            raise serializers.ValidationError("Must be positive.")
        return value

    def validate(self, data):
        norm_index = (data.get("initial") or {}).get("norm_index", 4.0)
        if data["expect"] == "stable" and norm_index not in data["norms"]:
            raise serializers.ValidationError(
                {"norms": f"Stable runs monitor the H^{norm_index:g} norm; add it to the list."}
            )
        return data


class LinearTorusSerializer(StrictSerializer):
    N = serializers.IntegerField(default=32, validators=[validate_power_of_two])
    dimension = serializers.ChoiceField(choices=[2, 3], default=2)
    modes = ModeSerializer(many=True, required=False)
    times = serializers.ListField(child=serializers.FloatField(min_value=0.0), default=[0.1, 1.0, 10.0], min_length=1)
    rate = serializers.FloatField(default=1.0)
    velocity_index = serializers.FloatField(default=0.0, min_value=0.0)
    bound_times = serializers.ListField(
        child=serializers.FloatField(min_value=0.0), default=[0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0]
    )


class LinearWholeSpaceSerializer(StrictSerializer):
    dimension = serializers.ChoiceField(choices=[2, 3], default=2)
    width = serializers.FloatField(default=1.0, min_value=0.0)
    anisotropy = serializers.FloatField(default=0.3, min_value=-0.99, max_value=0.99)
    t_min = serializers.FloatField(default=1e2, min_value=0.0)
    t_max = serializers.FloatField(default=1e5, min_value=0.0)
    samples = serializers.IntegerField(default=16, min_value=8)
    weights = serializers.ListField(child=serializers.ChoiceField(choices=WEIGHTS), default=WEIGHTS, min_length=1)
    lambda_power = serializers.FloatField(default=0.0, min_value=0.0)
    box_lengths = serializers.ListField(child=serializers.FloatField(min_value=0.0), default=list)
    box_points = serializers.IntegerField(default=None, allow_null=True, validators=[validate_power_of_two])

    def validate(self, data):
        if not 0 < data["t_min"] < data["t_max"]:
            raise serializers.ValidationError({"t_min": "Need 0 < t_min < t_max."})
        if data["dimension"] == 3 and data["lambda_power"]:
            raise serializers.ValidationError({"lambda_power": "Only available in 2D."})
        if data["box_lengths"]:
            if data["dimension"] == 3:
                raise serializers.ValidationError({"box_lengths": "Only available in 2D."})
            if min(data["box_lengths"]) <= 0:
                raise serializers.ValidationError({"box_lengths": "Box lengths must be positive."})
        return data


class PerturbedLinearSerializer(StrictSerializer):
    N = serializers.IntegerField(default=32, validators=[validate_power_of_two])
    amplitude = serializers.FloatField(default=0.05)
    frequency = serializers.IntegerField(default=1, min_value=1)
    delta = serializers.FloatField(default=None, allow_null=True, min_value=0.0)
    epsilon = serializers.FloatField(default=1.0, min_value=0.0)
    band = serializers.IntegerField(default=8, min_value=1)
    slope = serializers.FloatField(default=6.0)
    sobolev_index = serializers.FloatField(default=8.0, min_value=0.0)
    T_end = serializers.FloatField(default=100.0, min_value=0.0)
    samples = serializers.IntegerField(default=32, min_value=8)
    dt = serializers.FloatField(default=0.5, min_value=0.0)
    fit_window = serializers.ListField(
        child=serializers.FloatField(min_value=0.0), default=None, allow_null=True, validators=[validate_window]
    )
    check_exponent = serializers.BooleanField(default=False)
    exponent_range = serializers.ListField(
        child=serializers.FloatField(), default=[-2.8, -2.0], validators=[validate_window]
    )

    def validate(self, data):
        if data["T_end"] <= 1.0:
            raise serializers.ValidationError({"T_end": "Must exceed 1."})
        if data["dt"] <= 0:
            raise serializers.ValidationError({"dt": "Must be positive."})
        return data


class SharpnessSerializer(StrictSerializer):
    t_min = serializers.FloatField(default=1.0, min_value=0.0)
    t_max = serializers.FloatField(default=1e4, min_value=0.0)
    samples = serializers.IntegerField(default=17, min_value=2)
    floor = serializers.FloatField(default=0.3, min_value=0.0)
    nodes = serializers.IntegerField(default=64, min_value=8)
    radial_width = serializers.FloatField(default=1.0, min_value=0.0)

    def validate(self, data):
        if not 0 < data["t_min"] < data["t_max"]:
            raise serializers.ValidationError({"t_min": "Need 0 < t_min < t_max."})
        return data


class VerifyLemmasSerializer(StrictSerializer):
    t_max = serializers.FloatField(default=1e4, min_value=10.0)
    deltas = serializers.ListField(
        child=serializers.FloatField(min_value=0.0), default=[0.25, 0.5, 1.0, 1.25], min_length=1
    )
    etas = serializers.ListField(
        child=serializers.FloatField(min_value=0.0), default=[0.25, 0.5, 1.0], min_length=1
    )

    def validate(self, data):
        for key in ("deltas", "etas"):
            if any(value <= 0 for value in data[key]):
                raise serializers.ValidationError({key: "Values must be positive."})
        data["grid"] = [[delta, eta] for delta in data["deltas"] for eta in data["etas"]]
        return data


class StabilityFormsSerializer(StrictSerializer):
    profile = ProfileSerializer(required=False)
    dimension = serializers.ChoiceField(choices=[2, 3], default=2)
    N = serializers.IntegerField(default=32, validators=[validate_power_of_two])
    samples = serializers.IntegerField(default=100, min_value=1)
    band = serializers.IntegerField(default=8, min_value=1)
    slope = serializers.FloatField(default=2.0)


class FitSerializer(StrictSerializer):
    source = serializers.CharField()
    time_column = serializers.CharField(default="t")
    columns = serializers.ListField(child=serializers.CharField(), min_length=1)
    window = serializers.ListField(
        child=serializers.FloatField(min_value=0.0), default=None, allow_null=True, validators=[validate_window]
    )
    targets = serializers.DictField(child=serializers.FloatField(), default=dict)

    def validate(self, data):
        unknown = sorted(set(data["targets"]) - set(data["columns"]))
        if unknown:
            raise serializers.ValidationError({"targets": f"Targets for unfitted columns: {', '.join(unknown)}."})
        return data


PARAMETER_SERIALIZERS = {
    "simulate2d": SimulationParametersSerializer,
    "simulate3d": SimulationParametersSerializer,
    "linear-torus": LinearTorusSerializer,
    "linear-whole-space": LinearWholeSpaceSerializer,
    "perturbed-linear": PerturbedLinearSerializer,
    "sharpness": SharpnessSerializer,
    "verify-lemmas": VerifyLemmasSerializer,
    "stability-forms": StabilityFormsSerializer,
    "fit": FitSerializer,
}

PRESETS = {
    "acceptance": {
        "simulate2d": {
            "N": 256,
            "epsilon": 1e-3,
            "T_end": 200.0,
            "diagnostic_stride": 100,
            "energy_index": None,
            "fit_window": [20.0, 200.0],
            "expect": "stable",
        },
        "simulate3d": {
            "N": 64,
            "epsilon": 1e-3,
            "T_end": 50.0,
            "diagnostic_stride": 100,
            "energy_index": None,
            "expect": "stable",
            "velocity_decay": 0.3,
        },
        "perturbed-linear": {
            "N": 128,
            "amplitude": 0.05,
            "T_end": 1000.0,
            "samples": 64,
            "fit_window": [10.0, 1000.0],
            "check_exponent": True,
        },
    }
}


class ExperimentSpecSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=KINDS)
    seed = serializers.IntegerField(default=0, min_value=0, max_value=2 ** 64 - 1)
    output = serializers.CharField(required=False, allow_null=True, default=None)
    preset = serializers.ChoiceField(choices=sorted(PRESETS), required=False, allow_null=True, default=None)
    parameters = serializers.DictField(default=dict)

    def validate(self, data):
        kind = data["kind"]
        parameters = copy.deepcopy(data["parameters"])
        preset = data.get("preset")
        if preset:
            if kind not in PRESETS[preset]:
                raise serializers.ValidationError({"preset": f"Preset '{preset}' has no entry for kind '{kind}'."})
            parameters = {**PRESETS[preset][kind], **parameters}
        serializer = PARAMETER_SERIALIZERS[kind](data=parameters)
        if not serializer.is_valid():
            raise serializers.ValidationError({"parameters": serializer.errors})
        data["parameters"] = serializer.validated_data
        return data


def flatten_errors(detail, prefix=""):
    """DRF error detail → ['parameters.N: Must be a power of two ...', ...]."""
    messages = []
    if isinstance(detail, dict):
        for key, value in detail.items():
            path = f"{prefix}.{key}" if prefix else str(key)
            if key == "non_field_errors":
                path = prefix or key
            messages.extend(flatten_errors(value, path))
    elif isinstance(detail, list):
        if all(isinstance(item, (str, bytes)) for item in detail):
            messages.extend(f"{prefix}: {item}" for item in detail)
        else:
            for index, item in enumerate(detail):
                messages.extend(flatten_errors(item, f"{prefix}.{index}"))
    else:
        messages.append(f"{prefix}: {detail}")
    return messages
