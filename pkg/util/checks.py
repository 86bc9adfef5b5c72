"""Utility module for configuration checks"""

from util.general import check_type

MODELS = ("tiny_cnn", "tiny_attention")
METRIC_IDS = ("POS", "NEG", "INS", "DEL", "ADP", "PIC", "SIC", "AIC")
BASELINE_NAMES = ("Normal", "Uniform", "Blur", "Constant", "TrainData")
STRATEGIES = ("fBEE", "pBEE", "nBEE", "ncBEE") + BASELINE_NAMES
METHODS = ("IG", "ACT-IG", "IG-fBEE") + STRATEGIES
CLASS_REFERENCES = ("target", "predicted")
PSI_MODES = ("product", "gradient")


def _check_min(settings: dict, key: str, minimum, var_type=int):
    check_type(settings[key], var_type, f"'{key}'")
    if settings[key] < minimum:
        raise ValueError(f"\n'{key}' should be at least {minimum}, "
                         f"got {settings[key]}.")


def _check_range(settings: dict, key: str, minimum: float = 0.0):
    value = settings[key]
    check_type(value, list, f"'{key}'")
    if len(value) != 2:
        raise ValueError(f"\n'{key}' should be a [low, high] pair.")
    for bound in value:
        check_type(bound, (int, float), f"'{key}' bound")
    if not minimum <= value[0] <= value[1]:
        raise ValueError(f"\n'{key}' should be an ordered range above "
                         f"{minimum}, got {value}.")


def _check_members(settings: dict, key: str, allowed: tuple):
    values = settings[key]
    check_type(values, list, f"'{key}'")
    if not values:
        raise ValueError(f"\n'{key}' should not be empty.")
    for value in values:
        if value not in allowed:
            raise ValueError(f"\nUnknown entry '{value}' in '{key}'. "
                             f"Expected any of {allowed}.")


def check_settings(settings: dict) -> bool:
    """
    This function checks the types and ranges of the run settings.
    It raises a TypeError for wrongly typed values and a ValueError for
    values out of range. The layer set itself is checked against the
    model by `attribution.builder.check_layer_set`.
    """

    if settings["model"] not in MODELS:
        raise ValueError(f"\nUnknown model '{settings['model']}'. "
                         f"Expected any of {MODELS}.")
    if settings["metric"] not in METRIC_IDS:
        raise ValueError(f"\nUnknown metric '{settings['metric']}'. "
                         f"Expected any of {METRIC_IDS}.")
    if settings["strategy"] not in STRATEGIES:
        raise ValueError(f"\nUnknown strategy '{settings['strategy']}'. "
                         f"Expected any of {STRATEGIES}.")
    if settings["classReference"] not in CLASS_REFERENCES:
        raise ValueError("\n'classReference' should be one of "
                         f"{CLASS_REFERENCES}.")
    if settings["psi"] not in PSI_MODES:
        raise ValueError(f"\n'psi' should be one of {PSI_MODES}.")

    for key in ("modelSeed", "masterSeed"):
        _check_min(settings, key, 0)
    for key in ("T", "n", "trainSize", "testSize", "trainDataPool",
                "trainDataAverage", "contextDim", "iterations"):
        _check_min(settings, key, 1)
    for key in ("epochs", "solverIterations", "historyTail"):
        _check_min(settings, key, 0)
    for key in ("stepSize", "solverTolerance", "sicBlurSigma"):
        _check_min(settings, key, 0.0, (int, float))
        if settings[key] == 0:
            raise ValueError(f"\n'{key}' should be positive.")
    for key in ("maskFill", "noise", "jitter"):
        check_type(settings[key], (int, float), f"'{key}'")

    for key in ("percentScale", "sharedContext"):
        check_type(settings[key], bool, f"'{key}'")

    check_type(settings["layers"], list, "'layers'")
    if not settings["layers"]:
        raise ValueError("\nThe layer set 'layers' should not be empty.")
    for layer in settings["layers"]:
        check_type(layer, int, "'layers' entry")

    _check_range(settings, "normalSigmaRange", 0.0)
    _check_range(settings, "blurSigmaRange", 0.0)

    _check_members(settings, "metrics", METRIC_IDS)
    _check_members(settings, "methods", METHODS)
    _check_members(settings, "strategies", STRATEGIES)

    for key in ("ablationT", "ablationN"):
        check_type(settings[key], list, f"'{key}'")
        for value in settings[key]:
            check_type(value, int, f"'{key}' entry")
            if value < 1:
                raise ValueError(f"\n'{key}' entries should be at least 1.")

    check_type(settings["outputDir"], str, "'outputDir'")

    return True
