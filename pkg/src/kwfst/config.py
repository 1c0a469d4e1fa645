"""Merged run configuration: a plain-text key=value file overridden by
command-line flags.  Unknown keys are rejected against the schema below."""

from dataclasses import dataclass, field

from .decoder import DecoderConfig
from .errors import UsageError
from .phonology import FeatureWeights


def _k_value(raw):
    if raw in ("auto", "1", "3", 1, 3):
        return raw if raw == "auto" else int(raw)
    raise UsageError(f"decoder.k must be 1, 3 or auto, got {raw!r}")


# key -> (parser, default)
SCHEMA = {
    "decoder.k": (_k_value, "auto"),
    "decoder.lambda_sub": (float, 4.0),
    "decoder.beta_sub": (float, 0.5),
    "decoder.c_del": (float, 3.0),
    "decoder.c_ins": (float, 2.5),
    "decoder.c_rep": (float, 1.0),
    "decoder.tau_conf": (float, 0.85),
    "scoring.backend": (str, "mock"),
    "scoring.endpoint": (str, ""),
    "scoring.model": (str, ""),
    "scoring.temperature": (float, 0.1),
    "scoring.runs": (int, 5),
    "scoring.examples_path": (str, ""),
    "phonology.inventory_path": (str, ""),
    "phonology.w_cons_class": (float, 0.25),
    "phonology.w_cons_manner": (float, 0.30),
    "phonology.w_cons_place": (float, 0.25),
    "phonology.w_cons_voicing": (float, 0.20),
    "phonology.w_vowel_class": (float, 0.25),
    "phonology.w_vowel_height": (float, 0.30),
    "phonology.w_vowel_backness": (float, 0.25),
    "phonology.w_vowel_rounding": (float, 0.10),
    "phonology.w_vowel_tenseness": (float, 0.10),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = {k: default for k, (_, default) in SCHEMA.items()}
        for key, raw in self.values.items():
            if key not in SCHEMA:
                raise UsageError(f"unknown configuration key {key!r}")
            parser, _ = SCHEMA[key]
            try:
                merged[key] = parser(raw)
            except (TypeError, ValueError):
                raise UsageError(f"bad value for {key}: {raw!r}")
        self.values = merged

    def __getitem__(self, key):
        if key not in SCHEMA:
            raise UsageError(f"unknown configuration key {key!r}")
        return self.values[key]

    def decoder_config(self):
        v = self.values
        return DecoderConfig(k=v["decoder.k"],
                             lambda_sub=v["decoder.lambda_sub"],
                             beta_sub=v["decoder.beta_sub"],
                             c_del=v["decoder.c_del"],
                             c_ins=v["decoder.c_ins"],
                             c_rep=v["decoder.c_rep"],
                             tau_conf=v["decoder.tau_conf"])

    def feature_weights(self):
        v = self.values
        return FeatureWeights(
            consonant={"class": v["phonology.w_cons_class"],
                       "manner": v["phonology.w_cons_manner"],
                       "place": v["phonology.w_cons_place"],
                       "voicing": v["phonology.w_cons_voicing"]},
            vowel={"class": v["phonology.w_vowel_class"],
                   "height": v["phonology.w_vowel_height"],
                   "backness": v["phonology.w_vowel_backness"],
                   "rounding": v["phonology.w_vowel_rounding"],
                   "tenseness": v["phonology.w_vowel_tenseness"]})


def parse_config_file(path):
    values = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key] = value
    return values


def load_config(path=None, overrides=None):
    values = parse_config_file(path) if path else {}
    values.update(overrides or {})
    return RunConfig(values)
