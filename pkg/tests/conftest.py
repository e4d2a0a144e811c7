import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", deadline=None, max_examples=400)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# (id, params) pairs covering every catalog constructor at small sizes
CATALOG_CASES = [
    ("gradient", {"n": 1}),
    ("gradient", {"n": 2}),
    ("gradient", {"n": 3}),
    ("divergence", {"n": 1}),
    ("divergence", {"n": 2}),
    ("divergence", {"n": 3}),
    ("curl", {"n": 2}),
    ("curl", {"n": 3}),
    ("divcurl", {}),
    ("symder", {"n": 1}),
    ("symder", {"n": 2}),
    ("symder", {"n": 3}),
    ("hodge", {"n": 2, "m": 1}),
    ("hodge", {"n": 3, "m": 1}),
    ("hodge", {"n": 4, "m": 1}),
    ("hodge", {"n": 4, "m": 2}),
    ("laplacian", {"n": 1}),
    ("laplacian", {"n": 2}),
    ("laplacian", {"n": 3}),
    ("kpowers", {"n": 1, "k": 2}),
    ("kpowers", {"n": 2, "k": 2}),
    ("kpowers", {"n": 3, "k": 2}),
]


def case_id(case):
    cid, params = case
    return cid + "".join(f"-{k}{v}" for k, v in params.items())
