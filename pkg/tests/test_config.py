import textwrap

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from eitdsp.config import ConfigError, emit_config, from_mapping, parse_config

MINIMAL = "protocol: storage\nfamily: mlevel\nm: 3\n"


def test_minimal_config_gets_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.numerics.n_cap == 12
    assert cfg.numerics.tail_tol == 1e-10
    assert cfg.g == (1.0,) and cfg.N == (100.0,)
    assert cfg.input.kind == "coherent"
    assert "n_cap: 12" in emit_config(cfg)


def test_mismatched_ensemble_lists_name_g():
    text = "protocol: storage\nfamily: ensemble\nk: 3\ng: [0.1, 0.2]\nN: [10, 10, 10]\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == "g"
    assert str(info.value).startswith("g:")


def test_parse_error_has_line_and_column():
    text = "protocol: storage\ninput:\n  alpha0: [1.0\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line is not None and info.value.column is not None
    assert "line" in str(info.value)


@pytest.mark.parametrize(
    "text,field",
    [
        ("protocol: teleport\n", "protocol"),
        ("protocol: storage\nfamily: qudit\n", "family"),
        ("protocol: storage\nm: 2\n", "m"),
        ("protocol: storage\nfamily: ensemble\nm: 3\n", "m"),
        ("protocol: storage\ng: -1\n", "g[0]"),
        ("protocol: storage\nN: [1, 2]\n", "N"),
        ("protocol: storage\ninput: {kind: squeezed}\n", "input.kind"),
        ("protocol: storage\ninput: {alpha0: abc}\n", "input.alpha0"),
        ("protocol: storage\ninput: {kind: cat, alpha0: 1, beta0: 1, sign: -1}\n", "input.beta0"),
        ("protocol: storage\ninput: {sign: 2}\n", "input.sign"),
        ("protocol: storage\nnumerics: {n_cap: 0}\n", "numerics.n_cap"),
        ("protocol: storage\nnumerics: {tail_tol: 2}\n", "numerics.tail_tol"),
        ("protocol: storage\nnumerics: {typo: 1}\n", "numerics"),
        ("protocol: storage\nextra: 1\n", "config"),
        ("protocol: storage\nm: 4\nschedule: {phi_e: [0.3]}\n", "schedule.phi_e"),
        ("protocol: split\nm: 4\nschedule: {phi_e: [2.0]}\n", "schedule.phi_e"),
        ("protocol: split\nm: 5\nschedule: {phi_e: [0.3]}\n", "schedule.phi_e"),
        ("protocol: split\nfamily: ensemble\nk: 2\n", "family"),
        ("protocol: entangle\nm: 3\ninput: {kind: cat}\n", "m"),
        ("protocol: entangle\nm: 4\n", "input.kind"),
        ("protocol: entangle\nm: 5\ninput: {kind: single-photon}\n", "input.kind"),
        ("protocol: spectrum\nm: 5\n", "schedule.omega"),
        ("protocol: spectrum\nm: 5\ng: [1, 1, 2]\nschedule: {omega: [1, 1, 1]}\n", "g"),
        ("protocol: spectrum\nm: 5\nschedule: {omega: [1, 1, 1]}\nnumerics: {n_cap: 4}\n", "numerics.n_cap"),
        ("protocol: storage\nschedule: {omega: [1]}\n", "schedule.omega"),
        ("protocol: storage\nfamily: ensemble\nk: 2\nschedule: {omega_shape: [1]}\n", "schedule.omega_shape"),
        ("protocol: validate-bosonization\nbosonization: {atoms: [8, 100]}\n", "bosonization.atoms[1]"),
        ("protocol: validate-bosonization\nbosonization: {atoms: [4], excitations: [5]}\n", "bosonization.excitations[0]"),
        ("protocol: validate-bosonization\nbosonization: {atoms: []}\n", "bosonization.atoms"),
    ],
)
def test_semantic_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == field


def test_non_mapping_rejected():
    with pytest.raises(ConfigError):
        parse_config("- 1\n- 2\n")


def test_documented_example_parses():
    text = textwrap.dedent(
        """
        protocol: split
        family: mlevel
        m: 4
        g: [0.1, 0.1]
        N: 100
        input:
          kind: cat
          alpha0: 3.0
          sign: -1
        schedule:
          phi_e: [0.7853981634]
        numerics:
          seed: 7
        output:
          dir: out/split
        """
    )
    cfg = parse_config(text)
    assert cfg.n_channels == 2 and cfg.output_dir == "out/split"
    assert cfg.build_system().m == 4


reals = st.floats(0.05, 5.0, allow_nan=False)


@st.composite
def mappings(draw):
    protocol = draw(st.sampled_from(["verify-algebra", "storage", "split", "entangle", "spectrum", "validate-bosonization"]))
    family = draw(st.sampled_from(["mlevel", "ensemble"]))
    data = {"protocol": protocol, "family": family}
    if family == "mlevel":
        size = draw(st.integers(3, 6))
        data["m"] = size
        n = size - 2
        data["N"] = draw(st.integers(1, 500))
    else:
        size = draw(st.integers(1, 4))
        data["k"] = size
        n = size
        data["N"] = draw(st.lists(st.integers(1, 500), min_size=n, max_size=n))
    data["g"] = draw(st.one_of(reals, st.lists(reals, min_size=n, max_size=n)))
    kind = draw(st.sampled_from(["coherent", "cat", "single-photon"]))
    data["input"] = {"kind": kind, "alpha0": draw(reals), "sign": draw(st.sampled_from([1, -1]))}
    if kind == "cat" and draw(st.booleans()):
        data["input"]["beta0"] = -draw(reals)
    sched = {}
    if draw(st.booleans()):
        sched["sweep_T"] = draw(st.floats(1.0, 1e4))
    if draw(st.booleans()) and n > 1:
        sched["phi_e"] = draw(st.lists(st.floats(0, 1.5), min_size=n - 1, max_size=n - 1))
    if protocol == "spectrum":
        sched["omega"] = draw(st.lists(st.floats(0, 5), min_size=3, max_size=3))
    data["schedule"] = sched
    data["numerics"] = {
        "n_cap": draw(st.integers(6, 14)),
        "seed": draw(st.integers(0, 2**63)),
        "draws": draw(st.integers(1, 60)),
        "tail_tol": draw(st.floats(1e-14, 1e-3)),
    }
    if draw(st.booleans()):
        data["numerics"]["dt"] = draw(st.floats(1e-4, 1.0))
    data["output"] = {"dir": draw(st.text("abcxyz/_", min_size=1, max_size=10))}
    return data


@given(mappings())
def test_emit_parse_round_trip(data):
    try:
        cfg = from_mapping(data)
    except ConfigError:
        assume(False)
    again = parse_config(emit_config(cfg))
    assert again == cfg
    assert emit_config(again) == emit_config(cfg)
