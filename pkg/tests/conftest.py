import numpy as np
import pytest

from v2v_secrecy.channel import ChannelRealization, draw_channels
from v2v_secrecy.harness import reference_config
from v2v_secrecy.phy import LinkGains, eve_combiner
from v2v_secrecy.scenario import ScenarioConfig, build_topology


def make_instance(**overrides):
    cfg = reference_config(**overrides)
    topo = build_topology(cfg)
    ch = draw_channels(cfg, topo)
    w = eve_combiner(ch, cfg)
    return cfg, topo, ch, w, LinkGains.build(ch, topo, w, cfg)


def single_link(g=1.0, h_ve=0.0, h_ce=0.0, h_cv=0.0, **overrides):
    """K=M=Ne=1 realization with the given scalar coefficients."""
    cfg = ScenarioConfig(M=1, K=1, Nt=1, Ne=1, **overrides)
    topo = build_topology(cfg)
    ch = ChannelRealization(
        g=np.array([[g]], complex),
        h_vv=np.zeros((1, 1, 1), complex),
        h_cv=np.array([[h_cv]], complex),
        h_ce=np.array([[h_ce]], complex),
        h_ve=np.array([[[h_ve]]], complex),
    )
    w = eve_combiner(ch, cfg)
    return cfg, topo, ch, w, LinkGains.build(ch, topo, w, cfg)


@pytest.fixture
def inst4():
    return make_instance(seed=3)


# one PASS/FAIL line per acceptance criterion, printed after the run
_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    n, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    _CRITERIA[n] = ("PASS" if rep.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[n]
        line = f"[{status}] {n:2d}. {title}"
        terminalreporter.write_line(f"{line}  ({detail})" if detail else line)
